#pragma once

#include "mvk/dataset.hpp"
#include "mvk/multiview.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mvk {

/// exp(-|theta_i - theta_j|^2 / (c eps)) with c = 2 (half) or 1 (full).
KernelMatrix ground_truth_kernel(const Eigen::MatrixXd& theta, double epsilon,
                                 KernelConvention convention);

/// |K - K_hat|_F / |K_hat|_F. Not symmetric in its arguments.
double q_factor(const KernelMatrix& k, const KernelMatrix& k_hat);
double q_factor(const Eigen::MatrixXd& k, const Eigen::MatrixXd& k_hat);

struct ErrorCurvePoint {
  double radius = 0.0;
  double mean_error = 0.0;
  std::size_t pairs = 0;
};

struct ErrorCurveOptions {
  std::size_t view = 0;
  std::size_t max_pairs = 10000;
  std::uint64_t seed = 0;
  double gamma_relative = 1e-6;
  int workers = 1;
};

/// For each radius: covariances from radius neighborhoods in the view and of
/// the matching ground-truth values, then the mean |ambient - intrinsic|
/// pseudo-inverse Mahalanobis distance over pairs (i, nearest neighbor of i).
/// Points with fewer than two neighbors are skipped. At most max_pairs pairs
/// (seeded subsample) are used per radius.
std::vector<ErrorCurvePoint> distance_error_curve(const MultiViewDataset& ds,
                                                  const std::vector<double>& radii,
                                                  const ErrorCurveOptions& options = {});

/// RMS radial residual of an algebraic circle fit divided by the fitted radius.
/// Throws DegenerateFit for collinear input.
double circle_fit_residual(const Eigen::MatrixXd& embedding);

/// max over s = +-1 of |mean exp(i(alpha - s theta))|, alpha = atan2(y, x).
double angle_correlation(const Eigen::MatrixXd& embedding, const Eigen::VectorXd& theta);

/// Largest gap between consecutive angles of the points about their centroid.
double max_angular_gap(const Eigen::MatrixXd& embedding);

/// Pearson correlation of average ranks.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mvk
