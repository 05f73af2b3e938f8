#pragma once

#include "mvk/dataset.hpp"
#include "mvk/localcov.hpp"
#include "mvk/mahalanobis.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mvk {

/// Full: exp(-d/eps). Half: exp(-d/(2 eps)).
enum class KernelConvention { Half, Full };

double convention_factor(KernelConvention c);
KernelConvention parse_convention(const std::string& name);
const char* to_string(KernelConvention c);

struct KernelMatrix {
  Eigen::MatrixXd values;
  double epsilon = 1.0;
  KernelConvention convention = KernelConvention::Full;

  Eigen::Index size() const { return values.rows(); }
};

/// Empty string when symmetric (exactly), unit diagonal, entries in (0, 1];
/// otherwise a description of the first violation.
std::string kernel_violation(const KernelMatrix& k);

/// exp(-d / (c eps)) entrywise, floored at the smallest normal double so
/// entries stay strictly positive.
KernelMatrix kernel_from_distances(const Eigen::MatrixXd& distances, double epsilon,
                                   KernelConvention convention = KernelConvention::Full);

double kernel_entry(double distance, double epsilon, KernelConvention convention);

struct DistanceTensor {
  std::vector<Eigen::MatrixXd> per_view;
  /// point_valid[l][i]; pair (i, j) is valid in view l iff both points are.
  /// Empty means every pair is valid.
  std::vector<std::vector<bool>> point_valid;

  bool valid(std::size_t l, std::size_t i, std::size_t j) const {
    return point_valid.empty() || (point_valid[l][i] && point_valid[l][j]);
  }
};

/// Entrywise minimum over valid views. Throws NoValidView.
Eigen::MatrixXd fuse_min_distance(const DistanceTensor& distances);

/// Mean of the entries falling in the most populated of `bins` equal bins on
/// [0, 1]; ties go to the larger bin.
double fuse_histogram_mode(const std::vector<double>& entries, std::size_t bins);

enum class Fusion { Min, Max, Histogram };
Fusion parse_fusion(const std::string& name);
const char* to_string(Fusion f);

struct Algorithm1Options {
  double epsilon = 0.02;
  KernelConvention convention = KernelConvention::Full;
  /// Use gamma-thresholded pseudo-inverses for singular covariances instead of failing.
  bool pinv_fallback = true;
  double gamma = -1.0;  // negative: default_gamma
  int workers = 1;
};

struct Algorithm1Result {
  KernelMatrix kernel;
  Eigen::MatrixXd distances;  // fused min distances
  std::size_t fallbacks = 0;  // covariances inverted through the pseudo-inverse
};

/// covariances[l][i]: covariance of point i in view l.
Algorithm1Result algorithm1_kernel(const MultiViewDataset& ds,
                                   const std::vector<std::vector<LocalCovariance>>& covariances,
                                   const Algorithm1Options& options);

Algorithm1Result algorithm1_kernel(const MultiViewDataset& ds,
                                   const std::vector<std::vector<PointCloud>>& clouds,
                                   const Algorithm1Options& options);

struct Algorithm2Options {
  NeighborhoodSpec neighborhood = NeighborhoodSpec::nearest(20);
  double epsilon = 5.0;
  std::vector<double> view_epsilons;  // optional per-view override
  double gamma = -1.0;                // negative: default_gamma
  Fusion fusion = Fusion::Max;
  std::size_t histogram_bins = 20;
  KernelConvention convention = KernelConvention::Full;
  int workers = 1;
};

struct Algorithm2Result {
  KernelMatrix kernel;
  std::vector<std::vector<int>> ranks;  // [view][point]
  int median_rank = 0;
  double gamma = 0.0;
  std::size_t unmatched_pairs = 0;  // pairs failing the rank gate in every view
  double floor_value = 0.0;         // kernel value given to unmatched pairs
};

Algorithm2Result algorithm2_kernel(const MultiViewDataset& ds, const Algorithm2Options& options);

Algorithm2Result algorithm2_kernel(const MultiViewDataset& ds,
                                   std::vector<std::vector<LocalCovariance>> covariances,
                                   const Algorithm2Options& options);

}  // namespace mvk
