#pragma once

#include "mvk/dataset.hpp"
#include "mvk/localcov.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mvk {

struct PairDistance {
  double value = 0.0;
  std::size_t view_id = 0;
  std::size_t i = 0;
  std::size_t j = 0;
};

/// Evaluates v^T C^{-1} v (Cholesky solve) or v^T C^+ v (gamma-thresholded).
class Precision {
 public:
  Precision() = default;

  /// Throws SingularCovariance when C is not positive definite.
  static Precision inverse(const Eigen::MatrixXd& c);
  static Precision pseudo(const Eigen::MatrixXd& c, double gamma);
  /// Inverse when positive definite, otherwise the pseudo-inverse; sets fell_back.
  static Precision inverse_or_pseudo(const Eigen::MatrixXd& c, double gamma, bool& fell_back);

  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::Index dim() const { return matrix_.rows(); }
  bool is_pseudo() const { return pseudo_; }

 private:
  Eigen::MatrixXd matrix_;  // lower Cholesky factor, or the pseudo-inverse
  bool pseudo_ = false;
};

/// 0.5 * (q_i(d) + q_j(d)), d = x_i - x_j, clamped at 0.
double symmetric_distance(const Precision& pi, const Precision& pj,
                          const Eigen::Ref<const Eigen::VectorXd>& diff);

PairDistance mahalanobis_inv(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                             const LocalCovariance& ci, const LocalCovariance& cj);

PairDistance mahalanobis_pinv(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                              const LocalCovariance& ci, const LocalCovariance& cj, double gamma);

/// n x n symmetric matrix of symmetric_distance over all pairs; zero diagonal.
Eigen::MatrixXd pairwise_distances(const ViewMatrix& view, const std::vector<Precision>& precisions,
                                   int workers = 1);

}  // namespace mvk
