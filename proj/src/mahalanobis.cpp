#include "mvk/mahalanobis.hpp"

#include "mvk/error.hpp"
#include "mvk/parallel.hpp"

#include <algorithm>

namespace mvk {

namespace {

bool cholesky(const Eigen::MatrixXd& c, Eigen::MatrixXd& lower) {
  if (c.rows() != c.cols() || c.rows() == 0) return false;
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.diagonal().minCoeff() > 0.0;
}

}  // namespace

Precision Precision::inverse(const Eigen::MatrixXd& c) {
  Precision p;
  if (!cholesky(c, p.matrix_)) fail(ErrorCode::SingularCovariance, "covariance is not invertible");
  return p;
}

Precision Precision::pseudo(const Eigen::MatrixXd& c, double gamma) {
  Precision p;
  p.matrix_ = pseudo_inverse(c, gamma);
  p.pseudo_ = true;
  return p;
}

Precision Precision::inverse_or_pseudo(const Eigen::MatrixXd& c, double gamma, bool& fell_back) {
  Precision p;
  fell_back = !cholesky(c, p.matrix_);
  if (fell_back) return pseudo(c, gamma);
  return p;
}

double Precision::quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != matrix_.rows()) fail(ErrorCode::ShapeMismatch, "vector and covariance sizes differ");
  if (pseudo_) return v.dot(matrix_ * v);
  return matrix_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
}

double symmetric_distance(const Precision& pi, const Precision& pj,
                          const Eigen::Ref<const Eigen::VectorXd>& diff) {
  return std::max(0.0, 0.5 * (pi.quadratic(diff) + pj.quadratic(diff)));
}

PairDistance mahalanobis_inv(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                             const LocalCovariance& ci, const LocalCovariance& cj) {
  const Eigen::VectorXd diff = xi - xj;
  return {symmetric_distance(Precision::inverse(ci.matrix), Precision::inverse(cj.matrix), diff),
          ci.view_id, ci.point_index, cj.point_index};
}

PairDistance mahalanobis_pinv(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                              const LocalCovariance& ci, const LocalCovariance& cj, double gamma) {
  const Eigen::VectorXd diff = xi - xj;
  return {symmetric_distance(Precision::pseudo(ci.matrix, gamma), Precision::pseudo(cj.matrix, gamma),
                             diff),
          ci.view_id, ci.point_index, cj.point_index};
}

Eigen::MatrixXd pairwise_distances(const ViewMatrix& view, const std::vector<Precision>& precisions,
                                   int workers) {
  const auto n = static_cast<std::size_t>(view.rows());
  if (precisions.size() != n) fail(ErrorCode::ShapeMismatch, "one precision is required per point");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(view.rows(), view.rows());
  parallel_for(n, workers, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::VectorXd diff(view.cols());
    for (Eigen::Index j = ii + 1; j < view.rows(); ++j) {
      diff = (view.row(ii) - view.row(j)).transpose();
      out(ii, j) = symmetric_distance(precisions[i], precisions[static_cast<std::size_t>(j)], diff);
    }
  });
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < out.cols(); ++j) out(j, i) = out(i, j);
  }
  return out;
}

}  // namespace mvk
