#include "mvk/metrics.hpp"

#include "mvk/error.hpp"
#include "mvk/localcov.hpp"
#include "mvk/mahalanobis.hpp"
#include "mvk/parallel.hpp"
#include "mvk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

namespace mvk {

KernelMatrix ground_truth_kernel(const Eigen::MatrixXd& theta, double epsilon,
                                 KernelConvention convention) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!theta.allFinite()) fail(ErrorCode::InvalidArgument, "ground truth has non-finite entries");
  const Eigen::Index n = theta.rows();
  KernelMatrix k{Eigen::MatrixXd::Identity(n, n), epsilon, convention};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = kernel_entry((theta.row(i) - theta.row(j)).squaredNorm(), epsilon, convention);
      k.values(i, j) = v;
      k.values(j, i) = v;
    }
  }
  return k;
}

double q_factor(const Eigen::MatrixXd& k, const Eigen::MatrixXd& k_hat) {
  if (k.rows() != k_hat.rows() || k.cols() != k_hat.cols()) {
    fail(ErrorCode::ShapeMismatch, "kernels differ in size");
  }
  const double denom = k_hat.norm();
  if (!(denom > 0.0)) fail(ErrorCode::InvalidArgument, "estimated kernel has zero norm");
  return (k - k_hat).norm() / denom;
}

double q_factor(const KernelMatrix& k, const KernelMatrix& k_hat) { return q_factor(k.values, k_hat.values); }

std::vector<ErrorCurvePoint> distance_error_curve(const MultiViewDataset& ds,
                                                  const std::vector<double>& radii,
                                                  const ErrorCurveOptions& options) {
  const Eigen::MatrixXd& theta = ds.ground_truth();
  const ViewMatrix& view = ds.view(options.view);
  const auto n = ds.size();

  // Nearest ambient neighbor of every point; ties go to the lower index.
  std::vector<std::size_t> nearest(n, 0);
  parallel_for(n, options.workers, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (view.row(static_cast<Eigen::Index>(i)) - view.row(static_cast<Eigen::Index>(j)))
                           .squaredNorm();
      if (d < best) {
        best = d;
        nearest[i] = j;
      }
    }
  });

  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  if (n > options.max_pairs) {
    Rng rng(derive_seed(options.seed, 0x6572726f72));
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(options.max_pairs);
    std::sort(sample.begin(), sample.end());
  }

  std::vector<ErrorCurvePoint> curve;
  for (double radius : radii) {
    if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "radii must be positive");
    const auto spec = NeighborhoodSpec::within(radius);
    std::vector<Eigen::MatrixXd> ambient(n);
    std::vector<Eigen::MatrixXd> intrinsic(n);
    std::vector<char> ok(n, 0);
    parallel_for(n, options.workers, [&](std::size_t i) {
      const auto idx = neighbors(view, i, spec);
      if (idx.size() < 2) return;
      Eigen::MatrixXd a(static_cast<Eigen::Index>(idx.size()), view.cols());
      Eigen::MatrixXd t(static_cast<Eigen::Index>(idx.size()), theta.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        a.row(static_cast<Eigen::Index>(r)) = view.row(static_cast<Eigen::Index>(idx[r]));
        t.row(static_cast<Eigen::Index>(r)) = theta.row(static_cast<Eigen::Index>(idx[r]));
      }
      ambient[i] = sample_covariance(a);
      intrinsic[i] = sample_covariance(t);
      ok[i] = intrinsic[i].trace() > 0.0 ? 1 : 0;
    });

    double amb_max = 0.0;
    double int_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!ok[i]) continue;
      amb_max = std::max(amb_max, Eigen::JacobiSVD<Eigen::MatrixXd>(ambient[i]).singularValues()(0));
      int_max = std::max(int_max, Eigen::JacobiSVD<Eigen::MatrixXd>(intrinsic[i]).singularValues()(0));
    }
    const double amb_gamma = options.gamma_relative * amb_max;
    const double int_gamma = options.gamma_relative * int_max;

    std::vector<Precision> amb_prec(n);
    std::vector<Precision> int_prec(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
      if (!ok[i]) return;
      amb_prec[i] = Precision::pseudo(ambient[i], amb_gamma);
      int_prec[i] = Precision::pseudo(intrinsic[i], int_gamma);
    });

    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i : sample) {
      const std::size_t j = nearest[i];
      if (!ok[i] || !ok[j] || i == j) continue;
      const Eigen::VectorXd dx =
          (view.row(static_cast<Eigen::Index>(i)) - view.row(static_cast<Eigen::Index>(j))).transpose();
      const Eigen::VectorXd dt =
          (theta.row(static_cast<Eigen::Index>(i)) - theta.row(static_cast<Eigen::Index>(j))).transpose();
      sum += std::abs(symmetric_distance(amb_prec[i], amb_prec[j], dx) -
                      symmetric_distance(int_prec[i], int_prec[j], dt));
      ++used;
    }
    if (used == 0) {
      fail(ErrorCode::InsufficientSamples,
           "no pair has two neighborhoods at radius " + std::to_string(radius));
    }
    curve.push_back({radius, sum / static_cast<double>(used), used});
  }
  return curve;
}

double circle_fit_residual(const Eigen::MatrixXd& e) {
  if (e.cols() != 2) fail(ErrorCode::ShapeMismatch, "circle fit needs n x 2 coordinates");
  if (e.rows() < 3) fail(ErrorCode::DegenerateFit, "circle fit needs at least 3 points");
  // Center and scale first so the fit is well conditioned at any embedding scale.
  const Eigen::RowVector2d mean = e.colwise().mean();
  Eigen::MatrixXd p = e.rowwise() - mean;
  const double scale = std::sqrt(p.rowwise().squaredNorm().mean());
  if (!(scale > 0.0)) fail(ErrorCode::DegenerateFit, "all points coincide");
  p /= scale;

  Eigen::MatrixXd a(p.rows(), 3);
  a.col(0) = 2.0 * p.col(0);
  a.col(1) = 2.0 * p.col(1);
  a.col(2).setOnes();
  const Eigen::VectorXd b = p.rowwise().squaredNorm();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) fail(ErrorCode::DegenerateFit, "points are collinear");
  const Eigen::Vector3d s = qr.solve(b);
  const double r2 = s(2) + s(0) * s(0) + s(1) * s(1);
  if (!(r2 > 0.0)) fail(ErrorCode::DegenerateFit, "fit has no real radius");
  const double r = std::sqrt(r2);
  const Eigen::RowVector2d c(s(0), s(1));
  const Eigen::VectorXd radial = ((p.rowwise() - c).rowwise().norm().array() - r).matrix();
  return std::sqrt(radial.squaredNorm() / static_cast<double>(p.rows())) / r;
}

double angle_correlation(const Eigen::MatrixXd& e, const Eigen::VectorXd& theta) {
  if (theta.size() == 0) fail(ErrorCode::MissingGroundTruth, "angle correlation needs ground truth");
  if (e.cols() != 2 || e.rows() != theta.size()) {
    fail(ErrorCode::ShapeMismatch, "embedding must be n x 2 with one angle per row");
  }
  std::complex<double> same{0.0, 0.0};
  std::complex<double> flipped{0.0, 0.0};
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double alpha = std::atan2(e(i, 1), e(i, 0));
    same += std::polar(1.0, alpha - theta(i));
    flipped += std::polar(1.0, alpha + theta(i));
  }
  const double n = static_cast<double>(e.rows());
  return std::max(std::abs(same), std::abs(flipped)) / n;
}

double max_angular_gap(const Eigen::MatrixXd& e) {
  if (e.cols() != 2 || e.rows() < 1) fail(ErrorCode::ShapeMismatch, "embedding must be n x 2");
  const Eigen::RowVector2d mean = e.colwise().mean();
  std::vector<double> angles(static_cast<std::size_t>(e.rows()));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    angles[static_cast<std::size_t>(i)] = std::atan2(e(i, 1) - mean(1), e(i, 0) - mean(0));
  }
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t k = 1; k < angles.size(); ++k) gap = std::max(gap, angles[k] - angles[k - 1]);
  return gap;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    while (e + 1 < order.size() && v[order[e + 1]] == v[order[s]]) ++e;
    const double r = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t k = s; k <= e; ++k) ranks[order[k]] = r;
    s = e + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCode::ShapeMismatch, "sequences differ in length");
  if (x.size() < 2) fail(ErrorCode::InsufficientSamples, "correlation needs at least 2 values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const Eigen::Map<const Eigen::VectorXd> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
  const Eigen::Map<const Eigen::VectorXd> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  if (!(denom > 0.0)) fail(ErrorCode::InvalidArgument, "correlation of a constant sequence");
  return ca.dot(cb) / denom;
}

}  // namespace mvk
