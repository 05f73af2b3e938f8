#include "mvk/localcov.hpp"

#include "mvk/error.hpp"
#include "mvk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvk {

namespace {

void symmetrize(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = r + 1; c < m.cols(); ++c) {
      const double v = 0.5 * (m(r, c) + m(c, r));
      m(r, c) = v;
      m(c, r) = v;
    }
  }
}

}  // namespace

void NeighborhoodSpec::validate() const {
  if (mode == Mode::Radius && !(radius > 0.0)) {
    fail(ErrorCode::InvalidArgument, "neighborhood radius must be positive");
  }
  if (mode == Mode::Knn && k < 2) fail(ErrorCode::InvalidArgument, "kNN neighborhoods need k >= 2");
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) fail(ErrorCode::InsufficientSamples, "covariance needs at least 2 points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);
  symmetrize(c);
  return c;
}

LocalCovariance covariance_from_cloud(const PointCloud& cloud, std::size_t view_id) {
  if (cloud.points.rows() < 2) fail(ErrorCode::InsufficientSamples, "cloud has fewer than 2 points");
  if (!(cloud.dt > 0.0)) fail(ErrorCode::InvalidArgument, "cloud dt must be positive");
  LocalCovariance out;
  out.matrix = sample_covariance(cloud.points) / cloud.dt;
  out.point_index = cloud.center_index;
  out.view_id = view_id;
  return out;
}

LocalCovariance covariance_from_simulation(const Eigen::VectorXd& state, const ObservationMap& map,
                                           std::size_t n_c, double dt, std::uint64_t seed,
                                           const std::vector<Interval>& reflect,
                                           std::size_t point_index, std::size_t view_id) {
  if (n_c < 2) fail(ErrorCode::InsufficientSamples, "cloud has fewer than 2 points");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "cloud dt must be positive");
  const Eigen::Index m = map_output_dim(map);
  // Welford accumulation of mean and co-moment.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd comoment = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd delta(m);
  double count = 0.0;
  simulate_cloud(state, map, n_c, dt, seed, reflect, [&](const Eigen::VectorXd& x) {
    count += 1.0;
    delta = x - mean;
    mean += delta / count;
    for (Eigen::Index a = 0; a < m; ++a) {
      const double da = x(a) - mean(a);
      for (Eigen::Index b = 0; b <= a; ++b) comoment(a, b) += delta(b) * da;
    }
  });
  LocalCovariance out;
  out.matrix = comoment.selfadjointView<Eigen::Lower>();
  out.matrix /= (count - 1.0) * dt;
  out.point_index = point_index;
  out.view_id = view_id;
  return out;
}

std::vector<std::size_t> neighbors(const ViewMatrix& view, std::size_t i, const NeighborhoodSpec& spec) {
  spec.validate();
  if (spec.mode == NeighborhoodSpec::Mode::Cloud) {
    fail(ErrorCode::InvalidArgument, "cloud neighborhoods come from simulation, not from a view");
  }
  const auto n = static_cast<std::size_t>(view.rows());
  if (i >= n) fail(ErrorCode::InvalidArgument, "point index out of range");
  const auto center = view.row(static_cast<Eigen::Index>(i));
  std::vector<double> dist(n);
  for (std::size_t j = 0; j < n; ++j) {
    dist[j] = (view.row(static_cast<Eigen::Index>(j)) - center).squaredNorm();
  }
  std::vector<std::size_t> out;
  if (spec.mode == NeighborhoodSpec::Mode::Radius) {
    const double r2 = spec.radius * spec.radius;
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[j] <= r2) out.push_back(j);
    }
    return out;
  }
  out.resize(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  const std::size_t k = std::min(spec.k, n);
  auto closer = [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), closer);
  out.resize(k);
  std::sort(out.begin(), out.end());
  return out;
}

LocalCovariance covariance_from_neighborhood(const ViewMatrix& view, std::size_t i,
                                             const NeighborhoodSpec& spec, std::size_t view_id) {
  const auto idx = neighbors(view, i, spec);
  if (idx.size() < 2) {
    fail(ErrorCode::InsufficientSamples, "point " + std::to_string(i) + " has fewer than 2 neighbors");
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(idx.size()), view.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    pts.row(static_cast<Eigen::Index>(r)) = view.row(static_cast<Eigen::Index>(idx[r]));
  }
  LocalCovariance out;
  out.matrix = sample_covariance(pts);
  out.point_index = i;
  out.view_id = view_id;
  return out;
}

std::vector<LocalCovariance> neighborhood_covariances(const ViewMatrix& view,
                                                      const NeighborhoodSpec& spec,
                                                      std::size_t view_id, int workers) {
  std::vector<LocalCovariance> out(static_cast<std::size_t>(view.rows()));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = covariance_from_neighborhood(view, i, spec, view_id);
  });
  return out;
}

int numerical_rank(const Eigen::MatrixXd& c, double gamma) {
  if (c.size() == 0) return 0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > gamma) ++rank;
  }
  return rank;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& c, double gamma) {
  if (c.rows() != c.cols()) fail(ErrorCode::ShapeMismatch, "pseudo_inverse needs a square matrix");
  Eigen::MatrixXd sym = c;
  symmetrize(sym);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorCode::SpectralFailure, "eigendecomposition failed");
  Eigen::VectorXd inv = eig.eigenvalues();
  for (Eigen::Index k = 0; k < inv.size(); ++k) inv(k) = inv(k) > gamma ? 1.0 / inv(k) : 0.0;
  Eigen::MatrixXd out = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  symmetrize(out);
  return out;
}

int median_rank(std::vector<int> ranks) {
  if (ranks.empty()) fail(ErrorCode::EmptyInput, "median of an empty rank list");
  const std::size_t k = (ranks.size() + 1) / 2 - 1;
  std::nth_element(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(k), ranks.end());
  return ranks[k];
}

double default_gamma(const std::vector<std::vector<LocalCovariance>>& per_view) {
  double largest = 0.0;
  for (const auto& view : per_view) {
    for (const auto& c : view) {
      if (c.matrix.size() == 0) continue;
      largest = std::max(largest, Eigen::JacobiSVD<Eigen::MatrixXd>(c.matrix).singularValues()(0));
    }
  }
  return 1e-6 * largest;
}

void assign_ranks(std::vector<std::vector<LocalCovariance>>& per_view, double gamma) {
  for (auto& view : per_view) {
    for (auto& c : view) c.numerical_rank = numerical_rank(c.matrix, gamma);
  }
}

}  // namespace mvk
