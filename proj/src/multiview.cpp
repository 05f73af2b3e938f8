#include "mvk/multiview.hpp"

#include "mvk/error.hpp"
#include "mvk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvk {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();
constexpr double kUnmatched = -1.0;

void check_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
}

struct FuseResult {
  Eigen::MatrixXd kernel;     // kUnmatched where no view is valid
  Eigen::MatrixXd distances;  // fused min distance (only when requested)
  std::size_t unmatched = 0;
};

/// Computes every pair's per-view distances on the fly and reduces them.
FuseResult fuse_views(const MultiViewDataset& ds, const std::vector<std::vector<Precision>>& prec,
                      const std::vector<std::vector<bool>>& point_valid,
                      const std::vector<double>& eps, double global_eps, Fusion fusion,
                      std::size_t bins, KernelConvention convention, bool want_distances,
                      int workers) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const std::size_t zeta = ds.num_views();
  FuseResult out;
  out.kernel = Eigen::MatrixXd::Identity(n, n);
  if (want_distances) out.distances = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::size_t> unmatched_per_row(static_cast<std::size_t>(n), 0);

  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    std::vector<double> entries;
    entries.reserve(zeta);
    Eigen::VectorXd diff;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      entries.clear();
      double dmin = std::numeric_limits<double>::infinity();
      double kmax = kUnmatched;
      for (std::size_t l = 0; l < zeta; ++l) {
        if (!point_valid.empty() && !(point_valid[l][iu] && point_valid[l][ju])) continue;
        const auto& v = ds.view(l);
        diff = (v.row(i) - v.row(j)).transpose();
        const double d = symmetric_distance(prec[l][iu], prec[l][ju], diff);
        dmin = std::min(dmin, d);
        const double k = kernel_entry(d, eps[l], convention);
        kmax = std::max(kmax, k);
        entries.push_back(k);
      }
      double value = kUnmatched;
      if (!entries.empty()) {
        switch (fusion) {
          case Fusion::Min: value = kernel_entry(dmin, global_eps, convention); break;
          case Fusion::Max: value = kmax; break;
          case Fusion::Histogram: value = fuse_histogram_mode(entries, bins); break;
        }
      } else {
        ++unmatched_per_row[iu];
      }
      out.kernel(i, j) = value;
      if (want_distances) out.distances(i, j) = entries.empty() ? kUnmatched : dmin;
    }
  });

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.kernel(j, i) = out.kernel(i, j);
      if (want_distances) out.distances(j, i) = out.distances(i, j);
    }
  }
  for (auto c : unmatched_per_row) out.unmatched += c;
  return out;
}

std::vector<double> view_eps(std::size_t zeta, double eps, const std::vector<double>& overrides) {
  check_epsilon(eps);
  if (overrides.empty()) return std::vector<double>(zeta, eps);
  if (overrides.size() != zeta) fail(ErrorCode::ConfigError, "one epsilon is required per view");
  for (double e : overrides) check_epsilon(e);
  return overrides;
}

void check_covariances(const MultiViewDataset& ds,
                       const std::vector<std::vector<LocalCovariance>>& covariances) {
  if (covariances.size() != ds.num_views()) {
    fail(ErrorCode::ShapeMismatch, "one covariance set is required per view");
  }
  for (std::size_t l = 0; l < covariances.size(); ++l) {
    if (covariances[l].size() != ds.size()) {
      fail(ErrorCode::ShapeMismatch, "view " + std::to_string(l) + " needs one covariance per point");
    }
    const auto m = ds.view(l).cols();
    for (const auto& c : covariances[l]) {
      if (c.matrix.rows() != m || c.matrix.cols() != m) {
        fail(ErrorCode::ShapeMismatch, "covariance size differs from view width");
      }
    }
  }
}

}  // namespace

double convention_factor(KernelConvention c) { return c == KernelConvention::Half ? 2.0 : 1.0; }

KernelConvention parse_convention(const std::string& name) {
  if (name == "half") return KernelConvention::Half;
  if (name == "full") return KernelConvention::Full;
  fail(ErrorCode::ConfigError, "unknown kernel convention '" + name + "' (expected half or full)");
}

const char* to_string(KernelConvention c) { return c == KernelConvention::Half ? "half" : "full"; }

Fusion parse_fusion(const std::string& name) {
  if (name == "min") return Fusion::Min;
  if (name == "max") return Fusion::Max;
  if (name == "histogram") return Fusion::Histogram;
  fail(ErrorCode::ConfigError, "unknown fusion '" + name + "' (expected min, max or histogram)");
}

const char* to_string(Fusion f) {
  switch (f) {
    case Fusion::Min: return "min";
    case Fusion::Max: return "max";
    case Fusion::Histogram: return "histogram";
  }
  return "unknown";
}

double kernel_entry(double distance, double epsilon, KernelConvention convention) {
  return std::max(kTiny, std::exp(-distance / (convention_factor(convention) * epsilon)));
}

std::string kernel_violation(const KernelMatrix& k) {
  const auto& v = k.values;
  if (v.rows() != v.cols()) return "kernel is not square";
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    if (v(i, i) != 1.0) return "diagonal entry " + std::to_string(i) + " is not 1";
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double x = v(i, j);
      if (!(x > 0.0 && x <= 1.0)) {
        return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside (0, 1]";
      }
      if (x != v(j, i)) return "kernel is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")";
    }
  }
  return {};
}

KernelMatrix kernel_from_distances(const Eigen::MatrixXd& distances, double epsilon,
                                   KernelConvention convention) {
  check_epsilon(epsilon);
  if (distances.rows() != distances.cols()) fail(ErrorCode::ShapeMismatch, "distance matrix is not square");
  KernelMatrix k{distances.unaryExpr([&](double d) { return kernel_entry(d, epsilon, convention); }),
                 epsilon, convention};
  k.values.diagonal().setOnes();
  return k;
}

Eigen::MatrixXd fuse_min_distance(const DistanceTensor& t) {
  if (t.per_view.empty()) fail(ErrorCode::EmptyInput, "no views to fuse");
  const auto n = t.per_view.front().rows();
  for (const auto& d : t.per_view) {
    if (d.rows() != n || d.cols() != n) fail(ErrorCode::ShapeMismatch, "distance matrices differ in size");
  }
  if (!t.point_valid.empty() && t.point_valid.size() != t.per_view.size()) {
    fail(ErrorCode::ShapeMismatch, "validity mask needs one entry per view");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < t.per_view.size(); ++l) {
        if (t.valid(l, static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
          best = std::min(best, t.per_view[l](i, j));
        }
      }
      if (!std::isfinite(best)) {
        fail(ErrorCode::NoValidView,
             "no valid view for pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      out(i, j) = best;
      out(j, i) = best;
    }
  }
  return out;
}

double fuse_histogram_mode(const std::vector<double>& entries, std::size_t bins) {
  if (entries.empty()) fail(ErrorCode::EmptyInput, "histogram of no entries");
  if (bins == 0) fail(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> sum(bins, 0.0);
  for (double v : entries) {
    const double scaled = std::clamp(v, 0.0, 1.0) * static_cast<double>(bins);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(scaled));
    ++count[b];
    sum[b] += v;
  }
  std::size_t best = bins - 1;
  for (std::size_t b = bins; b-- > 0;) {
    if (count[b] > count[best]) best = b;
  }
  const double mean = sum[best] / static_cast<double>(count[best]);
  // The mean of one bin can drift by an ulp outside the input range.
  const auto [lo, hi] = std::minmax_element(entries.begin(), entries.end());
  return std::clamp(mean, *lo, *hi);
}

Algorithm1Result algorithm1_kernel(const MultiViewDataset& ds,
                                   const std::vector<std::vector<LocalCovariance>>& covariances,
                                   const Algorithm1Options& options) {
  check_epsilon(options.epsilon);
  check_covariances(ds, covariances);
  const double gamma = options.gamma >= 0.0 ? options.gamma : default_gamma(covariances);

  Algorithm1Result result;
  std::vector<std::vector<Precision>> prec(ds.num_views());
  for (std::size_t l = 0; l < ds.num_views(); ++l) {
    prec[l].resize(ds.size());
    std::vector<char> fell(ds.size(), 0);
    parallel_for(ds.size(), options.workers, [&](std::size_t i) {
      if (options.pinv_fallback) {
        bool fb = false;
        prec[l][i] = Precision::inverse_or_pseudo(covariances[l][i].matrix, gamma, fb);
        fell[i] = fb ? 1 : 0;
      } else {
        prec[l][i] = Precision::inverse(covariances[l][i].matrix);
      }
    });
    for (char f : fell) result.fallbacks += static_cast<std::size_t>(f);
  }

  const std::vector<double> eps(ds.num_views(), options.epsilon);
  auto fused = fuse_views(ds, prec, {}, eps, options.epsilon, Fusion::Min, 1, options.convention,
                          true, options.workers);
  result.kernel = KernelMatrix{std::move(fused.kernel), options.epsilon, options.convention};
  result.distances = std::move(fused.distances);
  return result;
}

Algorithm1Result algorithm1_kernel(const MultiViewDataset& ds,
                                   const std::vector<std::vector<PointCloud>>& clouds,
                                   const Algorithm1Options& options) {
  if (clouds.size() != ds.num_views()) fail(ErrorCode::ShapeMismatch, "one cloud set is required per view");
  std::vector<std::vector<LocalCovariance>> covs(clouds.size());
  for (std::size_t l = 0; l < clouds.size(); ++l) {
    if (clouds[l].size() != ds.size()) fail(ErrorCode::ShapeMismatch, "one cloud is required per point");
    covs[l].resize(ds.size());
    parallel_for(ds.size(), options.workers,
                 [&](std::size_t i) { covs[l][i] = covariance_from_cloud(clouds[l][i], l); });
  }
  return algorithm1_kernel(ds, covs, options);
}

Algorithm2Result algorithm2_kernel(const MultiViewDataset& ds, const Algorithm2Options& options) {
  options.neighborhood.validate();
  std::vector<std::vector<LocalCovariance>> covs;
  covs.reserve(ds.num_views());
  for (std::size_t l = 0; l < ds.num_views(); ++l) {
    covs.push_back(neighborhood_covariances(ds.view(l), options.neighborhood, l, options.workers));
  }
  return algorithm2_kernel(ds, std::move(covs), options);
}

Algorithm2Result algorithm2_kernel(const MultiViewDataset& ds,
                                   std::vector<std::vector<LocalCovariance>> covariances,
                                   const Algorithm2Options& options) {
  check_covariances(ds, covariances);
  const auto eps = view_eps(ds.num_views(), options.epsilon, options.view_epsilons);
  if (options.fusion == Fusion::Histogram && options.histogram_bins == 0) {
    fail(ErrorCode::ConfigError, "histogram fusion needs at least one bin");
  }

  Algorithm2Result result;
  result.gamma = options.gamma >= 0.0 ? options.gamma : default_gamma(covariances);
  assign_ranks(covariances, result.gamma);

  std::vector<int> all_ranks;
  result.ranks.resize(ds.num_views());
  for (std::size_t l = 0; l < ds.num_views(); ++l) {
    for (const auto& c : covariances[l]) {
      result.ranks[l].push_back(c.numerical_rank);
      all_ranks.push_back(c.numerical_rank);
    }
  }
  result.median_rank = median_rank(all_ranks);

  std::vector<std::vector<bool>> valid(ds.num_views(), std::vector<bool>(ds.size()));
  std::vector<std::vector<Precision>> prec(ds.num_views(), std::vector<Precision>(ds.size()));
  for (std::size_t l = 0; l < ds.num_views(); ++l) {
    for (std::size_t i = 0; i < ds.size(); ++i) valid[l][i] = result.ranks[l][i] >= result.median_rank;
    parallel_for(ds.size(), options.workers, [&](std::size_t i) {
      prec[l][i] = Precision::pseudo(covariances[l][i].matrix, result.gamma);
    });
  }

  auto fused = fuse_views(ds, prec, valid, eps, options.epsilon, options.fusion,
                          options.histogram_bins, options.convention, false, options.workers);
  const auto n = static_cast<Eigen::Index>(ds.size());
  const std::size_t pairs = ds.size() * (ds.size() - 1) / 2;
  result.unmatched_pairs = fused.unmatched;
  if (pairs > 0 && fused.unmatched == pairs) {
    fail(ErrorCode::DegenerateDataset, "no pair passes the rank gate in any view");
  }

  // Unmatched pairs get the weakest matched affinity.
  double floor_value = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (fused.kernel(i, j) != kUnmatched) floor_value = std::min(floor_value, fused.kernel(i, j));
    }
  }
  result.floor_value = floor_value;
  if (fused.unmatched > 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (fused.kernel(i, j) == kUnmatched) fused.kernel(i, j) = floor_value;
      }
    }
  }
  result.kernel = KernelMatrix{std::move(fused.kernel), options.epsilon, options.convention};
  return result;
}

}  // namespace mvk
