#include "mvk/experiment.hpp"

#include "mvk/dataset.hpp"
#include "mvk/diffusion.hpp"
#include "mvk/error.hpp"
#include "mvk/itosim.hpp"
#include "mvk/kernel_io.hpp"
#include "mvk/localcov.hpp"
#include "mvk/mahalanobis.hpp"
#include "mvk/metrics.hpp"
#include "mvk/parallel.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace mvk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kExperiments{"brownian_consensus", "helix_singleview",
                                            "flower_multiview", "custom"};

/// Neumann Laplacian eigenvalue indices n^2 + m^2 of the unit square, ascending.
const std::vector<double> kSquareLines{0, 1, 1, 2, 4, 4, 5, 5, 8, 9, 9, 10, 10, 13, 13, 16};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

template <class T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, "config key '" + key + "' has the wrong type");
  }
}

std::vector<Interval> unit_cube(std::size_t dim) { return std::vector<Interval>(dim, Interval{0.0, 1.0}); }

void write_embedding_csv(const fs::path& path, const Eigen::MatrixXd& coords) {
  Eigen::MatrixXd table(coords.rows(), coords.cols() + 1);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) table(i, 0) = static_cast<double>(i);
  table.rightCols(coords.cols()) = coords;
  std::vector<std::string> header{"index"};
  for (Eigen::Index c = 0; c < coords.cols(); ++c) header.push_back("phi_" + std::to_string(c + 1));
  write_csv(path, table, header);
}

Eigen::MatrixXd read_embedding_csv(const fs::path& path) {
  const Eigen::MatrixXd table = read_csv(path);
  if (table.cols() < 2) fail(ErrorCode::IoError, path.string() + ": embedding needs index plus coordinates");
  return table.rightCols(table.cols() - 1);
}

std::vector<double> leading(const Eigen::VectorXd& v, std::size_t count) {
  const auto k = std::min<std::size_t>(count, static_cast<std::size_t>(v.size()));
  return std::vector<double>(v.data(), v.data() + k);
}

void write_kernel_file(const fs::path& path, const Eigen::MatrixXd& values) {
  if (path.extension() == ".csv") {
    write_kernel_csv(path, values);
  } else {
    write_kernel_binary(path, values);
  }
}

json report_skeleton(const std::string& what, const ExperimentConfig& config) {
  json r;
  r["experiment"] = what;
  r["version"] = MVK_VERSION;
  r["config"] = config.to_json();
  return r;
}

void finish(ArtifactWriter& writer, json& report) {
  report["artifacts"] = writer.manifest();
  report["generated_at"] = utc_timestamp();
  writer.write_json("report.json", report);
  writer.commit();
}

struct ShapeMetrics {
  double residual = 0.0;
  double correlation = 0.0;
  double gap = 0.0;
};

ShapeMetrics shape_metrics(const Eigen::MatrixXd& coords, const Eigen::VectorXd& theta) {
  ShapeMetrics m;
  try {
    m.residual = circle_fit_residual(coords);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateFit) throw;
    m.residual = std::numeric_limits<double>::infinity();
  }
  m.correlation = angle_correlation(coords, theta);
  m.gap = max_angular_gap(coords);
  return m;
}

json shape_json(const ShapeMetrics& m) {
  json j;
  // JSON has no infinity; a degenerate fit is reported as null.
  j["circle_fit_residual"] = std::isfinite(m.residual) ? json(m.residual) : json(nullptr);
  j["angle_correlation"] = m.correlation;
  j["max_angular_gap"] = m.gap;
  return j;
}

// ---------------------------------------------------------------- brownian

struct CloudCovariances {
  std::vector<std::vector<LocalCovariance>> per_view;
};

CloudCovariances simulate_covariances(const BrownianConsensus& data, std::size_t views,
                                      const ExperimentConfig& c, std::uint64_t seed) {
  CloudCovariances out;
  out.per_view.resize(views);
  const auto& theta = data.dataset.ground_truth();
  const auto reflect = c.reflect ? unit_cube(3) : std::vector<Interval>{};
  for (std::size_t l = 0; l < views; ++l) {
    const ObservationMap map{data.maps[l]};
    auto& covs = out.per_view[l];
    covs.resize(data.dataset.size());
    parallel_for(covs.size(), c.workers, [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::VectorXd z(3);
      z << theta(ii, 0), theta(ii, 1), data.psi(ii, static_cast<Eigen::Index>(l));
      covs[i] = covariance_from_simulation(z, map, c.n_c, c.dt, derive_seed(seed, 100 + l, i), reflect, i, l);
    });
  }
  return out;
}

CenterSampler parse_sampler(const std::string& name) {
  if (name == "uniform") return CenterSampler::Uniform;
  if (name == "brownian") return CenterSampler::ReflectedBrownian;
  fail(ErrorCode::ConfigError, "unknown center_sampler '" + name + "' (expected uniform or brownian)");
}

std::vector<std::size_t> brownian_zetas(const ExperimentConfig& c) {
  std::vector<std::size_t> z = c.zetas;
  if (z.empty()) {
    for (std::size_t k = 1; k <= c.zeta; ++k) z.push_back(k);
  }
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  return z;
}

json run_brownian(const ExperimentConfig& c, ArtifactWriter& writer) {
  const auto zetas = brownian_zetas(c);
  const std::size_t zmax = zetas.back();
  const double spectral_eps = spectral_epsilon(c.epsilon, c.convention);

  std::vector<std::vector<double>> q(zetas.size());  // [zeta][seed]
  std::size_t fallbacks = 0;
  json spectral;

  for (std::size_t r = 0; r < c.seeds.size(); ++r) {
    const std::uint64_t seed = c.seeds[r];
    const auto data = make_brownian_consensus(c.n, zmax, seed, parse_sampler(c.center_sampler));
    const auto covs = simulate_covariances(data, zmax, c, seed);
    const double gamma = c.gamma >= 0.0 ? c.gamma : default_gamma(covs.per_view);
    const KernelMatrix truth = ground_truth_kernel(data.dataset.ground_truth(), c.epsilon, c.convention);

    // Nested view sets: the fused minimum over the first zeta views is a running minimum.
    const auto n = static_cast<Eigen::Index>(c.n);
    Eigen::MatrixXd dmin = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    std::size_t next = 0;
    for (std::size_t l = 0; l < zmax; ++l) {
      std::vector<Precision> prec(c.n);
      std::vector<char> fell(c.n, 0);
      parallel_for(c.n, c.workers, [&](std::size_t i) {
        bool fb = false;
        prec[i] = Precision::inverse_or_pseudo(covs.per_view[l][i].matrix, gamma, fb);
        fell[i] = fb ? 1 : 0;
      });
      for (char f : fell) fallbacks += static_cast<std::size_t>(f);
      dmin = dmin.cwiseMin(pairwise_distances(data.dataset.view(l), prec, c.workers));
      if (next < zetas.size() && zetas[next] == l + 1) {
        const KernelMatrix k = kernel_from_distances(dmin, c.epsilon, c.convention);
        q[next].push_back(q_factor(truth, k));
        if (r == 0 && l + 1 == zmax) {
          write_kernel_binary(writer.path("kernel.mvk"), k.values);
          writer.record("kernel.mvk");
          if (c.spectral_count > 0) {
            const int dims = static_cast<int>(std::min<std::size_t>(c.spectral_count, c.n) - 1);
            const auto est = diffusion_map(k, dims);
            const auto gt = diffusion_map(truth, dims);
            spectral["epsilon"] = spectral_eps;
            spectral["expected"] = std::vector<double>(
                kSquareLines.begin(),
                kSquareLines.begin() + static_cast<std::ptrdiff_t>(std::min(c.spectral_count, kSquareLines.size())));
            spectral["ground_truth"] = spectral_lines(leading(gt.eigenvalues, c.spectral_count), spectral_eps);
            spectral["estimated"] = spectral_lines(leading(est.eigenvalues, c.spectral_count), spectral_eps);
            writer.write_json("eigenvalues.json", json{{"ground_truth", leading(gt.eigenvalues, c.spectral_count)},
                                                       {"estimated", leading(est.eigenvalues, c.spectral_count)}});
          }
        }
        ++next;
      }
    }
  }

  std::vector<double> mean_q;
  std::vector<double> zeta_values;
  Eigen::MatrixXd table(static_cast<Eigen::Index>(zetas.size()), static_cast<Eigen::Index>(2 + c.seeds.size()));
  for (std::size_t k = 0; k < zetas.size(); ++k) {
    double sum = 0.0;
    for (double v : q[k]) sum += v;
    mean_q.push_back(sum / static_cast<double>(q[k].size()));
    zeta_values.push_back(static_cast<double>(zetas[k]));
    table(static_cast<Eigen::Index>(k), 0) = zeta_values.back();
    table(static_cast<Eigen::Index>(k), 1) = mean_q.back();
    for (std::size_t r = 0; r < q[k].size(); ++r) table(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(2 + r)) = q[k][r];
  }
  std::vector<std::string> header{"zeta", "mean_q"};
  for (auto s : c.seeds) header.push_back("seed_" + std::to_string(s));
  write_csv(writer.path("q_factor.csv"), table, header);
  writer.record("q_factor.csv");

  json results;
  results["zetas"] = zetas;
  results["mean_q"] = mean_q;
  results["q_per_seed"] = q;
  results["pinv_fallbacks"] = fallbacks;
  if (zetas.size() >= 2) {
    results["spearman"] = spearman_correlation(zeta_values, mean_q);
    results["q_last_below_first"] = mean_q.back() < mean_q.front();
  }
  if (!spectral.is_null()) {
    results["spectral_lines"] = spectral;
    const auto& gt = spectral["ground_truth"];
    const auto& est = spectral["estimated"];
    Eigen::MatrixXd lines(static_cast<Eigen::Index>(gt.size()), 4);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      lines(ii, 0) = static_cast<double>(i);
      lines(ii, 1) = i < kSquareLines.size() ? kSquareLines[i] : std::numeric_limits<double>::quiet_NaN();
      lines(ii, 2) = gt[i].get<double>();
      lines(ii, 3) = est[i].get<double>();
    }
    write_csv(writer.path("spectral_lines.csv"), lines, {"index", "expected", "ground_truth", "estimated"});
    writer.record("spectral_lines.csv");
  }
  return results;
}

// ---------------------------------------------------------------- helix

json run_helix(const ExperimentConfig& c, ArtifactWriter& writer) {
  std::vector<std::size_t> densities = c.densities;
  std::sort(densities.begin(), densities.end());
  std::vector<double> radii = c.radii;
  std::sort(radii.begin(), radii.end());

  std::vector<std::vector<double>> mean(densities.size(), std::vector<double>(radii.size(), 0.0));
  for (std::size_t d = 0; d < densities.size(); ++d) {
    for (auto seed : c.seeds) {
      const auto ds = make_helix_dataset(densities[d], seed);
      ErrorCurveOptions opts;
      opts.seed = seed;
      opts.workers = c.workers;
      const auto curve = distance_error_curve(ds, radii, opts);
      for (std::size_t r = 0; r < radii.size(); ++r) mean[d][r] += curve[r].mean_error;
    }
    for (auto& v : mean[d]) v /= static_cast<double>(c.seeds.size());
  }

  Eigen::MatrixXd table(static_cast<Eigen::Index>(densities.size() * radii.size()), 3);
  Eigen::Index row = 0;
  for (std::size_t d = 0; d < densities.size(); ++d) {
    for (std::size_t r = 0; r < radii.size(); ++r, ++row) {
      table(row, 0) = static_cast<double>(densities[d]);
      table(row, 1) = radii[r];
      table(row, 2) = mean[d][r];
    }
  }
  write_csv(writer.path("error_curve.csv"), table, {"n", "radius", "mean_error"});
  writer.record("error_curve.csv");

  bool decreasing_density = true;
  bool nonincreasing_radius = true;
  for (std::size_t d = 0; d < densities.size(); ++d) {
    for (std::size_t r = 0; r < radii.size(); ++r) {
      if (d > 0 && !(mean[d][r] < mean[d - 1][r])) decreasing_density = false;
      if (r > 0 && mean[d][r] > mean[d][r - 1]) nonincreasing_radius = false;
    }
  }
  json results;
  results["densities"] = densities;
  results["radii"] = radii;
  results["mean_error"] = mean;
  results["decreasing_with_density"] = decreasing_density;
  results["nonincreasing_with_radius"] = nonincreasing_radius;
  return results;
}

// ---------------------------------------------------------------- flower

Algorithm2Options algorithm2_options(const ExperimentConfig& c) {
  Algorithm2Options o;
  o.neighborhood = c.neighborhood == "radius" ? NeighborhoodSpec::within(c.radius) : NeighborhoodSpec::nearest(c.knn);
  o.epsilon = c.epsilon;
  o.gamma = c.gamma;
  o.fusion = c.fusion;
  o.histogram_bins = c.histogram_bins;
  o.convention = c.convention;
  o.workers = c.workers;
  return o;
}

json run_flower(const ExperimentConfig& c, ArtifactWriter& writer) {
  json per_seed = json::array();
  bool all_pass_gap = true;
  for (std::size_t r = 0; r < c.seeds.size(); ++r) {
    const auto seed = c.seeds[r];
    const auto data = make_flower_dataset(c.n, c.zeta, seed);
    const auto& ds = data.dataset;
    const Eigen::VectorXd theta = ds.ground_truth().col(0);
    const auto opts = algorithm2_options(c);
    const std::string tag = c.seeds.size() > 1 ? "_seed" + std::to_string(seed) : "";

    const auto mv = algorithm2_kernel(ds, opts);
    const auto mv_emb = diffusion_map(mv.kernel, 2);
    const auto mv_shape = shape_metrics(mv_emb.coordinates, theta);
    write_embedding_csv(writer.path("embedding_multiview" + tag + ".csv"), mv_emb.coordinates);
    writer.record("embedding_multiview" + tag + ".csv");
    if (r == 0) {
      write_kernel_binary(writer.path("kernel_multiview.mvk"), mv.kernel.values);
      writer.record("kernel_multiview.mvk");
    }

    json singles = json::array();
    double min_single_gap = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < ds.num_views(); ++l) {
      const MultiViewDataset one({ds.view(l)}, ds.ground_truth());
      const auto k = algorithm2_kernel(one, opts);
      const auto emb = diffusion_map(k.kernel, 2);
      const auto m = shape_metrics(emb.coordinates, theta);
      min_single_gap = std::min(min_single_gap, m.gap);
      singles.push_back(shape_json(m));
    }

    const MultiViewDataset cat({concatenate_views(ds)}, ds.ground_truth());
    const auto ck = algorithm2_kernel(cat, opts);
    const auto c_emb = diffusion_map(ck.kernel, 2);
    const auto c_shape = shape_metrics(c_emb.coordinates, theta);
    write_embedding_csv(writer.path("embedding_concatenated" + tag + ".csv"), c_emb.coordinates);
    writer.record("embedding_concatenated" + tag + ".csv");

    const bool gap_ok = mv_shape.gap < min_single_gap && mv_shape.gap < c_shape.gap;
    all_pass_gap = all_pass_gap && gap_ok;
    json entry;
    entry["seed"] = seed;
    entry["multiview"] = shape_json(mv_shape);
    entry["multiview"]["median_rank"] = mv.median_rank;
    entry["multiview"]["gamma"] = mv.gamma;
    entry["multiview"]["unmatched_pairs"] = mv.unmatched_pairs;
    entry["multiview"]["eigenvalues"] = leading(mv_emb.eigenvalues, 5);
    entry["single_views"] = singles;
    entry["concatenated"] = shape_json(c_shape);
    entry["multiview_gap_smallest"] = gap_ok;
    per_seed.push_back(entry);
  }
  json results;
  results["runs"] = per_seed;
  results["multiview_gap_smallest"] = all_pass_gap;
  return results;
}

// ---------------------------------------------------------------- custom

struct BuiltKernel {
  KernelMatrix kernel;
  json info;
};

BuiltKernel build_kernel(const ExperimentConfig& c, const MultiViewDataset& ds, const fs::path& manifest) {
  BuiltKernel out;
  if (auto covs = load_manifest_covariances(manifest)) {
    std::vector<std::vector<LocalCovariance>> per_view(covs->size());
    for (std::size_t l = 0; l < covs->size(); ++l) {
      for (std::size_t i = 0; i < (*covs)[l].size(); ++i) {
        per_view[l].push_back(LocalCovariance{std::move((*covs)[l][i]), i, l, 0});
      }
    }
    Algorithm1Options o;
    o.epsilon = c.epsilon;
    o.convention = c.convention;
    o.gamma = c.gamma;
    o.workers = c.workers;
    auto res = algorithm1_kernel(ds, per_view, o);
    out.kernel = std::move(res.kernel);
    out.info = {{"algorithm", 1}, {"pinv_fallbacks", res.fallbacks}};
  } else {
    auto res = algorithm2_kernel(ds, algorithm2_options(c));
    out.kernel = std::move(res.kernel);
    out.info = {{"algorithm", 2},
                {"median_rank", res.median_rank},
                {"gamma", res.gamma},
                {"unmatched_pairs", res.unmatched_pairs},
                {"floor_value", res.floor_value}};
  }
  return out;
}

json run_custom(const ExperimentConfig& c, ArtifactWriter& writer) {
  if (c.manifest.empty()) fail(ErrorCode::ConfigError, "custom experiment needs a dataset manifest");
  const fs::path manifest(c.manifest);
  const auto ds = load_dataset(manifest);
  auto built = build_kernel(c, ds, manifest);
  write_kernel_binary(writer.path("kernel.mvk"), built.kernel.values);
  writer.record("kernel.mvk");

  json results = built.info;
  const int dims = std::min<int>(c.dims, static_cast<int>(ds.size()) - 1);
  const auto emb = diffusion_map(built.kernel, dims);
  write_embedding_csv(writer.path("embedding.csv"), emb.coordinates);
  writer.record("embedding.csv");
  writer.write_json("eigenvalues.json", leading(emb.eigenvalues, std::max<std::size_t>(c.spectral_count, 1)));
  results["degenerate_spectrum"] = emb.degenerate;
  if (ds.has_ground_truth()) {
    const auto truth = ground_truth_kernel(ds.ground_truth(), c.epsilon, c.convention);
    results["q_factor"] = q_factor(truth, built.kernel);
  }
  return results;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "brownian_consensus") {
    return c;
  }
  if (experiment == "helix_singleview") {
    c.seeds = {0, 1, 2};
    c.spectral_count = 0;
    return c;
  }
  if (experiment == "flower_multiview") {
    c.zeta = 10;
    c.epsilon = 20.0;
    c.fusion = Fusion::Histogram;
    c.knn = 30;
    return c;
  }
  if (experiment == "custom") {
    c.fusion = Fusion::Max;
    return c;
  }
  fail(ErrorCode::ConfigError, "unknown experiment '" + experiment +
                                   "' (expected brownian_consensus, helix_singleview, flower_multiview or custom)");
}

void ExperimentConfig::validate() const {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    fail(ErrorCode::ConfigError, "unknown experiment '" + experiment + "'");
  }
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
  };
  require(n >= 2, "n must be at least 2");
  require(zeta >= 1, "zeta must be positive");
  for (auto z : zetas) require(z >= 1, "zetas must be positive");
  require(n_c >= 2, "n_c must be at least 2");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
  require(std::isfinite(gamma), "gamma must be finite");
  require(!seeds.empty(), "at least one seed is required");
  for (double r : radii) require(r > 0.0, "radii must be positive");
  for (auto d : densities) require(d >= 2, "densities must be at least 2");
  require(histogram_bins >= 1, "histogram_bins must be positive");
  require(neighborhood == "knn" || neighborhood == "radius", "neighborhood must be knn or radius");
  require(knn >= 2, "knn must be at least 2");
  require(radius > 0.0, "radius must be positive");
  require(workers >= 1, "workers must be positive");
  require(dims >= 1, "dims must be positive");
  require(!out.empty(), "output directory must be set");
  require(center_sampler == "uniform" || center_sampler == "brownian", "center_sampler must be uniform or brownian");
}

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment},
              {"n", n},
              {"zeta", zeta},
              {"zetas", zetas},
              {"n_c", n_c},
              {"dt", dt},
              {"epsilon", epsilon},
              {"gamma", gamma},
              {"seeds", seeds},
              {"radii", radii},
              {"densities", densities},
              {"out", out},
              {"convention", to_string(convention)},
              {"fusion", to_string(fusion)},
              {"histogram_bins", histogram_bins},
              {"neighborhood", neighborhood},
              {"knn", knn},
              {"radius", radius},
              {"workers", workers},
              {"dims", dims},
              {"spectral_count", spectral_count},
              {"reflect", reflect},
              {"center_sampler", center_sampler},
              {"manifest", manifest}};
}

void apply_config_json(ExperimentConfig& c, const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "experiment") c.experiment = get_as<std::string>(value, key);
    else if (key == "n") c.n = get_as<std::size_t>(value, key);
    else if (key == "zeta" || key == "views") c.zeta = get_as<std::size_t>(value, key);
    else if (key == "zetas") c.zetas = get_as<std::vector<std::size_t>>(value, key);
    else if (key == "n_c") c.n_c = get_as<std::size_t>(value, key);
    else if (key == "dt") c.dt = get_as<double>(value, key);
    else if (key == "epsilon") c.epsilon = get_as<double>(value, key);
    else if (key == "gamma") c.gamma = get_as<double>(value, key);
    else if (key == "seed") c.seeds = {get_as<std::uint64_t>(value, key)};
    else if (key == "seeds") c.seeds = get_as<std::vector<std::uint64_t>>(value, key);
    else if (key == "radii") c.radii = get_as<std::vector<double>>(value, key);
    else if (key == "densities") c.densities = get_as<std::vector<std::size_t>>(value, key);
    else if (key == "out") c.out = get_as<std::string>(value, key);
    else if (key == "convention") c.convention = parse_convention(get_as<std::string>(value, key));
    else if (key == "fusion") c.fusion = parse_fusion(get_as<std::string>(value, key));
    else if (key == "histogram_bins") c.histogram_bins = get_as<std::size_t>(value, key);
    else if (key == "neighborhood") c.neighborhood = get_as<std::string>(value, key);
    else if (key == "knn") c.knn = get_as<std::size_t>(value, key);
    else if (key == "radius") c.radius = get_as<double>(value, key);
    else if (key == "workers") c.workers = get_as<int>(value, key);
    else if (key == "dims") c.dims = get_as<int>(value, key);
    else if (key == "spectral_count") c.spectral_count = get_as<std::size_t>(value, key);
    else if (key == "reflect") c.reflect = get_as<bool>(value, key);
    else if (key == "center_sampler") c.center_sampler = get_as<std::string>(value, key);
    else if (key == "manifest") c.manifest = get_as<std::string>(value, key);
    else fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
}

ExperimentConfig load_config(const std::optional<fs::path>& path, const std::optional<std::string>& experiment) {
  json doc = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) fail(ErrorCode::IoError, "cannot open config " + path->string());
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigError, "malformed config " + path->string() + ": " + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  }
  std::string name = "brownian_consensus";
  if (doc.contains("experiment")) name = get_as<std::string>(doc["experiment"], "experiment");
  if (experiment) name = *experiment;
  ExperimentConfig c = ExperimentConfig::defaults(name);
  apply_config_json(c, doc);
  c.experiment = name;
  return c;
}

// ---------------------------------------------------------------- artifacts

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(ErrorCode::IoError, "cannot initialise SHA-256");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return hex.str();
}

ArtifactWriter::ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  if (!fs::exists(dir_)) {
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir_.string());
    created_dir_ = true;
  } else if (!fs::is_directory(dir_)) {
    fail(ErrorCode::IoError, dir_.string() + " is not a directory");
  }
}

ArtifactWriter::~ArtifactWriter() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& name : names_) fs::remove(dir_ / name, ec);
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

void ArtifactWriter::record(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
}

void ArtifactWriter::write_json(const std::string& name, const json& doc) {
  // Record first so a failed write is still cleaned up.
  record(name);
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + (dir_ / name).string());
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "failed writing " + (dir_ / name).string());
}

json ArtifactWriter::manifest() const {
  json list = json::array();
  for (const auto& name : names_) {
    list.push_back({{"path", name}, {"sha256", sha256_file(dir_ / name)}, {"bytes", fs::file_size(dir_ / name)}});
  }
  return list;
}

// ---------------------------------------------------------------- commands

json run_experiment(const ExperimentConfig& config) {
  config.validate();
  ArtifactWriter writer(config.out);
  json report = report_skeleton(config.experiment, config);
  if (config.experiment == "brownian_consensus") {
    report["results"] = run_brownian(config, writer);
  } else if (config.experiment == "helix_singleview") {
    report["results"] = run_helix(config, writer);
  } else if (config.experiment == "flower_multiview") {
    report["results"] = run_flower(config, writer);
  } else {
    report["results"] = run_custom(config, writer);
  }
  finish(writer, report);
  return report;
}

json generate_command(const ExperimentConfig& config) {
  config.validate();
  ArtifactWriter writer(config.out);
  const auto seed = config.seeds.front();
  json report = report_skeleton("generate", config);
  json results;
  auto keep = [&](const std::vector<fs::path>& paths) {
    for (const auto& p : paths) writer.record(p.filename().string());
  };
  if (config.experiment == "brownian_consensus") {
    const auto data = make_brownian_consensus(config.n, config.zeta, seed, parse_sampler(config.center_sampler));
    keep(save_dataset(data.dataset, config.out));
    const auto covs = simulate_covariances(data, config.zeta, config, seed);
    json manifest;
    {
      std::ifstream in(writer.path("manifest.json"));
      manifest = json::parse(in);
    }
    manifest["covariances"] = json::array();
    for (std::size_t l = 0; l < config.zeta; ++l) {
      Eigen::MatrixXd flat(static_cast<Eigen::Index>(config.n), 9);
      for (std::size_t i = 0; i < config.n; ++i) {
        const auto& m = covs.per_view[l][i].matrix;
        for (Eigen::Index a = 0; a < 3; ++a)
          for (Eigen::Index b = 0; b < 3; ++b) flat(static_cast<Eigen::Index>(i), a * 3 + b) = m(a, b);
      }
      const std::string name = "covariance_" + std::to_string(l) + ".csv";
      write_csv(writer.path(name), flat);
      writer.record(name);
      manifest["covariances"].push_back(name);
    }
    writer.write_json("manifest.json", manifest);
    json maps = json::array();
    for (const auto& m : data.maps) {
      json entry;
      for (Eigen::Index k = 0; k < m.outputs(); ++k) {
        std::vector<double> a;
        std::vector<int> b;
        for (Eigen::Index q = 0; q < m.inputs(); ++q) {
          a.push_back(m.coefficients(k, q));
          b.push_back(m.exponents(k, q));
        }
        entry["coefficients"].push_back(a);
        entry["exponents"].push_back(b);
      }
      maps.push_back(entry);
    }
    results["maps"] = maps;
  } else if (config.experiment == "helix_singleview") {
    keep(save_dataset(make_helix_dataset(config.n, seed), config.out));
  } else if (config.experiment == "flower_multiview") {
    const auto data = make_flower_dataset(config.n, config.zeta, seed);
    keep(save_dataset(data.dataset, config.out));
    json phases = json::array();
    for (const auto& v : data.views) phases.push_back(v.phases);
    results["phases"] = phases;
  } else {
    fail(ErrorCode::ConfigError, "generate supports brownian_consensus, helix_singleview and flower_multiview");
  }
  results["manifest"] = "manifest.json";
  report["results"] = results;
  finish(writer, report);
  return report;
}

json kernel_command(const ExperimentConfig& config, const fs::path& manifest, const std::string& kernel_name) {
  config.validate();
  const auto ds = load_dataset(manifest);
  ArtifactWriter writer(config.out);
  json report = report_skeleton("kernel", config);
  auto built = build_kernel(config, ds, manifest);
  write_kernel_file(writer.path(kernel_name), built.kernel.values);
  writer.record(kernel_name);
  built.info["kernel"] = kernel_name;
  built.info["n"] = ds.size();
  report["results"] = built.info;
  finish(writer, report);
  return report;
}

json embed_command(const ExperimentConfig& config, const fs::path& kernel_path) {
  config.validate();
  const KernelMatrix k{read_kernel(kernel_path), config.epsilon, config.convention};
  if (const auto why = kernel_violation(k); !why.empty()) fail(ErrorCode::InvalidArgument, "invalid kernel: " + why);
  ArtifactWriter writer(config.out);
  json report = report_skeleton("embed", config);
  const int dims = std::min<int>(config.dims, static_cast<int>(k.size()) - 1);
  const auto emb = diffusion_map(k, dims);
  write_embedding_csv(writer.path("embedding.csv"), emb.coordinates);
  writer.record("embedding.csv");
  writer.write_json("eigenvalues.json", leading(emb.eigenvalues, std::max<std::size_t>(config.spectral_count, static_cast<std::size_t>(dims) + 1)));
  report["results"] = {{"dims", dims}, {"degenerate_spectrum", emb.degenerate}};
  finish(writer, report);
  return report;
}

json evaluate_command(const ExperimentConfig& config, const fs::path& kernel_path, const fs::path& manifest,
                      const std::optional<fs::path>& embedding) {
  config.validate();
  const KernelMatrix k{read_kernel(kernel_path), config.epsilon, config.convention};
  const auto ds = load_dataset(manifest);
  const auto& theta = ds.ground_truth();
  if (static_cast<std::size_t>(k.size()) != ds.size()) fail(ErrorCode::ShapeMismatch, "kernel and dataset sizes differ");
  ArtifactWriter writer(config.out);
  json report = report_skeleton("evaluate", config);
  json results;
  results["q_factor"] = q_factor(ground_truth_kernel(theta, config.epsilon, config.convention), k);
  results["kernel_violation"] = kernel_violation(k);
  if (config.spectral_count > 0) {
    const int dims = static_cast<int>(std::min<std::size_t>(config.spectral_count, ds.size()) - 1);
    const auto emb = diffusion_map(k, dims);
    results["spectral_lines"] =
        spectral_lines(leading(emb.eigenvalues, config.spectral_count), spectral_epsilon(config.epsilon, config.convention));
  }
  if (embedding) {
    const Eigen::MatrixXd coords = read_embedding_csv(*embedding);
    if (coords.cols() < 2) fail(ErrorCode::ShapeMismatch, "embedding needs two coordinates");
    if (theta.cols() == 1) {
      results["shape"] = shape_json(shape_metrics(coords.leftCols(2), theta.col(0)));
    } else {
      results["shape"] = {{"max_angular_gap", max_angular_gap(coords.leftCols(2))}};
    }
  }
  report["results"] = results;
  finish(writer, report);
  return report;
}

}  // namespace mvk
