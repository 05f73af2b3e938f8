#pragma once

#include "mvk/multiview.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvk {

struct ExperimentConfig {
  std::string experiment = "brownian_consensus";

  std::size_t n = 2000;
  std::size_t zeta = 7;              // views generated (flower, brownian maximum)
  std::vector<std::size_t> zetas;    // brownian: view counts to evaluate; empty = 1..zeta
  std::size_t n_c = 20000;
  double dt = 0.005;
  double epsilon = 0.02;
  double gamma = -1.0;               // negative: 1e-6 x largest covariance singular value
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> radii{0.25, 0.5, 1.0};
  std::vector<std::size_t> densities{1000, 2000};
  std::string out = "out";
  KernelConvention convention = KernelConvention::Full;
  Fusion fusion = Fusion::Min;
  std::size_t histogram_bins = 20;
  std::string neighborhood = "knn";  // knn | radius
  std::size_t knn = 20;
  double radius = 0.5;
  int workers = 1;
  int dims = 2;
  std::size_t spectral_count = 10;
  bool reflect = true;               // fold cloud steps back into [0, 1]
  std::string center_sampler = "uniform";
  std::string manifest;              // custom / kernel input dataset

  /// Defaults for a named experiment.
  static ExperimentConfig defaults(const std::string& experiment);
  void validate() const;
  nlohmann::json to_json() const;
};

/// Overlays the keys of `doc` on `config`. Unknown keys are a ConfigError.
void apply_config_json(ExperimentConfig& config, const nlohmann::json& doc);

/// Reads a JSON config file; the experiment named in it (or `experiment`
/// when given) selects the defaults the file overrides.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::optional<std::string>& experiment);

/// Writes the artifacts of one run into config.out and returns the report.
/// Every artifact is listed with its SHA-256; the only run-dependent value is
/// the "generated_at" key. Files written by a failed run are removed.
nlohmann::json run_experiment(const ExperimentConfig& config);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Tracks files written by one command so they can be listed or rolled back.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  ~ArtifactWriter();
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  /// Call after a file has been written.
  void record(const std::string& name);
  void write_json(const std::string& name, const nlohmann::json& doc);
  nlohmann::json manifest() const;
  /// Keeps the files; otherwise the destructor deletes them.
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<std::string> names_;
};

// Pipeline steps behind the CLI subcommands.

/// Generates the dataset of config.experiment (brownian_consensus also
/// writes simulated cloud covariances) and returns the report.
nlohmann::json generate_command(const ExperimentConfig& config);

/// Builds a kernel from a dataset manifest: Algorithm 1 when the manifest
/// lists covariances, Algorithm 2 otherwise.
nlohmann::json kernel_command(const ExperimentConfig& config, const std::filesystem::path& manifest,
                              const std::string& kernel_name);

nlohmann::json embed_command(const ExperimentConfig& config, const std::filesystem::path& kernel_path);

/// Q-factor and spectral lines against the manifest's ground truth; circle
/// metrics when an embedding is given and the ground truth is an angle.
nlohmann::json evaluate_command(const ExperimentConfig& config, const std::filesystem::path& kernel_path,
                                const std::filesystem::path& manifest,
                                const std::optional<std::filesystem::path>& embedding);

}  // namespace mvk
