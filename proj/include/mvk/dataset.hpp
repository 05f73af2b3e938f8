#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvk {

/// n x m_l observations of one view; row i is sample i.
using ViewMatrix = Eigen::MatrixXd;

/// Zero-based feature (column) indices selecting one view.
using IndexSet = std::vector<std::size_t>;

/// Aligned views of the same n samples. Immutable after construction.
///
/// Views may have different widths and may share features. Ground truth, when
/// present, is an n x d matrix of intrinsic parameters.
class MultiViewDataset {
 public:
  explicit MultiViewDataset(std::vector<ViewMatrix> views,
                            std::optional<Eigen::MatrixXd> ground_truth = std::nullopt,
                            std::optional<std::vector<IndexSet>> index_sets = std::nullopt);

  std::size_t size() const noexcept { return n_; }
  std::size_t num_views() const noexcept { return views_.size(); }
  const ViewMatrix& view(std::size_t l) const { return views_.at(l); }
  const std::vector<ViewMatrix>& views() const noexcept { return views_; }

  bool has_ground_truth() const noexcept { return ground_truth_.has_value(); }
  /// Throws MissingGroundTruth when absent.
  const Eigen::MatrixXd& ground_truth() const;

  const std::optional<std::vector<IndexSet>>& index_sets() const noexcept { return index_sets_; }

 private:
  std::vector<ViewMatrix> views_;
  std::optional<Eigen::MatrixXd> ground_truth_;
  std::optional<std::vector<IndexSet>> index_sets_;
  std::size_t n_ = 0;
};

/// View l receives the columns of `data` listed in index_sets[l], in listed order.
MultiViewDataset split_views(const Eigen::MatrixXd& data, const std::vector<IndexSet>& index_sets);

/// Column-wise concatenation of all views in view order.
ViewMatrix concatenate_views(const MultiViewDataset& ds);

// CSV: comma separated, one sample per row, optional non-numeric header line.
Eigen::MatrixXd read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header = {});

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double value);

/// Dataset manifest (JSON):
///   { "n": 500, "views": ["view_0.csv", ...], "ground_truth": "theta.csv",
///     "covariances": ["cov_0.csv", ...] }
/// Paths are relative to the manifest's directory. "ground_truth" and
/// "covariances" are optional. A covariance file holds one row per sample with
/// the m_l x m_l matrix flattened row-major.
MultiViewDataset load_dataset(const std::filesystem::path& manifest);

/// Per-view, per-point covariance matrices listed in the manifest, if any.
std::optional<std::vector<std::vector<Eigen::MatrixXd>>> load_manifest_covariances(
    const std::filesystem::path& manifest);

/// Writes views (and ground truth) as CSV plus manifest.json into `dir`.
/// Returns every file written, manifest last.
std::vector<std::filesystem::path> save_dataset(const MultiViewDataset& ds,
                                                const std::filesystem::path& dir);

}  // namespace mvk
