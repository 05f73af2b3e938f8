#include "mvk/dataset.hpp"

#include "mvk/error.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>

namespace mvk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                        : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

MultiViewDataset::MultiViewDataset(std::vector<ViewMatrix> views,
                                   std::optional<Eigen::MatrixXd> ground_truth,
                                   std::optional<std::vector<IndexSet>> index_sets)
    : views_(std::move(views)),
      ground_truth_(std::move(ground_truth)),
      index_sets_(std::move(index_sets)) {
  if (views_.empty()) fail(ErrorCode::EmptyInput, "a dataset needs at least one view");
  n_ = static_cast<std::size_t>(views_.front().rows());
  for (std::size_t l = 0; l < views_.size(); ++l) {
    const auto& v = views_[l];
    if (static_cast<std::size_t>(v.rows()) != n_) {
      fail(ErrorCode::ShapeMismatch, "view " + std::to_string(l) + " has " +
                                         std::to_string(v.rows()) + " rows, expected " +
                                         std::to_string(n_));
    }
    if (v.cols() == 0) fail(ErrorCode::InvalidArgument, "view " + std::to_string(l) + " is empty");
    if (!all_finite(v)) {
      fail(ErrorCode::InvalidArgument, "view " + std::to_string(l) + " has non-finite entries");
    }
  }
  if (ground_truth_) {
    if (static_cast<std::size_t>(ground_truth_->rows()) != n_) {
      fail(ErrorCode::ShapeMismatch, "ground truth row count differs from view row count");
    }
    if (!all_finite(*ground_truth_)) {
      fail(ErrorCode::InvalidArgument, "ground truth has non-finite entries");
    }
  }
  if (index_sets_ && index_sets_->size() != views_.size()) {
    fail(ErrorCode::InvalidIndexSet, "one index set is required per view");
  }
}

const Eigen::MatrixXd& MultiViewDataset::ground_truth() const {
  if (!ground_truth_) fail(ErrorCode::MissingGroundTruth, "dataset has no ground truth");
  return *ground_truth_;
}

MultiViewDataset split_views(const Eigen::MatrixXd& data, const std::vector<IndexSet>& index_sets) {
  if (index_sets.empty()) fail(ErrorCode::InvalidIndexSet, "no index sets given");
  const auto m = static_cast<std::size_t>(data.cols());
  std::vector<ViewMatrix> views;
  views.reserve(index_sets.size());
  for (std::size_t l = 0; l < index_sets.size(); ++l) {
    const auto& set = index_sets[l];
    if (set.empty()) fail(ErrorCode::InvalidIndexSet, "index set " + std::to_string(l) + " is empty");
    ViewMatrix view(data.rows(), static_cast<Eigen::Index>(set.size()));
    for (std::size_t c = 0; c < set.size(); ++c) {
      if (set[c] >= m) {
        fail(ErrorCode::InvalidIndexSet, "index " + std::to_string(set[c]) + " out of range for " +
                                             std::to_string(m) + " features");
      }
      view.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(set[c]));
    }
    views.push_back(std::move(view));
  }
  return MultiViewDataset(std::move(views), std::nullopt, index_sets);
}

ViewMatrix concatenate_views(const MultiViewDataset& ds) {
  Eigen::Index width = 0;
  for (const auto& v : ds.views()) width += v.cols();
  ViewMatrix out(static_cast<Eigen::Index>(ds.size()), width);
  Eigen::Index offset = 0;
  for (const auto& v : ds.views()) {
    out.middleCols(offset, v.cols()) = v;
    offset += v.cols();
  }
  return out;
}

Eigen::MatrixXd read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());

  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto fields = split_fields(trimmed);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(ErrorCode::IoError, path.string() + ": non-numeric field on data row " +
                                   std::to_string(rows + 1));
    }
    first = false;
    if (cols == 0) cols = row.size();
    if (row.size() != cols) {
      fail(ErrorCode::IoError, path.string() + ": ragged row " + std::to_string(rows + 1));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail(ErrorCode::IoError, "cannot format value");
  return std::string(buf, ptr);
}

void write_csv(const fs::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  std::string line;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) line += ',';
      line += format_double(values(r, c));
    }
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

namespace {

json read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + manifest.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "malformed manifest " + manifest.string() + ": " + e.what());
  }
}

}  // namespace

MultiViewDataset load_dataset(const fs::path& manifest) {
  const json doc = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  if (!doc.contains("views") || !doc["views"].is_array()) {
    fail(ErrorCode::IoError, "manifest lacks a \"views\" array");
  }
  std::vector<ViewMatrix> views;
  for (const auto& entry : doc["views"]) views.push_back(read_csv(base / entry.get<std::string>()));
  std::optional<Eigen::MatrixXd> truth;
  if (doc.contains("ground_truth") && !doc["ground_truth"].is_null()) {
    truth = read_csv(base / doc["ground_truth"].get<std::string>());
  }
  MultiViewDataset ds(std::move(views), std::move(truth));
  if (doc.contains("n") && doc["n"].get<std::size_t>() != ds.size()) {
    fail(ErrorCode::ShapeMismatch, "manifest n disagrees with view row count");
  }
  return ds;
}

std::optional<std::vector<std::vector<Eigen::MatrixXd>>> load_manifest_covariances(
    const fs::path& manifest) {
  const json doc = read_manifest(manifest);
  if (!doc.contains("covariances") || doc["covariances"].is_null()) return std::nullopt;
  const fs::path base = manifest.parent_path();
  std::vector<std::vector<Eigen::MatrixXd>> out;
  for (const auto& entry : doc["covariances"]) {
    const Eigen::MatrixXd flat = read_csv(base / entry.get<std::string>());
    const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.cols()))));
    if (m * m != flat.cols()) fail(ErrorCode::IoError, "covariance rows must hold m*m values");
    std::vector<Eigen::MatrixXd> per_point;
    per_point.reserve(static_cast<std::size_t>(flat.rows()));
    for (Eigen::Index r = 0; r < flat.rows(); ++r) {
      Eigen::MatrixXd c(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) c(a, b) = flat(r, a * m + b);
      per_point.push_back(std::move(c));
    }
    out.push_back(std::move(per_point));
  }
  return out;
}

std::vector<fs::path> save_dataset(const MultiViewDataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
  std::vector<fs::path> written;
  json doc;
  doc["n"] = ds.size();
  doc["views"] = json::array();
  for (std::size_t l = 0; l < ds.num_views(); ++l) {
    const std::string name = "view_" + std::to_string(l) + ".csv";
    write_csv(dir / name, ds.view(l));
    written.push_back(dir / name);
    doc["views"].push_back(name);
  }
  if (ds.has_ground_truth()) {
    write_csv(dir / "ground_truth.csv", ds.ground_truth());
    written.push_back(dir / "ground_truth.csv");
    doc["ground_truth"] = "ground_truth.csv";
  }
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
  written.push_back(manifest);
  return written;
}

}  // namespace mvk
