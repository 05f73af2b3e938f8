#include "mvk/kernel_io.hpp"

#include "mvk/dataset.hpp"
#include "mvk/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace mvk {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "MVK1 I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic{'M', 'V', 'K', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

}  // namespace

void write_kernel_csv(const fs::path& path, const Eigen::MatrixXd& values) { write_csv(path, values); }

Eigen::MatrixXd read_kernel_csv(const fs::path& path) {
  Eigen::MatrixXd k = read_csv(path);
  if (k.rows() != k.cols()) fail(ErrorCode::ShapeMismatch, path.string() + ": kernel is not square");
  return k;
}

void write_kernel_binary(const fs::path& path, const Eigen::MatrixXd& values) {
  if (values.rows() != values.cols()) fail(ErrorCode::ShapeMismatch, "kernel is not square");
  if (values.rows() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::IoError, "kernel too large for the MVK1 header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(values.rows()));
  put_u32(out, 0);
  put_u32(out, 0);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(rm.size() * static_cast<Eigen::Index>(sizeof(double))));
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

Eigen::MatrixXd read_kernel_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t n = 0;
  std::uint32_t reserved = 0;
  in.read(magic.data(), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || magic != kMagic) fail(ErrorCode::IoError, path.string() + ": not an MVK1 kernel file");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(rm.size() * static_cast<Eigen::Index>(sizeof(double))));
  if (!in) fail(ErrorCode::IoError, path.string() + ": truncated kernel data");
  return rm;
}

Eigen::MatrixXd read_kernel(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in && magic == kMagic) return read_kernel_binary(path);
  return read_kernel_csv(path);
}

}  // namespace mvk
