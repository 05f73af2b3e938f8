#pragma once

#include "mvk/multiview.hpp"

#include <filesystem>

namespace mvk {

void write_kernel_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values);
Eigen::MatrixXd read_kernel_csv(const std::filesystem::path& path);

/// 16-byte header ("MVK1", u32 n, two reserved u32 = 0), then n*n little-endian
/// float64 values in row-major order.
void write_kernel_binary(const std::filesystem::path& path, const Eigen::MatrixXd& values);
Eigen::MatrixXd read_kernel_binary(const std::filesystem::path& path);

/// Dispatches on the file's magic bytes.
Eigen::MatrixXd read_kernel(const std::filesystem::path& path);

}  // namespace mvk
