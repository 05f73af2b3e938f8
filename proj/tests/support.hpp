#pragma once

#include "mvk/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

namespace support {

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Code of the mvk::Error thrown by fn; fails the test when nothing is thrown.
template <class Fn>
mvk::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const mvk::Error& e) {
    return e.code();
  }
  FAIL("expected an mvk::Error");
  return mvk::ErrorCode::InvalidArgument;
}

}  // namespace support
