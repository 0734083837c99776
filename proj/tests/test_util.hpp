#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "evdetect/error.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("evdetect_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Random non-negative load with zero runs and jumps, so peak and median
/// paths get exercised.
inline std::vector<double> random_load(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  double level = 1.0;
  for (auto& v : x) {
    const double r = u(gen);
    if (r < 0.03) level = 0.0;
    else if (r < 0.08) level = 0.2 + 8.0 * u(gen);
    else if (r < 0.10) level = std::round(level);  // repeated values
    v = level == 0.0 ? 0.0 : level * (0.9 + 0.2 * u(gen));
  }
  return x;
}

}  // namespace testutil

#define EXPECT_ERROR_CODE(statement, expected)                              \
  do {                                                                      \
    try {                                                                   \
      statement;                                                            \
      ADD_FAILURE() << "expected " << evdetect::to_string(expected);        \
    } catch (const evdetect::Error& e_) {                                   \
      EXPECT_EQ(e_.code(), expected) << e_.what();                          \
    }                                                                       \
  } while (0)
