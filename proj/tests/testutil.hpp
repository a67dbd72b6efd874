#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "figlab/diff.hpp"

namespace figlab::testutil {

// Central finite differences over a flat parameter buffer.
inline std::vector<double> finite_difference(std::vector<double>& values,
                                             const std::function<double()>& eval,
                                             double h = 1e-5) {
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = eval();
    values[i] = keep - h;
    const double down = eval();
    values[i] = keep;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max(1.0, std::abs(analytic) + std::abs(numeric));
  return std::abs(analytic - numeric) / denom;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("figlab_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace figlab::testutil
