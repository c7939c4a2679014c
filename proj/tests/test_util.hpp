#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "synco/core_math.hpp"

namespace synco::testing {

inline FeatureVector random_unit(std::size_t d, Rng& rng) {
  while (true) {
    Vector v = gaussian_sample(d, 1.0, rng);
    if (norm(v) > 1e-6) return normalize(v);
  }
}

inline Vector unit(const Vector& raw) {
  const FeatureVector f = normalize(raw);
  return {f.values().begin(), f.values().end()};
}

inline FeatureSet random_set(std::size_t count, std::size_t d, Rng& rng) {
  FeatureSet s(d);
  for (std::size_t i = 0; i < count; ++i) s.push_back(random_unit(d, rng));
  return s;
}

inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("synco_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace synco::testing
