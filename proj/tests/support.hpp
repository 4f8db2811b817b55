#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "pbbc/model.hpp"

namespace pbbc::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pbbc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ParticleSet random_particles(std::mt19937_64& rng, std::size_t n, int dims, double lo = 0.0, double hi = 1.0,
                                    int precision = 64) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> coords(n * dims);
  for (double& v : coords) {
    v = u(rng);
    if (precision == 32) v = static_cast<double>(static_cast<float>(v));
  }
  return ParticleSet(std::move(coords), dims, precision);
}

inline ParticleSet points2(std::initializer_list<std::array<double, 2>> pts) {
  std::vector<double> coords;
  for (const auto& p : pts) coords.insert(coords.end(), p.begin(), p.end());
  return ParticleSet(std::move(coords), 2, 64);
}

inline ParticleSet points3(std::initializer_list<std::array<double, 3>> pts) {
  std::vector<double> coords;
  for (const auto& p : pts) coords.insert(coords.end(), p.begin(), p.end());
  return ParticleSet(std::move(coords), 3, 64);
}

}  // namespace pbbc::testing
