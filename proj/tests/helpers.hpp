#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "shtnet/signal.hpp"
#include "shtnet/tensor.hpp"

namespace testing {

inline shtnet::MultichannelSignal random_signal(std::size_t channels, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  shtnet::MultichannelSignal s(channels, samples);
  for (std::size_t c = 0; c < channels; ++c) {
    for (double& v : s.channel(c)) v = dist(rng);
  }
  return s;
}

inline shtnet::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = 0.0,
                                    double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  shtnet::Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline double max_abs_diff(const shtnet::Tensor& a, const shtnet::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("shtnet_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
