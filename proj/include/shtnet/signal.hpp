#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shtnet {

/// Channel-major multichannel real signal (I × L).
class MultichannelSignal {
 public:
  MultichannelSignal() = default;
  MultichannelSignal(std::size_t channels, std::size_t samples, double fill = 0.0)
      : channels_(channels), samples_(samples), data_(channels * samples, fill) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t samples() const noexcept { return samples_; }

  std::span<double> channel(std::size_t i) {
    return {data_.data() + i * samples_, samples_};
  }
  std::span<const double> channel(std::size_t i) const {
    return {data_.data() + i * samples_, samples_};
  }

  double& operator()(std::size_t ch, std::size_t t) { return data_[ch * samples_ + t]; }
  double operator()(std::size_t ch, std::size_t t) const { return data_[ch * samples_ + t]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const MultichannelSignal&, const MultichannelSignal&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t samples_ = 0;
  std::vector<double> data_;
};

}  // namespace shtnet
