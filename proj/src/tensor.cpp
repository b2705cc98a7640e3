#include "shtnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "shtnet/error.hpp"

namespace shtnet {

std::size_t shape_product(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw Error(Errc::shape, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                 shape_string(shape_));
  }
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite()) throw Error(Errc::numeric_domain, what + " contains NaN or Inf");
}

void Tensor::require_shape(std::initializer_list<std::size_t> expected, const std::string& what) const {
  if (!std::equal(shape_.begin(), shape_.end(), expected.begin(), expected.end())) {
    std::vector<std::size_t> e(expected);
    throw Error(Errc::shape, what + ": expected " + shape_string(e) + ", got " + shape_string(shape_));
  }
}

}  // namespace shtnet
