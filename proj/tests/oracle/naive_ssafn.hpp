#pragma once

// Scalar-loop reference implementation of the SSAFN forward pass. Written
// independently of src/ssafn.cpp (no Eigen, no shared helpers) so the two can
// be compared element by element in tests.

#include <string>

#include "shtnet/ssafn.hpp"

namespace oracle {

shtnet::Tensor cbam(const shtnet::Tensor& a, const shtnet::ssafn::Weights& w, const std::string& prefix);
shtnet::Tensor coord(const shtnet::Tensor& a, const shtnet::ssafn::Weights& w, const std::string& prefix);
shtnet::Tensor joint_attention(const shtnet::Tensor& a, const shtnet::ssafn::Weights& w, int block);
shtnet::Tensor rsacc(const shtnet::Tensor& a, const shtnet::ssafn::Weights& w);
shtnet::Tensor mhsa(const shtnet::Tensor& x, const shtnet::ssafn::Weights& w);
shtnet::Tensor forward(const shtnet::Tensor& a, const shtnet::ssafn::Weights& w);

}  // namespace oracle
