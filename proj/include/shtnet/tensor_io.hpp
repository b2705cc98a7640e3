#pragma once

// SHT1 tensor file: "SHT1" | u32 rank | u32 dims[rank] | u8 dtype (0 = f32)
// | row-major float32 payload, all little-endian.

#include <filesystem>
#include <string>

#include "shtnet/tensor.hpp"

namespace shtnet {

std::string encode_sht1(const Tensor& t);
/// Throws Errc::format on bad magic, dtype, truncation or trailing bytes.
Tensor decode_sht1(const std::string& bytes);

void write_sht1(const std::filesystem::path& path, const Tensor& t);
Tensor read_sht1(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace shtnet
