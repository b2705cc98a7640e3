#include "shtnet/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "shtnet/error.hpp"

namespace shtnet {

namespace {

static_assert(std::endian::native == std::endian::little, "SHT1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'H', 'T', '1'};
constexpr std::uint8_t kDtypeF32 = 0;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw Error(Errc::format, "SHT1 file truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_sht1(const Tensor& t) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<std::uint8_t>(out, kDtypeF32);
  out.reserve(out.size() + 4 * t.size());
  for (double v : t.values()) put<float>(out, static_cast<float>(v));
  return out;
}

Tensor decode_sht1(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::format, "not an SHT1 file");
  std::size_t pos = 4;
  const auto rank = take<std::uint32_t>(bytes, pos);
  if (rank > 16) throw Error(Errc::format, "implausible SHT1 rank " + std::to_string(rank));
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = take<std::uint32_t>(bytes, pos);
  if (take<std::uint8_t>(bytes, pos) != kDtypeF32) throw Error(Errc::format, "unsupported SHT1 dtype");
  const std::size_t n = shape_product(shape);
  if ((bytes.size() - pos) != 4 * n) {
    throw Error(Errc::format, "SHT1 payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                                  std::to_string(4 * n));
  }
  std::vector<double> data(n);
  for (auto& v : data) v = take<float>(bytes, pos);
  return Tensor(std::move(shape), std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::io, "failed reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

void write_sht1(const std::filesystem::path& path, const Tensor& t) { write_file(path, encode_sht1(t)); }

Tensor read_sht1(const std::filesystem::path& path) { return decode_sht1(read_file(path)); }

}  // namespace shtnet
