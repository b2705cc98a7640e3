#include "shtnet/ssafn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Core>

#include "shtnet/error.hpp"
#include "shtnet/tensor_io.hpp"

namespace shtnet::ssafn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstRowVector = Eigen::Map<const Eigen::RowVectorXd>;

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
inline double hswish(double x) noexcept { return x * std::clamp(x + 3.0, 0.0, 6.0) / 6.0; }

std::string key(std::string_view prefix, std::string_view leaf) {
  std::string k(prefix);
  k += '.';
  k += leaf;
  return k;
}

ConstMatrixMap as_matrix(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1))};
}

// Y = X W + b, X rows x in (row-major), W in x out.
RowMatrix linear(const Eigen::Ref<const RowMatrix>& x, const Tensor& w, const Tensor& b) {
  RowMatrix y = x * as_matrix(w);
  y.rowwise() += ConstRowVector(b.data(), static_cast<Eigen::Index>(b.size()));
  return y;
}

void softmax_rows(RowMatrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double mx = row.maxCoeff();
    // Terms below e^-80 of the row maximum are flushed to exact zero so the
    // following products never touch subnormals (an order of magnitude slower).
    const auto shifted = row.array() - mx;
    row = (shifted < -80.0).select(0.0, shifted.exp());
    row /= row.sum();
  }
}

void layer_norm_rows(RowMatrix& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const double mean = row.sum() / n;
    const double var = (row.array() - mean).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      row(c) = (row(c) - mean) * inv * gamma[static_cast<std::size_t>(c)] + beta[static_cast<std::size_t>(c)];
    }
  }
}

void require_rank3(const Tensor& a, const Config& cfg, const char* what) {
  if (a.rank() != 3 || a.dim(0) != cfg.channels || a.dim(2) != cfg.bins || a.dim(1) == 0) {
    throw Error(Errc::shape, std::string(what) + ": expected [" + std::to_string(cfg.channels) + ", T, " +
                                 std::to_string(cfg.bins) + "], got " + shape_string(a.shape()));
  }
}

void require_rank2(const Tensor& x, const Config& cfg, const char* what) {
  if (x.rank() != 2 || x.dim(1) != cfg.bins || x.dim(0) == 0) {
    throw Error(Errc::shape, std::string(what) + ": expected [T, " + std::to_string(cfg.bins) + "], got " +
                                 shape_string(x.shape()));
  }
}

std::uint64_t fnv1a64(const char* data, std::size_t n) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

constexpr char kMagic[4] = {'S', 'S', 'A', 'F'};

}  // namespace

void Config::validate() const {
  if (channels == 0 || bins == 0 || embed_dim == 0 || heads == 0 || attn_dim == 0 || reduction == 0) {
    throw Error(Errc::config, "SSAFN dimensions must be positive");
  }
  if (attn_dim % heads != 0) throw Error(Errc::config, "attention width must be divisible by the head count");
  for (std::size_t k : cbam_kernels) {
    if (k == 0 || k % 2 == 0) throw Error(Errc::config, "CBAM kernels must be odd");
  }
  if (!(log_floor > 0.0) || !(mvn_eps > 0.0) || !(layer_norm_eps > 0.0)) {
    throw Error(Errc::config, "numeric guards must be positive");
  }
}

std::size_t Config::reduced_channels() const noexcept { return std::max<std::size_t>(1, channels / reduction); }

nlohmann::json to_json(const Config& cfg) {
  return {
      {"channels", cfg.channels},
      {"bins", cfg.bins},
      {"embed_dim", cfg.embed_dim},
      {"heads", cfg.heads},
      {"attn_dim", cfg.attn_dim},
      {"ffn_dim", cfg.ffn_dim},
      {"cbam_kernels", cfg.cbam_kernels},
      {"reduction", cfg.reduction},
      {"joint_attention", cfg.joint_attention},
      {"rsacc", cfg.rsacc},
      {"mhsa", cfg.mhsa},
      {"log_floor", cfg.log_floor},
      {"mvn_eps", cfg.mvn_eps},
      {"layer_norm_eps", cfg.layer_norm_eps},
  };
}

Config config_from_json(const nlohmann::json& j) {
  Config c;
  try {
    c.channels = j.at("channels").get<std::size_t>();
    c.bins = j.at("bins").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.attn_dim = j.at("attn_dim").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.cbam_kernels = j.at("cbam_kernels").get<std::array<std::size_t, 4>>();
    c.reduction = j.at("reduction").get<std::size_t>();
    c.joint_attention = j.at("joint_attention").get<bool>();
    c.rsacc = j.at("rsacc").get<bool>();
    c.mhsa = j.at("mhsa").get<bool>();
    c.log_floor = j.at("log_floor").get<double>();
    c.mvn_eps = j.at("mvn_eps").get<double>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::weight_format, std::string("bad SSAFN config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<TensorSpec> weight_layout(const Config& cfg) {
  cfg.validate();
  using Init = TensorSpec::Init;
  const std::size_t C = cfg.channels;
  const std::size_t R = cfg.reduced_channels();
  const std::size_t F = cfg.bins;
  const std::size_t E = cfg.embed_dim;
  const std::size_t D = cfg.attn_dim;
  const std::size_t H = cfg.ffn_dim;

  std::vector<TensorSpec> out;
  auto linear_spec = [&out](const std::string& prefix, std::size_t in, std::size_t outw) {
    out.push_back({prefix + ".weight", {in, outw}, in});
    out.push_back({prefix + ".bias", {outw}, in});
  };

  if (cfg.joint_attention) {
    for (int b = 1; b <= 2; ++b) {
      const std::string block = "ja" + std::to_string(b);
      for (int k = 1; k <= 2; ++k) {
        const std::string p = block + ".cbam" + std::to_string(k);
        const std::size_t ks = cfg.cbam_kernels[static_cast<std::size_t>(2 * (b - 1) + (k - 1))];
        linear_spec(p + ".fc1", C, R);
        linear_spec(p + ".fc2", R, C);
        out.push_back({p + ".conv.weight", {2, ks, ks}, 2 * ks * ks});
        out.push_back({p + ".conv.bias", {1}, 2 * ks * ks});
      }
      linear_spec(block + ".coord.reduce", C, R);
      linear_spec(block + ".coord.time", R, C);
      linear_spec(block + ".coord.freq", R, C);
    }
  }
  if (cfg.rsacc) {
    linear_spec("rsacc.query", F, E);
    linear_spec("rsacc.key", F, E);
    linear_spec("rsacc.value", F, 1);
  }
  if (cfg.mhsa) {
    linear_spec("mhsa.in_proj", F, D);
    linear_spec("mhsa.query", D, D);
    linear_spec("mhsa.key", D, D);
    linear_spec("mhsa.value", D, D);
    linear_spec("mhsa.out", D, D);
    out.push_back({"mhsa.norm1.weight", {D}, D, Init::ones});
    out.push_back({"mhsa.norm1.bias", {D}, D, Init::zeros});
    if (H > 0) {
      linear_spec("mhsa.ffn1", D, H);
      linear_spec("mhsa.ffn2", H, D);
      out.push_back({"mhsa.norm2.weight", {D}, D, Init::ones});
      out.push_back({"mhsa.norm2.bias", {D}, D, Init::zeros});
    }
    linear_spec("mhsa.out_proj", D, F);
  }
  return out;
}

Weights::Weights(Config cfg, std::map<std::string, Tensor> tensors)
    : cfg_(std::move(cfg)), tensors_(std::move(tensors)) {
  const auto layout = weight_layout(cfg_);
  if (layout.size() != tensors_.size()) {
    throw Error(Errc::weight_format, "expected " + std::to_string(layout.size()) + " tensors, found " +
                                         std::to_string(tensors_.size()));
  }
  for (const auto& spec : layout) {
    const auto it = tensors_.find(spec.name);
    if (it == tensors_.end()) throw Error(Errc::weight_format, "missing tensor " + spec.name);
    if (it->second.shape() != spec.shape) {
      throw Error(Errc::weight_format, "tensor " + spec.name + " has shape " + shape_string(it->second.shape()) +
                                           ", expected " + shape_string(spec.shape));
    }
    if (!it->second.all_finite()) throw Error(Errc::weight_format, "tensor " + spec.name + " is not finite");
  }
}

const Tensor& Weights::at(std::string_view name) const {
  const auto it = tensors_.find(std::string(name));
  if (it == tensors_.end()) throw Error(Errc::weight_format, "missing tensor " + std::string(name));
  return it->second;
}

Weights init_weights(const Config& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, Tensor> tensors;
  for (const auto& spec : weight_layout(cfg)) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case TensorSpec::Init::ones:
        std::fill(t.values().begin(), t.values().end(), 1.0);
        break;
      case TensorSpec::Init::zeros:
        break;
      case TensorSpec::Init::uniform: {
        const double a = std::sqrt(1.0 / static_cast<double>(spec.fan_in));
        for (double& v : t.values()) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          v = static_cast<double>(static_cast<float>((2.0 * u - 1.0) * a));
        }
        break;
      }
    }
    tensors.emplace(spec.name, std::move(t));
  }
  return Weights(cfg, std::move(tensors));
}

std::size_t param_count(const std::map<std::string, Tensor>& tensors) noexcept {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

std::size_t param_count(const Weights& w) noexcept { return param_count(w.tensors()); }

std::string serialize_weights(const Weights& w) {
  std::string blob;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, t] : w.tensors()) {
    tensors[name] = {{"shape", t.shape()}, {"dtype", "f32"}, {"offset", blob.size()}};
    for (double v : t.values()) {
      const float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      blob.append(buf, 4);
    }
  }
  nlohmann::json manifest = {
      {"format", "SSAF"},
      {"version", 1},
      {"config", to_json(w.config())},
      {"tensors", tensors},
      {"blob_bytes", blob.size()},
      {"checksum", "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()))},
  };
  const std::string text = manifest.dump();
  std::string out(kMagic, 4);
  const auto len = static_cast<std::uint64_t>(text.size());
  char buf[8];
  std::memcpy(buf, &len, 8);
  out.append(buf, 8);
  out += text;
  out += blob;
  return out;
}

Weights deserialize_weights(const std::string& bytes) {
  static_assert(std::endian::native == std::endian::little, "SSAF I/O assumes a little-endian host");
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::weight_format, "not an SSAF weight file");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 8);
  if (len > bytes.size() - 12) throw Error(Errc::weight_format, "SSAF manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::weight_format, std::string("SSAF manifest is not valid JSON: ") + e.what());
  }
  const std::string blob = bytes.substr(12 + len);
  std::map<std::string, Tensor> tensors;
  Config cfg;
  try {
    if (manifest.at("format") != "SSAF" || manifest.at("version") != 1) {
      throw Error(Errc::weight_format, "unsupported SSAF version");
    }
    if (manifest.at("blob_bytes").get<std::size_t>() != blob.size()) {
      throw Error(Errc::weight_format, "SSAF blob has " + std::to_string(blob.size()) + " bytes, manifest says " +
                                           manifest.at("blob_bytes").dump());
    }
    if (manifest.at("checksum").get<std::string>() != "fnv1a64:" + hex64(fnv1a64(blob.data(), blob.size()))) {
      throw Error(Errc::weight_format, "SSAF checksum mismatch (file corrupted)");
    }
    cfg = config_from_json(manifest.at("config"));
    for (const auto& [name, entry] : manifest.at("tensors").items()) {
      if (entry.at("dtype") != "f32") throw Error(Errc::weight_format, "tensor " + name + " is not f32");
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t n = shape_product(shape);
      if (offset > blob.size() || 4 * n > blob.size() - offset) {
        throw Error(Errc::weight_format, "tensor " + name + " lies outside the blob");
      }
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, blob.data() + offset + 4 * i, 4);
        data[i] = f;
      }
      tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::weight_format, std::string("bad SSAF manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::weight_format) throw;
    throw Error(Errc::weight_format, e.what());
  }
  return Weights(cfg, std::move(tensors));
}

void save_weights(const std::filesystem::path& path, const Weights& w) { write_file(path, serialize_weights(w)); }

Weights load_weights(const std::filesystem::path& path) { return deserialize_weights(read_file(path)); }

namespace {

// Both gates are applied in place; callers own the copy.
void cbam_apply(Tensor& a, const Weights& w, std::string_view prefix) {
  const std::size_t C = a.dim(0);
  const std::size_t T = a.dim(1);
  const std::size_t F = a.dim(2);
  const std::size_t TF = T * F;

  // Channel gate from global average pooling.
  RowMatrix pooled(1, static_cast<Eigen::Index>(C));
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    const double* p = a.data() + c * TF;
    for (std::size_t k = 0; k < TF; ++k) s += p[k];
    pooled(0, static_cast<Eigen::Index>(c)) = s / static_cast<double>(TF);
  }
  RowMatrix hidden = linear(pooled, w.at(key(prefix, "fc1.weight")), w.at(key(prefix, "fc1.bias")));
  hidden = hidden.unaryExpr(&relu);
  const RowMatrix gate = linear(hidden, w.at(key(prefix, "fc2.weight")), w.at(key(prefix, "fc2.bias")))
                             .unaryExpr(&sigmoid);

  Tensor& out = a;
  for (std::size_t c = 0; c < C; ++c) {
    const double g = gate(0, static_cast<Eigen::Index>(c));
    double* p = out.data() + c * TF;
    for (std::size_t k = 0; k < TF; ++k) p[k] *= g;
  }

  // Spatial gate over the (T, F) plane from channel mean and max maps.
  std::vector<double> mean_map(TF, 0.0);
  std::vector<double> max_map(out.data(), out.data() + TF);
  for (std::size_t c = 0; c < C; ++c) {
    const double* p = out.data() + c * TF;
    for (std::size_t k = 0; k < TF; ++k) {
      mean_map[k] += p[k];
      max_map[k] = std::max(max_map[k], p[k]);
    }
  }
  for (double& v : mean_map) v /= static_cast<double>(C);

  const Tensor& kernel = w.at(key(prefix, "conv.weight"));
  const double bias = w.at(key(prefix, "conv.bias"))[0];
  const std::size_t ks = kernel.dim(1);
  const auto half = static_cast<std::ptrdiff_t>(ks / 2);
  const auto Ti = static_cast<std::ptrdiff_t>(T);
  const auto Fi = static_cast<std::ptrdiff_t>(F);
  std::vector<double> spatial(TF, bias);
  const std::vector<double>* maps[2] = {&mean_map, &max_map};
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const std::vector<double>& m = *maps[ch];
    for (std::size_t dy = 0; dy < ks; ++dy) {
      const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - half;
      const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -oy);
      const std::ptrdiff_t t1 = std::min(Ti, Ti - oy);
      for (std::size_t dx = 0; dx < ks; ++dx) {
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - half;
        const double kv = kernel.at(ch, dy, dx);
        const std::ptrdiff_t f0 = std::max<std::ptrdiff_t>(0, -ox);
        const std::ptrdiff_t f1 = std::min(Fi, Fi - ox);
        for (std::ptrdiff_t t = t0; t < t1; ++t) {
          double* dst = spatial.data() + t * Fi;
          const double* src = m.data() + (t + oy) * Fi + ox;
          for (std::ptrdiff_t f = f0; f < f1; ++f) dst[f] += kv * src[f];
        }
      }
    }
  }
  for (double& v : spatial) v = sigmoid(v);
  for (std::size_t c = 0; c < C; ++c) {
    double* p = out.data() + c * TF;
    for (std::size_t k = 0; k < TF; ++k) p[k] *= spatial[k];
  }
}

void coord_apply(Tensor& a, const Weights& w, std::string_view prefix) {
  const std::size_t C = a.dim(0);
  const std::size_t T = a.dim(1);
  const std::size_t F = a.dim(2);

  // Directional pooling: rows 0..T-1 are time positions, T..T+F-1 frequency.
  RowMatrix desc = RowMatrix::Zero(static_cast<Eigen::Index>(T + F), static_cast<Eigen::Index>(C));
  for (std::size_t c = 0; c < C; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    for (std::size_t t = 0; t < T; ++t) {
      const double* row = a.data() + (c * T + t) * F;
      double s = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        s += row[f];
        desc(static_cast<Eigen::Index>(T + f), ci) += row[f];
      }
      desc(static_cast<Eigen::Index>(t), ci) = s / static_cast<double>(F);
    }
    for (std::size_t f = 0; f < F; ++f) desc(static_cast<Eigen::Index>(T + f), ci) /= static_cast<double>(T);
  }

  RowMatrix z = linear(desc, w.at(key(prefix, "reduce.weight")), w.at(key(prefix, "reduce.bias")))
                    .unaryExpr(&hswish);
  const RowMatrix time_gate =
      linear(z.topRows(static_cast<Eigen::Index>(T)), w.at(key(prefix, "time.weight")), w.at(key(prefix, "time.bias")))
          .unaryExpr(&sigmoid);
  const RowMatrix freq_gate = linear(z.bottomRows(static_cast<Eigen::Index>(F)), w.at(key(prefix, "freq.weight")),
                                     w.at(key(prefix, "freq.bias")))
                                  .unaryExpr(&sigmoid);

  for (std::size_t c = 0; c < C; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    for (std::size_t t = 0; t < T; ++t) {
      const double gt = time_gate(static_cast<Eigen::Index>(t), ci);
      double* p = a.data() + (c * T + t) * F;
      for (std::size_t f = 0; f < F; ++f) p[f] = p[f] * gt * freq_gate(static_cast<Eigen::Index>(f), ci);
    }
  }
}

void add_into(Tensor& x, const Tensor& y) {
  double* p = x.data();
  const double* q = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) p[i] += q[i];
}

}  // namespace

Tensor cbam_forward(const Tensor& a, const Weights& w, std::string_view prefix) {
  require_rank3(a, w.config(), "cbam");
  Tensor out = a;
  cbam_apply(out, w, prefix);
  return out;
}

Tensor coor_attention_forward(const Tensor& a, const Weights& w, std::string_view prefix) {
  require_rank3(a, w.config(), "coord attention");
  Tensor out = a;
  coord_apply(out, w, prefix);
  return out;
}

Tensor joint_attention_block(const Tensor& a, const Weights& w, int block) {
  if (block != 1 && block != 2) throw Error(Errc::config, "joint attention block must be 1 or 2");
  require_rank3(a, w.config(), "joint attention");
  const std::string p = "ja" + std::to_string(block);
  // x <- a + g(x) for each gate in turn, reusing one buffer
  Tensor x = a;
  cbam_apply(x, w, p + ".cbam1");
  add_into(x, a);
  cbam_apply(x, w, p + ".cbam2");
  add_into(x, a);
  coord_apply(x, w, p + ".coord");
  add_into(x, a);
  return x;
}

Tensor rsacc_forward(const Tensor& a, const Weights& w, AttentionTrace* trace) {
  const Config& cfg = w.config();
  require_rank3(a, cfg, "rsacc");
  const std::size_t C = a.dim(0);
  const std::size_t T = a.dim(1);
  const std::size_t F = a.dim(2);
  const std::size_t E = cfg.embed_dim;

  // log + MVN per (channel, bin) across time; rows of x are (c, t).
  RowMatrix x(static_cast<Eigen::Index>(C * T), static_cast<Eigen::Index>(F));
  for (std::size_t i = 0; i < C * T * F; ++i) {
    const double v = a[i] + cfg.log_floor;
    if (!(v > 0.0)) throw Error(Errc::numeric_domain, "rSACC input is negative beyond the log floor");
    x.data()[i] = std::log(v);
  }
  for (std::size_t c = 0; c < C; ++c) {
    auto block = x.middleRows(static_cast<Eigen::Index>(c * T), static_cast<Eigen::Index>(T));
    const Eigen::RowVectorXd mean = block.colwise().sum() / static_cast<double>(T);
    block.rowwise() -= mean;
    const Eigen::RowVectorXd var = block.array().square().colwise().sum() / static_cast<double>(T);
    const Eigen::RowVectorXd inv = (var.array() + cfg.mvn_eps).rsqrt();
    block.array().rowwise() *= inv.array();
  }

  const RowMatrix q = linear(x, w.at("rsacc.query.weight"), w.at("rsacc.query.bias"));
  const RowMatrix k = linear(x, w.at("rsacc.key.weight"), w.at("rsacc.key.bias"));
  const RowMatrix v = linear(x, w.at("rsacc.value.weight"), w.at("rsacc.value.bias"));

  if (trace) trace->probabilities = Tensor(std::vector<std::size_t>{T, C, C});
  const double scale = 1.0 / std::sqrt(static_cast<double>(E));
  RowMatrix scores(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(C));
  std::vector<double> weight(C);
  Tensor out(std::vector<std::size_t>{T, F});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < C; ++i) {
      const auto qi = q.row(static_cast<Eigen::Index>(i * T + t));
      for (std::size_t j = 0; j < C; ++j) {
        scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            qi.dot(k.row(static_cast<Eigen::Index>(j * T + t))) * scale;
      }
    }
    softmax_rows(scores);
    for (std::size_t i = 0; i < C; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < C; ++j) {
        const double p = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        s += p * v(static_cast<Eigen::Index>(j * T + t), 0);
        if (trace) trace->probabilities.at(t, i, j) = p;
      }
      weight[i] = s;
    }
    double* dst = out.data() + t * F;
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = a.data() + (c * T + t) * F;
      for (std::size_t f = 0; f < F; ++f) dst[f] += weight[c] * src[f];
    }
  }
  return out;
}

Tensor channel_mean(const Tensor& a) {
  if (a.rank() != 3 || a.dim(0) == 0) throw Error(Errc::shape, "channel_mean expects a C x T x F tensor");
  const std::size_t C = a.dim(0);
  const std::size_t TF = a.dim(1) * a.dim(2);
  Tensor out(std::vector<std::size_t>{a.dim(1), a.dim(2)});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < TF; ++k) out[k] += a[c * TF + k];
  }
  for (double& v : out.values()) v /= static_cast<double>(C);
  return out;
}

Tensor mhsa_postfilter(const Tensor& x, const Weights& w, AttentionTrace* trace) {
  const Config& cfg = w.config();
  require_rank2(x, cfg, "mhsa");
  const std::size_t T = x.dim(0);
  const std::size_t D = cfg.attn_dim;
  const std::size_t heads = cfg.heads;
  const std::size_t dh = D / heads;
  const auto Ti = static_cast<Eigen::Index>(T);

  const ConstMatrixMap input(x.data(), Ti, static_cast<Eigen::Index>(cfg.bins));
  RowMatrix h = linear(input, w.at("mhsa.in_proj.weight"), w.at("mhsa.in_proj.bias"));
  const RowMatrix q = linear(h, w.at("mhsa.query.weight"), w.at("mhsa.query.bias"));
  const RowMatrix k = linear(h, w.at("mhsa.key.weight"), w.at("mhsa.key.bias"));
  const RowMatrix v = linear(h, w.at("mhsa.value.weight"), w.at("mhsa.value.bias"));

  if (trace) trace->probabilities = Tensor(std::vector<std::size_t>{heads, T, T});
  RowMatrix context(Ti, static_cast<Eigen::Index>(D));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const auto c0 = static_cast<Eigen::Index>(hd * dh);
    const auto width = static_cast<Eigen::Index>(dh);
    RowMatrix scores = q.middleCols(c0, width) * k.middleCols(c0, width).transpose() * scale;
    softmax_rows(scores);
    if (trace) std::copy(scores.data(), scores.data() + T * T, trace->probabilities.data() + hd * T * T);
    context.middleCols(c0, width) = scores * v.middleCols(c0, width);
  }
  h += linear(context, w.at("mhsa.out.weight"), w.at("mhsa.out.bias"));
  layer_norm_rows(h, w.at("mhsa.norm1.weight"), w.at("mhsa.norm1.bias"), cfg.layer_norm_eps);

  if (cfg.ffn_dim > 0) {
    const RowMatrix inner = linear(h, w.at("mhsa.ffn1.weight"), w.at("mhsa.ffn1.bias")).unaryExpr(&relu);
    h += linear(inner, w.at("mhsa.ffn2.weight"), w.at("mhsa.ffn2.bias"));
    layer_norm_rows(h, w.at("mhsa.norm2.weight"), w.at("mhsa.norm2.bias"), cfg.layer_norm_eps);
  }

  const RowMatrix y = linear(h, w.at("mhsa.out_proj.weight"), w.at("mhsa.out_proj.bias"));
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y.data()[i];
  return out;
}

Tensor ssafn_forward(const Tensor& a, const Weights& w) {
  const Config& cfg = w.config();
  require_rank3(a, cfg, "ssafn");
  a.require_finite("SSAFN input");
  Tensor x = a;
  if (cfg.joint_attention) {
    x = joint_attention_block(x, w, 1);
    x = joint_attention_block(x, w, 2);
  }
  Tensor y = cfg.rsacc ? rsacc_forward(x, w) : channel_mean(x);
  if (cfg.mhsa) y = mhsa_postfilter(y, w);
  y.require_finite("SSAFN output");
  return y;
}

}  // namespace shtnet::ssafn
