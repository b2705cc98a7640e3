#pragma once

// Spatio-spectral attention fusion network, inference only.
//
//   A (C x T x F) -> JointAttention(9, 7) -> JointAttention(5, 3)
//                 -> rSACC (C x T x F -> T x F) -> MHSA post-filter -> T x F
//
// Linear weights are stored [in, out] and applied as x W + b.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shtnet/tensor.hpp"

namespace shtnet::ssafn {

struct Config {
  std::size_t channels = 25;
  std::size_t bins = 257;
  std::size_t embed_dim = 64;  ///< rSACC E
  std::size_t heads = 2;
  std::size_t attn_dim = 64;
  std::size_t ffn_dim = 2048;  ///< 0 disables the post-filter feed-forward
  std::array<std::size_t, 4> cbam_kernels{9, 7, 5, 3};
  std::size_t reduction = 5;

  bool joint_attention = true;
  bool rsacc = true;  ///< false: channel mean
  bool mhsa = true;

  double log_floor = 1e-8;
  double mvn_eps = 1e-8;
  double layer_norm_eps = 1e-5;

  void validate() const;
  /// max(1, channels / reduction)
  std::size_t reduced_channels() const noexcept;

  friend bool operator==(const Config&, const Config&) = default;
};

nlohmann::json to_json(const Config& cfg);
Config config_from_json(const nlohmann::json& j);

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t fan_in = 1;
  enum class Init { uniform, ones, zeros } init = Init::uniform;
};

/// Every parameter tensor implied by the config, in canonical order.
std::vector<TensorSpec> weight_layout(const Config& cfg);

class Weights {
 public:
  Weights() = default;
  Weights(Config cfg, std::map<std::string, Tensor> tensors);

  const Config& config() const noexcept { return cfg_; }
  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }
  /// Throws Errc::weight_format if missing.
  const Tensor& at(std::string_view name) const;

  friend bool operator==(const Weights&, const Weights&) = default;

 private:
  Config cfg_;
  std::map<std::string, Tensor> tensors_;
};

/// uniform(-a, a), a = sqrt(1 / fan_in); values are float-representable so
/// the float32 file round trip is exact.
Weights init_weights(const Config& cfg, std::uint64_t seed);
std::size_t param_count(const Weights& w) noexcept;
std::size_t param_count(const std::map<std::string, Tensor>& tensors) noexcept;

void save_weights(const std::filesystem::path& path, const Weights& w);
/// Throws Errc::weight_format for bad magic, manifest, checksum, shapes or
/// non-finite values; Errc::io if the file cannot be read.
Weights load_weights(const std::filesystem::path& path);
std::string serialize_weights(const Weights& w);
Weights deserialize_weights(const std::string& bytes);

struct AttentionTrace {
  /// rSACC: T x C x C softmax. MHSA: heads x T x T softmax.
  Tensor probabilities;
};

// Each stage takes and returns tensors; `prefix` selects the parameter
// group, e.g. "ja1.cbam2" or "ja2.coord".
Tensor cbam_forward(const Tensor& a, const Weights& w, std::string_view prefix);
Tensor coor_attention_forward(const Tensor& a, const Weights& w, std::string_view prefix);
/// A + Coord(A + CBAM_b(A + CBAM_a(A))) for block 1 or 2.
Tensor joint_attention_block(const Tensor& a, const Weights& w, int block);
Tensor rsacc_forward(const Tensor& a, const Weights& w, AttentionTrace* trace = nullptr);
Tensor channel_mean(const Tensor& a);
Tensor mhsa_postfilter(const Tensor& x, const Weights& w, AttentionTrace* trace = nullptr);
/// Full network honouring the config's ablation switches. C x T x F -> T x F.
Tensor ssafn_forward(const Tensor& a, const Weights& w);

}  // namespace shtnet::ssafn
