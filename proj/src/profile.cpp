#include "shtnet/profile.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "shtnet/error.hpp"
#include "shtnet/harmonics.hpp"

namespace shtnet::profile {

namespace {

using u64 = std::uint64_t;

u64 fft_flops(std::size_t n) noexcept {
  return static_cast<u64>(std::llround(5.0 * static_cast<double>(n) * std::log2(static_cast<double>(n))));
}

u64 stft_flops(std::size_t channels, std::size_t frames, const StftConfig& s) noexcept {
  return static_cast<u64>(channels) * frames * (s.frame_len + fft_flops(s.fft_size));
}

struct Dims {
  u64 C, T, F, R, X, TF;
};

LayerCost cbam_cost(const std::string& name, const Dims& d, u64 k) {
  const u64 flops = 5 * d.X + 4 * k * k * d.TF + 3 * d.TF + 4 * d.C * d.R + 2 * d.R + 2 * d.C;
  const u64 params = d.C * d.R + d.R + d.R * d.C + d.C + 2 * k * k + 1;
  return {name, "cbam", flops, params};
}

LayerCost coord_cost(const std::string& name, const Dims& d) {
  const u64 positions = d.T + d.F;
  const u64 flops = 2 * d.X + positions * d.C + positions * (2 * d.C * d.R + d.R + 3 * d.R) +
                    positions * (2 * d.R * d.C + d.C + d.C) + 2 * d.X;
  const u64 params = d.C * d.R + d.R + 2 * (d.R * d.C + d.C);
  return {name, "coord_attention", flops, params};
}

}  // namespace

u64 CostModel::total_flops() const noexcept {
  return std::accumulate(layers.begin(), layers.end(), u64{0}, [](u64 s, const LayerCost& l) { return s + l.flops; });
}

u64 CostModel::total_params() const noexcept {
  return std::accumulate(layers.begin(), layers.end(), u64{0}, [](u64 s, const LayerCost& l) { return s + l.params; });
}

std::size_t samples_for(double seconds, const StftConfig& stft) noexcept {
  if (!(seconds > 0.0)) return 0;
  return static_cast<std::size_t>(std::llround(seconds * stft.sample_rate));
}

CostModel shtnet_cost_frames(std::size_t samples, std::size_t frames, const PipelineConfig& cfg) {
  CostModel m{"shtnet", {}};
  const u64 C = static_cast<u64>(sh_channel_count(cfg.order));
  const u64 I = cfg.mics;
  const auto& s = cfg.ssafn;
  const u64 F = cfg.stft.bins();
  const u64 T = frames;
  const Dims d{C, T, F, s.reduced_channels(), C * T * F, T * F};

  m.layers.push_back({"sht_mixing", "linear", 2 * C * I * samples, 0});
  m.layers.push_back({"stft", "fft", stft_flops(C, T, cfg.stft), 0});
  m.layers.push_back({"magnitude", "elementwise", 4 * d.X, 0});

  if (s.joint_attention) {
    for (int b = 0; b < 2; ++b) {
      const std::string p = "ja" + std::to_string(b + 1);
      m.layers.push_back(cbam_cost(p + ".cbam1", d, s.cbam_kernels[static_cast<std::size_t>(2 * b)]));
      m.layers.push_back(cbam_cost(p + ".cbam2", d, s.cbam_kernels[static_cast<std::size_t>(2 * b + 1)]));
      m.layers.push_back(coord_cost(p + ".coord", d));
      m.layers.push_back({p + ".residual", "elementwise", 3 * d.X, 0});
    }
  }
  if (s.rsacc) {
    const u64 E = s.embed_dim;
    const u64 rows = C * T;
    const u64 flops = 2 * d.X + 5 * d.X + 2 * C * F + 2 * (2 * rows * F * E + rows * E) + (2 * rows * F + rows) +
                      T * C * C * (2 * E + 1) + 4 * T * C * C + 2 * T * C * C + 2 * d.X;
    const u64 params = 2 * (F * E + E) + F + 1;
    m.layers.push_back({"rsacc", "channel_combiner", flops, params});
  } else {
    m.layers.push_back({"channel_mean", "elementwise", d.X + d.TF, 0});
  }
  if (s.mhsa) {
    const u64 D = s.attn_dim;
    const u64 H = s.ffn_dim;
    const u64 h = s.heads;
    const u64 ln = 8 * T * D;
    m.layers.push_back({"mhsa.in_proj", "linear", 2 * T * F * D + T * D, F * D + D});
    m.layers.push_back({"mhsa.qkvo", "linear", 4 * (2 * T * D * D + T * D), 4 * (D * D + D)});
    m.layers.push_back({"mhsa.attention", "attention", 2 * T * T * D + T * T * h + 4 * T * T * h + 2 * T * T * D, 0});
    m.layers.push_back({"mhsa.norm1", "layer_norm", T * D + ln, 2 * D});
    if (H > 0) {
      m.layers.push_back({"mhsa.ffn", "linear", 2 * T * D * H + 2 * T * H + 2 * T * H * D + T * D,
                          D * H + H + H * D + D});
      m.layers.push_back({"mhsa.norm2", "layer_norm", T * D + ln, 2 * D});
    }
    m.layers.push_back({"mhsa.out_proj", "linear", 2 * T * D * F + T * F + T * F, D * F + F});
  }
  return m;
}

CostModel shtnet_cost(double input_seconds, const PipelineConfig& cfg) {
  cfg.stft.validate();
  cfg.ssafn.validate();
  if (cfg.ssafn.channels != static_cast<std::size_t>(sh_channel_count(cfg.order)) ||
      cfg.ssafn.bins != cfg.stft.bins()) {
    throw Error(Errc::config, "SSAFN channels/bins do not match the SHT order and STFT size");
  }
  const std::size_t L = samples_for(input_seconds, cfg.stft);
  return shtnet_cost_frames(L, cfg.stft.frames(L), cfg);
}

std::uint64_t ssafn_params(const ssafn::Config& cfg) noexcept {
  const Dims d{cfg.channels, 0, cfg.bins, cfg.reduced_channels(), 0, 0};
  u64 n = 0;
  if (cfg.joint_attention) {
    for (std::size_t k : cfg.cbam_kernels) n += cbam_cost("", d, k).params;
    n += 2 * coord_cost("", d).params;
  }
  if (cfg.rsacc) n += 2 * (d.F * cfg.embed_dim + cfg.embed_dim) + d.F + 1;
  if (cfg.mhsa) {
    const u64 D = cfg.attn_dim;
    const u64 H = cfg.ffn_dim;
    n += d.F * D + D + 4 * (D * D + D) + 2 * D + D * d.F + d.F;
    if (H > 0) n += D * H + H + H * D + D + 2 * D;
  }
  return n;
}

std::uint64_t blstm_params(const BlstmConfig& cfg) noexcept {
  const u64 h = cfg.hidden;
  const u64 p = cfg.projection;
  const u64 F = cfg.stft.bins();
  u64 n = 0;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const u64 in = l == 0 ? F : p;
    n += 2 * 4 * (h * in + h * h + 2 * h);  // two directions, PyTorch double bias
    n += 2 * h * p + p;
  }
  n += cfg.masks * (p * F + F);
  return n;
}

CostModel blstm_cost_frames(std::size_t frames, const BlstmConfig& cfg) {
  CostModel m{"blstm", {}};
  const u64 T = frames;
  const u64 I = cfg.mics;
  const u64 F = cfg.stft.bins();
  const u64 h = cfg.hidden;
  const u64 p = cfg.projection;
  const u64 M = cfg.masks;
  const u64 steps = I * T;  // the estimator runs once per microphone channel

  m.layers.push_back({"stft", "fft", stft_flops(I, T, cfg.stft), 0});
  m.layers.push_back({"magnitude", "elementwise", 4 * I * T * F, 0});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const u64 in = l == 0 ? F : p;
    const std::string name = "blstm" + std::to_string(l + 1);
    const u64 cell = 8 * h * (in + h) + 2 * 4 * h + cfg.gate_ops_per_unit * h;
    m.layers.push_back({name, "lstm", 2 * cell * steps, 2 * 4 * (h * in + h * h + 2 * h)});
    m.layers.push_back({name + ".proj", "linear", (2 * 2 * h * p + p) * steps, 2 * h * p + p});
  }
  m.layers.push_back({"masks", "linear", M * (2 * p * F + 2 * F) * steps, M * (p * F + F)});
  if (T > 0) {
    // Mask-weighted spatial covariances (complex MAC = 8 FLOPs), per-bin
    // MVDR solve, and beamforming.
    m.layers.push_back({"mvdr.covariance", "complex", M * F * T * (8 * I * I + 2 * I), 0});
    m.layers.push_back({"mvdr.solve", "complex", F * (8 * I * I * I + 8 * I * I), 0});
    m.layers.push_back({"mvdr.apply", "complex", 8 * F * T * I, 0});
  }
  return m;
}

CostModel blstm_cost(double input_seconds, const BlstmConfig& cfg) {
  cfg.stft.validate();
  const std::size_t L = samples_for(input_seconds, cfg.stft);
  return blstm_cost_frames(cfg.stft.frames(L), cfg);
}

double flops_shtnet(double input_seconds, const PipelineConfig& cfg) {
  return static_cast<double>(shtnet_cost(input_seconds, cfg).total_flops());
}

double flops_blstm_baseline(double input_seconds, const BlstmConfig& cfg) {
  return static_cast<double>(blstm_cost(input_seconds, cfg).total_flops());
}

double reduction_percent(double input_seconds, const PipelineConfig& sht, const BlstmConfig& blstm) {
  const double b = flops_blstm_baseline(input_seconds, blstm);
  if (!(b > 0.0)) throw Error(Errc::config, "baseline cost is zero at this duration");
  return 100.0 * (1.0 - flops_shtnet(input_seconds, sht) / b);
}

std::vector<CurveRow> emit_cost_curve(std::span<const double> seconds, std::span<const std::string> models,
                                      const PipelineConfig& sht, const BlstmConfig& blstm) {
  std::vector<CurveRow> rows;
  for (const auto& model : models) {
    if (model != "shtnet" && model != "blstm") throw Error(Errc::config, "unknown model '" + model + "'");
    for (double s : seconds) {
      const double f = model == "shtnet" ? flops_shtnet(s, sht) : flops_blstm_baseline(s, blstm);
      rows.push_back({model, s, f / 1e9});
    }
  }
  return rows;
}

std::string to_csv(std::span<const CurveRow> rows) {
  std::ostringstream out;
  out << "model,seconds,gflops\n";
  out.precision(10);
  for (const auto& r : rows) out << r.model << ',' << r.seconds << ',' << r.gflops << '\n';
  return out.str();
}

nlohmann::json to_json(std::span<const CurveRow> rows) {
  nlohmann::json j;
  j["convention"] = kConvention;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back({{"model", r.model}, {"seconds", r.seconds}, {"gflops", r.gflops}});
  return j;
}

nlohmann::json to_json(const CostModel& model) {
  nlohmann::json j;
  j["model"] = model.model;
  j["convention"] = kConvention;
  j["total_flops"] = model.total_flops();
  j["total_params"] = model.total_params();
  j["layers"] = nlohmann::json::array();
  for (const auto& l : model.layers) {
    j["layers"].push_back({{"name", l.name}, {"type", l.type}, {"flops", l.flops}, {"params", l.params}});
  }
  return j;
}

}  // namespace shtnet::profile
