#pragma once

// Analytic cost accounting. Conventions: one multiply-accumulate = 2 FLOPs;
// a size-n FFT = 5 n log2(n) FLOPs; elementwise ops are counted per element
// as itemised in each layer.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "shtnet/ssafn.hpp"
#include "shtnet/stft.hpp"

namespace shtnet::profile {

inline constexpr const char* kConvention = "MAC=2 FLOPs; FFT(n)=5*n*log2(n); elementwise ops itemised per layer";

struct LayerCost {
  std::string name;
  std::string type;
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
};

struct CostModel {
  std::string model;
  std::vector<LayerCost> layers;

  std::uint64_t total_flops() const noexcept;
  std::uint64_t total_params() const noexcept;
};

struct PipelineConfig {
  std::size_t mics = 8;
  int order = 4;
  StftConfig stft;
  ssafn::Config ssafn;
};

/// CUSIDE-Array style mask estimator: stacked BLSTM with per-layer
/// projection, shared across microphones, followed by MVDR.
struct BlstmConfig {
  std::size_t mics = 8;
  std::size_t layers = 3;
  std::size_t hidden = 320;
  std::size_t projection = 320;
  std::size_t masks = 2;
  /// Gate nonlinearities and cell updates per hidden unit per step.
  std::size_t gate_ops_per_unit = 10;
  StftConfig stft;
};

std::size_t samples_for(double seconds, const StftConfig& stft) noexcept;

CostModel shtnet_cost(double input_seconds, const PipelineConfig& cfg = {});
CostModel shtnet_cost_frames(std::size_t samples, std::size_t frames, const PipelineConfig& cfg);
CostModel blstm_cost(double input_seconds, const BlstmConfig& cfg = {});
CostModel blstm_cost_frames(std::size_t frames, const BlstmConfig& cfg);

/// Parameter count of the SSAFN derived from closed-form layer formulas.
std::uint64_t ssafn_params(const ssafn::Config& cfg) noexcept;
std::uint64_t blstm_params(const BlstmConfig& cfg) noexcept;

double flops_shtnet(double input_seconds, const PipelineConfig& cfg = {});
double flops_blstm_baseline(double input_seconds, const BlstmConfig& cfg = {});
/// 100 (1 - shtnet / blstm) at the given duration.
double reduction_percent(double input_seconds, const PipelineConfig& sht = {}, const BlstmConfig& blstm = {});

struct CurveRow {
  std::string model;
  double seconds = 0.0;
  double gflops = 0.0;
};

/// models: any of "shtnet", "blstm". Throws Errc::config for unknown names.
std::vector<CurveRow> emit_cost_curve(std::span<const double> seconds, std::span<const std::string> models,
                                      const PipelineConfig& sht = {}, const BlstmConfig& blstm = {});
/// Header `model,seconds,gflops`.
std::string to_csv(std::span<const CurveRow> rows);
nlohmann::json to_json(std::span<const CurveRow> rows);
nlohmann::json to_json(const CostModel& model);

}  // namespace shtnet::profile
