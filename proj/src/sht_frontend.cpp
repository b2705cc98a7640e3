#include "shtnet/sht_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "shtnet/error.hpp"

namespace shtnet {

MultichannelSignal sht_transform(const MultichannelSignal& wavs, const ShtPlan& plan) {
  if (wavs.channels() != plan.mics()) {
    throw Error(Errc::shape, "signal has " + std::to_string(wavs.channels()) + " channels but the plan expects " +
                                 std::to_string(plan.mics()));
  }
  const std::size_t C = plan.channels();
  const std::size_t I = plan.mics();
  const std::size_t L = wavs.samples();
  const auto& mix = plan.real_mixing();
  MultichannelSignal out(C, L);
  for (std::size_t c = 0; c < C; ++c) {
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < I; ++i) {
      const double w = mix[c * I + i];
      if (w == 0.0) continue;
      const auto src = wavs.channel(i);
      for (std::size_t t = 0; t < L; ++t) dst[t] += w * src[t];
    }
  }
  return out;
}

MagnitudeTensor frontend(const MultichannelSignal& wavs, const ShtPlan& plan, const StftConfig& cfg) {
  cfg.validate();
  const MultichannelSignal sh = sht_transform(wavs, plan);
  StftEngine engine(cfg);
  const std::size_t C = sh.channels();
  const std::size_t T = cfg.frames(sh.samples());
  const std::size_t F = cfg.bins();
  if (T == 0) {
    throw Error(Errc::too_short, "signal of " + std::to_string(sh.samples()) + " samples is shorter than one frame");
  }
  Tensor out(std::vector<std::size_t>{C, T, F});
  for (std::size_t c = 0; c < C; ++c) {
    engine.magnitude(sh.channel(c), std::span<double>(out.data() + c * T * F, T * F));
  }
  return MagnitudeTensor(std::move(out));
}

MagnitudeTensor frontend(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                         const StftConfig& cfg) {
  return frontend(wavs, build_plan(geometry, order), cfg);
}

void RandShtPolicy::validate(std::size_t mics) const {
  if (mics < 2) throw Error(Errc::cannot_subset, "Rand-SHT needs at least two microphones");
  const std::size_t hi = max_channels.value_or(mics);
  if (min_channels < 2 || min_channels > hi || hi > mics) {
    throw Error(Errc::config, "Rand-SHT bounds must satisfy 2 <= min <= max <= I (min=" +
                                  std::to_string(min_channels) + ", max=" + std::to_string(hi) +
                                  ", I=" + std::to_string(mics) + ")");
  }
}

RandShtSampler::RandShtSampler(RandShtPolicy policy) : policy_(std::move(policy)), rng_(policy_.seed) {}

std::vector<std::size_t> RandShtSampler::draw(std::size_t mics) {
  policy_.validate(mics);
  std::uniform_int_distribution<std::size_t> count(policy_.min_channels, policy_.max_channels.value_or(mics));
  const std::size_t k = count(rng_);
  std::vector<std::size_t> idx(mics);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, mics - 1);
    std::swap(idx[i], idx[pick(rng_)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MultichannelSignal select_channels(const MultichannelSignal& wavs, const std::vector<std::size_t>& indices) {
  MultichannelSignal out(indices.size(), wavs.samples());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= wavs.channels()) throw Error(Errc::invalid_subset, "channel index out of range");
    std::ranges::copy(wavs.channel(indices[k]), out.channel(k).begin());
  }
  return out;
}

RandShtSelection rand_sht_select(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                                 RandShtSampler& sampler) {
  if (wavs.channels() != geometry.size()) throw Error(Errc::shape, "signal channels do not match geometry");
  std::vector<std::size_t> indices = sampler.draw(geometry.size());
  ArrayGeometry sub = subset_geometry(geometry, indices);
  ShtPlan plan = build_plan(sub, order);
  MultichannelSignal sub_wavs = select_channels(wavs, indices);
  return {std::move(indices), std::move(sub_wavs), std::move(sub), std::move(plan)};
}

RandShtSelection rand_sht_select(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                                 const RandShtPolicy& policy) {
  RandShtSampler sampler(policy);
  return rand_sht_select(wavs, geometry, order, sampler);
}

void ChunkConfig::validate() const {
  if (!(chunk_ms > 0.0) || !(left_ms > 0.0) || !(right_ms > 0.0)) {
    throw Error(Errc::config, "chunk and context durations must be positive");
  }
  if (!(jitter_min_ms > 0.0) || jitter_min_ms > chunk_ms || jitter_max_ms < chunk_ms) {
    throw Error(Errc::config, "jitter range must be positive and contain the chunk duration");
  }
  if (!(right_context_prob >= 0.0 && right_context_prob <= 1.0)) {
    throw Error(Errc::config, "right-context probability must lie in [0, 1]");
  }
}

std::vector<ChunkSegment> split_chunks(std::size_t length, double rate_hz, const ChunkConfig& cfg, ChunkMode mode,
                                       std::uint64_t seed) {
  cfg.validate();
  if (!(rate_hz > 0.0)) throw Error(Errc::config, "rate must be positive");
  auto to_index = [rate_hz](double ms) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ms * rate_hz / 1000.0)));
  };
  const std::size_t left = to_index(cfg.left_ms);
  const std::size_t right = to_index(cfg.right_ms);
  const std::size_t fixed = to_index(cfg.chunk_ms);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(cfg.jitter_min_ms, cfg.jitter_max_ms);
  std::bernoulli_distribution keep_right(cfg.right_context_prob);

  std::vector<ChunkSegment> out;
  std::size_t pos = 0;
  while (pos < length) {
    const std::size_t size = mode == ChunkMode::train ? to_index(jitter(rng)) : fixed;
    ChunkSegment s;
    s.chunk_begin = pos;
    s.chunk_end = std::min(length, pos + size);
    s.left_begin = pos - std::min(pos, left);
    s.right_end = s.chunk_end;
    if (mode == ChunkMode::train && keep_right(rng)) s.right_end = std::min(length, s.chunk_end + right);
    out.push_back(s);
    pos = s.chunk_end;
  }
  return out;
}

}  // namespace shtnet
