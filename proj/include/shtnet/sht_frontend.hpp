#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "shtnet/geometry.hpp"
#include "shtnet/harmonics.hpp"
#include "shtnet/signal.hpp"
#include "shtnet/stft.hpp"

namespace shtnet {

/// Time-domain SHT: out(c, t) = sum_i mix(c, i) wav(i, t) with the plan's
/// real packing. Output has C = (N+1)^2 channels regardless of I.
MultichannelSignal sht_transform(const MultichannelSignal& wavs, const ShtPlan& plan);

/// SHT -> per-channel STFT -> magnitude. Shape C x T x F.
MagnitudeTensor frontend(const MultichannelSignal& wavs, const ShtPlan& plan, const StftConfig& cfg);
MagnitudeTensor frontend(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                         const StftConfig& cfg);

struct RandShtPolicy {
  std::size_t min_channels = 2;
  std::optional<std::size_t> max_channels;  ///< defaults to I
  std::uint64_t seed = 0;

  /// Throws Errc::cannot_subset for I < 2 and Errc::config for bounds
  /// outside 2 <= min <= max <= I.
  void validate(std::size_t mics) const;
};

/// Stateful Rand-SHT draw sequence. Draws I' uniformly in [min, max], then a
/// uniform I'-subset without replacement, returned sorted ascending.
class RandShtSampler {
 public:
  explicit RandShtSampler(RandShtPolicy policy);

  std::vector<std::size_t> draw(std::size_t mics);

 private:
  RandShtPolicy policy_;
  std::mt19937_64 rng_;
};

struct RandShtSelection {
  std::vector<std::size_t> indices;
  MultichannelSignal wavs;
  ArrayGeometry geometry;
  ShtPlan plan;
};

RandShtSelection rand_sht_select(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                                 RandShtSampler& sampler);
/// One draw from a freshly seeded sampler: repeated calls with the same
/// policy give the same subset.
RandShtSelection rand_sht_select(const MultichannelSignal& wavs, const ArrayGeometry& geometry, int order,
                                 const RandShtPolicy& policy);

/// Subset of channels in the given order.
MultichannelSignal select_channels(const MultichannelSignal& wavs, const std::vector<std::size_t>& indices);

struct ChunkConfig {
  double chunk_ms = 400.0;
  double left_ms = 800.0;
  double right_ms = 400.0;
  double jitter_min_ms = 350.0;
  double jitter_max_ms = 450.0;
  double right_context_prob = 0.5;

  void validate() const;
};

enum class ChunkMode { train, test };

/// Half-open index ranges [left_begin, chunk_begin) [chunk_begin, chunk_end)
/// [chunk_end, right_end).
struct ChunkSegment {
  std::size_t left_begin = 0;
  std::size_t chunk_begin = 0;
  std::size_t chunk_end = 0;
  std::size_t right_end = 0;

  std::size_t left_size() const noexcept { return chunk_begin - left_begin; }
  std::size_t chunk_size() const noexcept { return chunk_end - chunk_begin; }
  std::size_t right_size() const noexcept { return right_end - chunk_end; }

  friend bool operator==(const ChunkSegment&, const ChunkSegment&) = default;
};

/// Tiles [0, length) into chunks with context. `rate_hz` converts
/// milliseconds to indices (sample rate for waveforms, 1/hop for frames).
/// Test mode: fixed chunk length, no right context. Train mode: per-chunk
/// length jittered in [jitter_min, jitter_max], right context kept with
/// probability right_context_prob. Contexts are truncated at the stream
/// edges; the last chunk may be short.
std::vector<ChunkSegment> split_chunks(std::size_t length, double rate_hz, const ChunkConfig& cfg,
                                       ChunkMode mode, std::uint64_t seed = 0);

}  // namespace shtnet
