#pragma once

#include <cstddef>
#include <cstdint>

#include "temporef/dsp.hpp"
#include "temporef/frame_matrix.hpp"
#include "temporef/rng.hpp"

namespace temporef {

inline constexpr double kExcerptSeconds = 3.0;

// Tempo multiplier: stretching by f turns tempo T into f * T, i.e. the time
// axis is compressed by f.
struct StretchFactor {
  double value = 1.0;
};

struct FactorRange {
  double lo = 0.75;
  double hi = 1.5;
};

struct Excerpt {
  FrameMatrix data;  // [L x bands]
  double frame_rate = 0.0;
};

// L = round(3 s * frame_rate); 300 at 100 fps.
std::size_t excerpt_length(double frame_rate);

struct PairSamplerConfig {
  double p_same = 0.5;
  FactorRange factor_range{};
  double min_factor_ratio_for_different = 1.04;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct TrainingPair {
  Excerpt a;
  Excerpt b;
  int label = 0;  // 1 = same tempo
  double factor_a = 1.0;
  double factor_b = 1.0;
  std::size_t offset_a = 0;
  std::size_t offset_b = 0;
};

// Resamples the time axis: output has round(N / f) frames and frame j is the
// natural cubic spline through the input frames (fit per band) evaluated at
// j * f. Positions past the last input frame hold the last frame.
FrameMatrix time_stretch(const FrameMatrix& input, StretchFactor f);
MelSpectrogram time_stretch(const MelSpectrogram& spec, StretchFactor f);
Excerpt time_stretch(const Excerpt& excerpt, StretchFactor f);

// Same interpolant as time_stretch, but only the first `out_frames` frames.
FrameMatrix time_stretch_prefix(const FrameMatrix& input, StretchFactor f, std::size_t out_frames);

// ln(value) uniform on [ln lo, ln hi].
StretchFactor sample_stretch_factor(Rng& rng, FactorRange range);

// Frames per source window: ceil(3 s * range.hi * frame_rate), 450 at defaults.
std::size_t source_window_frames(const PairSamplerConfig& cfg, double frame_rate);

// Draw order: offset a, offset b, label, factor(s). Requires the track to hold
// two disjoint source windows; the drawn windows may still overlap.
TrainingPair sample_pair(const MelSpectrogram& track, const PairSamplerConfig& cfg, Rng& rng);

Excerpt crop_excerpt(const MelSpectrogram& spec, std::size_t start_frame);
Excerpt crop_excerpt(const FrameMatrix& data, double frame_rate, std::size_t start_frame);

}  // namespace temporef
