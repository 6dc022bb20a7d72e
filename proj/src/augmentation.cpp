#include "temporef/augmentation.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "temporef/error.hpp"
#include "temporef/simd/kernels.hpp"

namespace temporef {

namespace {

constexpr std::size_t kMinSplineFrames = 4;

void check_factor(double f) {
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw Error(ErrorKind::InvalidArgument, "stretch factor must be positive, got " + std::to_string(f));
  }
}

// Second derivatives of the natural cubic spline through the rows of `y`,
// with unit knot spacing. All bands are solved together: the tridiagonal
// system [1 4 1] is the same for every band, so each Thomas sweep step is a
// row-vector operation.
FrameMatrix spline_second_derivatives(const FrameMatrix& y) {
  const std::size_t n = y.frames();
  const std::size_t bands = y.bands();
  const auto& k = simd::active();
  FrameMatrix m(n, bands, 0.0f);
  std::vector<float> cprime(n, 0.0f);

  // Forward sweep over interior knots 1..n-2. M_0 = M_{n-1} = 0, so row 0 of
  // `m` already serves as d'_0 = 0.
  float prev_c = 0.0f;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const float c = 1.0f / (4.0f - prev_c);
    cprime[i] = c;
    k.combine4_f32(6.0f * c, y.row(i + 1).data(), -12.0f * c, y.row(i).data(), 6.0f * c,
                   y.row(i - 1).data(), -c, m.row(i - 1).data(), m.row(i).data(), bands);
    prev_c = c;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    k.axpy_f32(-cprime[i], m.row(i + 1).data(), m.row(i).data(), bands);
  }
  return m;
}

}  // namespace

std::size_t excerpt_length(double frame_rate) {
  return static_cast<std::size_t>(std::llround(kExcerptSeconds * frame_rate));
}

void PairSamplerConfig::validate() const {
  if (!(p_same > 0.0 && p_same <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "p_same must lie in (0, 1]");
  }
  if (!(factor_range.lo > 0.0 && factor_range.lo <= factor_range.hi)) {
    throw Error(ErrorKind::InvalidArgument, "factor range must satisfy 0 < lo <= hi");
  }
  if (!(min_factor_ratio_for_different > 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "min_factor_ratio_for_different must exceed 1");
  }
  if (p_same < 1.0 && min_factor_ratio_for_different > factor_range.hi / factor_range.lo) {
    throw Error(ErrorKind::InvalidArgument, "factor range too narrow for min_factor_ratio_for_different");
  }
}

FrameMatrix time_stretch_prefix(const FrameMatrix& input, StretchFactor f, std::size_t out_frames) {
  check_factor(f.value);
  const std::size_t n = input.frames();
  if (n < kMinSplineFrames) {
    throw Error(ErrorKind::TooShort, "time_stretch needs at least 4 frames, got " + std::to_string(n));
  }
  const std::size_t bands = input.bands();
  FrameMatrix out(out_frames, bands);
  if (f.value == 1.0) {
    for (std::size_t j = 0; j < out_frames; ++j) {
      const auto src = input.row(std::min(j, n - 1));
      std::copy(src.begin(), src.end(), out.row(j).begin());
    }
    return out;
  }

  const FrameMatrix m = spline_second_derivatives(input);
  const auto& k = simd::active();
  for (std::size_t j = 0; j < out_frames; ++j) {
    const double x = static_cast<double>(j) * f.value;
    const auto i = static_cast<std::size_t>(std::floor(x));
    if (i >= n - 1) {
      const auto src = input.row(n - 1);
      std::copy(src.begin(), src.end(), out.row(j).begin());
      continue;
    }
    const double t = x - static_cast<double>(i);
    if (t == 0.0) {
      const auto src = input.row(i);
      std::copy(src.begin(), src.end(), out.row(j).begin());
      continue;
    }
    const double s = 1.0 - t;
    k.combine4_f32(static_cast<float>(s), input.row(i).data(), static_cast<float>(t), input.row(i + 1).data(),
                   static_cast<float>((s * s * s - s) / 6.0), m.row(i).data(),
                   static_cast<float>((t * t * t - t) / 6.0), m.row(i + 1).data(), out.row(j).data(), bands);
  }
  return out;
}

FrameMatrix time_stretch(const FrameMatrix& input, StretchFactor f) {
  check_factor(f.value);
  const auto frames = static_cast<std::size_t>(std::llround(static_cast<double>(input.frames()) / f.value));
  return time_stretch_prefix(input, f, frames);
}

MelSpectrogram time_stretch(const MelSpectrogram& spec, StretchFactor f) {
  MelSpectrogram out;
  out.data = time_stretch(spec.data, f);
  out.frame_rate = spec.frame_rate;
  out.params = spec.params;
  return out;
}

Excerpt time_stretch(const Excerpt& excerpt, StretchFactor f) {
  return Excerpt{time_stretch(excerpt.data, f), excerpt.frame_rate};
}

StretchFactor sample_stretch_factor(Rng& rng, FactorRange range) {
  if (!(range.lo > 0.0 && range.lo <= range.hi) || !std::isfinite(range.hi)) {
    throw Error(ErrorKind::InvalidArgument, "invalid stretch factor range");
  }
  if (range.lo == range.hi) return {range.lo};
  const double v = std::exp(rng.uniform(std::log(range.lo), std::log(range.hi)));
  return {std::clamp(v, range.lo, range.hi)};
}

std::size_t source_window_frames(const PairSamplerConfig& cfg, double frame_rate) {
  // Rounded to 1e-9 before ceil so 3 * 1.5 * 100 lands on 450, not 451.
  const double exact = kExcerptSeconds * cfg.factor_range.hi * frame_rate;
  return static_cast<std::size_t>(std::ceil(std::round(exact * 1e9) / 1e9));
}

TrainingPair sample_pair(const MelSpectrogram& track, const PairSamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t window = source_window_frames(cfg, track.frame_rate);
  const std::size_t length = excerpt_length(track.frame_rate);
  if (track.frames() < 2 * window) {
    throw Error(ErrorKind::TooShort, "track too short for pair sampling: " + std::to_string(track.frames()) +
                                         " frames, need " + std::to_string(2 * window));
  }

  TrainingPair pair;
  const std::size_t positions = track.frames() - window + 1;
  pair.offset_a = rng.below(positions);
  do {
    pair.offset_b = rng.below(positions);
  } while (pair.offset_b == pair.offset_a);

  if (rng.bernoulli(cfg.p_same)) {
    pair.label = 1;
    pair.factor_a = pair.factor_b = sample_stretch_factor(rng, cfg.factor_range).value;
  } else {
    pair.label = 0;
    do {
      pair.factor_a = sample_stretch_factor(rng, cfg.factor_range).value;
      pair.factor_b = sample_stretch_factor(rng, cfg.factor_range).value;
    } while (std::max(pair.factor_a, pair.factor_b) / std::min(pair.factor_a, pair.factor_b) <
             cfg.min_factor_ratio_for_different);
  }

  auto make = [&](std::size_t offset, double factor) {
    const FrameMatrix source = track.data.slice(offset, window);
    return Excerpt{time_stretch_prefix(source, {factor}, length), track.frame_rate};
  };
  pair.a = make(pair.offset_a, pair.factor_a);
  pair.b = make(pair.offset_b, pair.factor_b);
  return pair;
}

Excerpt crop_excerpt(const FrameMatrix& data, double frame_rate, std::size_t start_frame) {
  const std::size_t length = excerpt_length(frame_rate);
  if (start_frame > data.frames() || data.frames() - start_frame < length) {
    throw Error(ErrorKind::InvalidArgument, "excerpt [" + std::to_string(start_frame) + ", " +
                                                std::to_string(start_frame + length) + ") out of range for " +
                                                std::to_string(data.frames()) + " frames");
  }
  return Excerpt{data.slice(start_frame, length), frame_rate};
}

Excerpt crop_excerpt(const MelSpectrogram& spec, std::size_t start_frame) {
  return crop_excerpt(spec.data, spec.frame_rate, start_frame);
}

}  // namespace temporef
