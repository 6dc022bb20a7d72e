#include <algorithm>
#include <cmath>
#include <numeric>

#include "temporef/embedding.hpp"
#include "temporef/error.hpp"
#include "temporef/simd/kernels.hpp"

namespace temporef {

std::vector<int> tempo_lag_grid(double frame_rate, int bpm_min, int bpm_max) {
  if (!(frame_rate > 0.0) || bpm_min < 1 || bpm_max < bpm_min) {
    throw Error(ErrorKind::InvalidArgument, "invalid tempo lag grid");
  }
  std::vector<int> lags;
  lags.reserve(static_cast<std::size_t>(bpm_max - bpm_min + 1));
  for (int bpm = bpm_min; bpm <= bpm_max; ++bpm) {
    lags.push_back(static_cast<int>(std::lround(60.0 * frame_rate / bpm)));
  }
  return lags;
}

std::vector<double> onset_envelope(const FrameMatrix& data) {
  if (data.frames() < 2) return {};
  const auto& k = simd::active();
  std::vector<double> env(data.frames() - 1);
  for (std::size_t t = 1; t < data.frames(); ++t) {
    env[t - 1] = k.rectified_diff_sum_f32(data.row(t - 1).data(), data.row(t).data(), data.bands());
  }
  return env;
}

std::vector<double> smooth_envelope(std::span<const double> env, double sigma) {
  if (!(sigma > 0.0)) return {env.begin(), env.end()};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  }
  const auto n = static_cast<std::ptrdiff_t>(env.size());
  std::vector<double> out(env.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0, weight = 0.0;
    for (std::ptrdiff_t k = std::max(-radius, -t); k <= std::min(radius, n - 1 - t); ++k) {
      const double w = kernel[static_cast<std::size_t>(k + radius)];
      acc += w * env[static_cast<std::size_t>(t + k)];
      weight += w;
    }
    out[static_cast<std::size_t>(t)] = acc / weight;
  }
  return out;
}

EmbeddingVector tempogram_embed(const Excerpt& excerpt, std::span<const int> lags, double sigma) {
  std::vector<double> env = smooth_envelope(onset_envelope(excerpt.data), sigma);
  const std::size_t n = env.size();
  if (lags.empty()) throw Error(ErrorKind::InvalidArgument, "empty lag range");
  for (int lag : lags) {
    if (lag < 1 || static_cast<std::size_t>(lag) >= n) {
      throw Error(ErrorKind::InvalidArgument,
                  "degenerate lag range: lag " + std::to_string(lag) + " outside [1, " + std::to_string(n) + ")");
    }
  }

  EmbeddingVector out(lags.size(), 0.0f);
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(n);
  for (double& v : env) v -= mean;
  const double energy = simd::dot(env.data(), env.data(), n);
  if (!(energy > 1e-12 * static_cast<double>(n))) return out;

  // r(k) / r(0) with the sum over the overlap: longer lags see fewer terms,
  // so a pulse outranks its own sub-harmonics.
  std::vector<double> feature(lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const auto lag = static_cast<std::size_t>(lags[i]);
    feature[i] = simd::dot(env.data(), env.data() + lag, n - lag) / energy;
  }
  const double fmean = std::accumulate(feature.begin(), feature.end(), 0.0) / static_cast<double>(feature.size());
  for (double& v : feature) v -= fmean;
  const double norm = std::sqrt(simd::dot(feature.data(), feature.data(), feature.size()));
  if (!(norm > 1e-12)) return out;
  for (std::size_t i = 0; i < feature.size(); ++i) out[i] = static_cast<float>(feature[i] / norm);
  return out;
}

TempogramProvider::TempogramProvider(TempogramConfig config)
    : config_(config), lags_(tempo_lag_grid(config.frame_rate, config.bpm_min, config.bpm_max)) {}

EmbeddingVector TempogramProvider::embed(const Excerpt& excerpt) const {
  if (std::abs(excerpt.frame_rate - config_.frame_rate) > 1e-3) {
    throw Error(ErrorKind::InvalidArgument, "excerpt frame rate " + std::to_string(excerpt.frame_rate) +
                                                " does not match provider frame rate " +
                                                std::to_string(config_.frame_rate));
  }
  return tempogram_embed(excerpt, lags_, config_.smoothing_frames);
}

std::size_t excerpt_hop(double frame_rate) {
  return static_cast<std::size_t>(std::llround(kExcerptSeconds / 2.0 * frame_rate));
}

std::vector<Excerpt> tile_excerpts(const MelSpectrogram& spec) {
  const std::size_t length = excerpt_length(spec.frame_rate);
  const std::size_t hop = excerpt_hop(spec.frame_rate);
  std::vector<Excerpt> out;
  for (std::size_t start = 0; start + length <= spec.frames(); start += hop) {
    out.push_back(crop_excerpt(spec, start));
  }
  return out;
}

TrackEmbedding mean_pool(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::InvalidArgument, "cannot pool an empty excerpt list");
  const std::size_t dim = vectors.front().size();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw Error(ErrorKind::DimensionMismatch, "excerpt embeddings differ in dimension");
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  TrackEmbedding track;
  track.num_excerpts = vectors.size();
  track.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    track.values[i] = static_cast<float>(acc[i] / static_cast<double>(vectors.size()));
  }
  return track;
}

TrackEmbedding embed_track(std::span<const Excerpt> excerpts, const EmbeddingProvider& provider) {
  if (excerpts.empty()) throw Error(ErrorKind::InvalidArgument, "embed_track: empty excerpt list");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(excerpts.size());
  for (const auto& e : excerpts) {
    vectors.push_back(provider.embed(e));
    if (vectors.back().size() != provider.dim()) {
      throw Error(ErrorKind::DimensionMismatch, "provider returned a vector of the wrong dimension");
    }
  }
  return mean_pool(vectors);
}

TrackEmbedding embed_track(const MelSpectrogram& spec, const EmbeddingProvider& provider) {
  const std::vector<Excerpt> excerpts = tile_excerpts(spec);
  if (excerpts.empty()) {
    throw Error(ErrorKind::TooShort, "track shorter than one 3 s excerpt (" + std::to_string(spec.frames()) +
                                         " frames)");
  }
  return embed_track(excerpts, provider);
}

}  // namespace temporef
