#include "temporef/synthetic_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "temporef/error.hpp"
#include "temporef/rng.hpp"

namespace temporef {

namespace {

enum class Voice { Tone, Noise, Kick };

struct Timbre {
  Voice voice = Voice::Tone;
  double pitch = 440.0;
  int harmonics = 1;
  double decay = 0.15;
};

Timbre random_timbre(Rng& rng, Voice voice) {
  Timbre t;
  t.voice = voice;
  t.pitch = std::exp(rng.uniform(std::log(110.0), std::log(1000.0)));
  t.harmonics = 1 + static_cast<int>(rng.below(3));
  t.decay = rng.uniform(0.05, 0.3);
  if (voice == Voice::Noise) t.decay = rng.uniform(0.02, 0.08);
  if (voice == Voice::Kick) t.decay = rng.uniform(0.08, 0.18);
  return t;
}

// Adds one note starting at `start`, cut at `stop`.
void render_note(std::vector<float>& out, std::size_t start, std::size_t stop, const Timbre& t, double gain,
                 int sample_rate, Rng& rng) {
  stop = std::min(stop, out.size());
  const double sr = sample_rate;
  double phase = 0.0;
  double prev_noise = 0.0;
  for (std::size_t i = start; i < stop; ++i) {
    const double time = static_cast<double>(i - start) / sr;
    const double env = gain * std::exp(-time / t.decay);
    if (env < 1e-4) break;
    double v = 0.0;
    switch (t.voice) {
      case Voice::Tone:
        for (int h = 1; h <= t.harmonics; ++h) {
          v += std::sin(2.0 * std::numbers::pi * t.pitch * h * time) / h;
        }
        break;
      case Voice::Noise: {
        // First difference of white noise: a crude high-pass.
        const double white = rng.uniform(-1.0, 1.0);
        v = 0.5 * (white - prev_noise);
        prev_noise = white;
        break;
      }
      case Voice::Kick: {
        const double freq = 50.0 + 70.0 * std::exp(-time / 0.03);
        phase += 2.0 * std::numbers::pi * freq / sr;
        v = std::sin(phase);
        break;
      }
    }
    out[i] += static_cast<float>(env * v);
  }
}

}  // namespace

SyntheticTrack generate_synthetic_track(const SyntheticCorpusConfig& cfg, int index) {
  if (!(cfg.bpm_min > 0.0 && cfg.bpm_min <= cfg.bpm_max) || cfg.duration < 3.0 || cfg.sample_rate <= 0) {
    throw Error(ErrorKind::InvalidArgument, "invalid synthetic corpus configuration");
  }
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  SyntheticTrack track;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%05d", index);
  track.id = id;
  track.tempo = rng.uniform(cfg.bpm_min, cfg.bpm_max);

  const auto total = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));
  std::vector<float> mix(total, 0.0f);
  const double beat = 60.0 / track.tempo;
  const double phase = rng.uniform(0.0, beat);
  auto at = [&](double t) { return static_cast<std::size_t>(std::llround(t * cfg.sample_rate)); };

  // Main pulse on every beat, first beat of each bar accented.
  const Timbre pulse = random_timbre(rng, rng.bernoulli(0.25) ? Voice::Kick : Voice::Tone);
  const double weak_gain = rng.uniform(0.6, 0.9);
  // Optional layers.
  const bool backbeat = rng.bernoulli(0.5);
  const Timbre backbeat_timbre = random_timbre(rng, rng.bernoulli(0.5) ? Voice::Noise : Voice::Tone);
  const bool offbeats = rng.bernoulli(0.4);
  const Timbre offbeat_timbre = random_timbre(rng, Voice::Noise);
  const double offbeat_gain = rng.uniform(0.1, 0.25);

  for (int k = 0;; ++k) {
    const double t = phase + k * beat;
    const std::size_t start = at(t);
    if (start >= total) break;
    const std::size_t next = at(t + beat);
    render_note(mix, start, next, pulse, k % 4 == 0 ? 1.0 : weak_gain, cfg.sample_rate, rng);
    if (backbeat && k % 2 == 1) render_note(mix, start, next, backbeat_timbre, 0.5, cfg.sample_rate, rng);
    if (offbeats) {
      const std::size_t off = at(t + beat / 2);
      if (off < total) render_note(mix, off, next, offbeat_timbre, offbeat_gain, cfg.sample_rate, rng);
    }
  }

  float peak = 0.0f;
  for (float v : mix) peak = std::max(peak, std::abs(v));
  if (peak > 0.0f) {
    const float scale = 0.8f / peak;
    for (float& v : mix) v *= scale;
  }
  track.clip.samples = std::move(mix);
  track.clip.sample_rate = cfg.sample_rate;
  return track;
}

}  // namespace temporef
