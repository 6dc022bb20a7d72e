#include <cmath>
#include <numbers>

#include "temporef/dsp.hpp"
#include "temporef/error.hpp"

namespace temporef {

std::size_t onset_sample(double tempo, double phase_seconds, std::size_t k, int sample_rate) {
  const double t = phase_seconds + static_cast<double>(k) * 60.0 / tempo;
  return static_cast<std::size_t>(std::llround(t * sample_rate));
}

AudioClip synthesize_tone_track(double tempo, double duration, double pitch, int sample_rate,
                                double phase_seconds) {
  if (!(tempo > 0.0) || !(duration > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tempo and duration must be positive");
  }
  if (tempo < 1.0 || tempo > 1000.0) throw Error(ErrorKind::InvalidArgument, "tempo must lie in [1, 1000] BPM");
  if (duration < 3.0) throw Error(ErrorKind::InvalidArgument, "duration must be at least 3 s");
  if (sample_rate <= 0 || !(pitch > 0.0) || phase_seconds < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "invalid pitch, sample rate or phase");
  }

  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(duration * sample_rate));
  clip.samples.assign(total, 0.0f);

  const double omega = 2.0 * std::numbers::pi * pitch / sample_rate;
  const double decay = 1.0 / (kToneDecaySeconds * sample_rate);
  for (std::size_t k = 0;; ++k) {
    const std::size_t start = onset_sample(tempo, phase_seconds, k, sample_rate);
    if (start >= total) break;
    const std::size_t stop = std::min(total, onset_sample(tempo, phase_seconds, k + 1, sample_rate));
    for (std::size_t i = start; i < stop; ++i) {
      const double n = static_cast<double>(i - start);
      clip.samples[i] = static_cast<float>(kTonePeak * std::exp(-n * decay) * std::sin(omega * n));
    }
  }
  return clip;
}

}  // namespace temporef
