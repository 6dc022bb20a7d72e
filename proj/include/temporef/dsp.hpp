#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "temporef/frame_matrix.hpp"

namespace temporef {

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct MelParams {
  int sample_rate = 16000;
  int window_length = 1024;
  int hop_length = 160;
  int num_bands = 96;
  double fmin = 30.0;
  double fmax = 8000.0;
  double log_offset = 1e-6;

  double frame_rate() const { return static_cast<double>(sample_rate) / hop_length; }
  // Throws InvalidArgument when an invariant is violated.
  void validate() const;

  friend bool operator==(const MelParams&, const MelParams&) = default;
};

struct MelSpectrogram {
  FrameMatrix data;  // log-magnitude, [frames x num_bands]
  double frame_rate = 0.0;
  MelParams params;

  std::size_t frames() const { return data.frames(); }
  std::size_t bands() const { return data.bands(); }
};

// --- WAV ---------------------------------------------------------------------

// PCM 16-bit or IEEE float 32-bit, any channel count; channels are averaged.
AudioClip load_wav(const std::filesystem::path& path);

enum class WavEncoding { Pcm16, Float32 };
void save_wav(const AudioClip& clip, const std::filesystem::path& path,
              WavEncoding encoding = WavEncoding::Pcm16, int channels = 1);

// --- Mel spectrogram ---------------------------------------------------------

std::size_t frame_count(std::size_t num_samples, int window_length, int hop_length);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular, area-normalized filters over the rfft bins of `window_length`.
// Row b holds band b's weights; band edges are num_bands + 2 points equally
// spaced on the mel scale between fmin and fmax.
struct MelFilterbank {
  std::vector<double> edges_hz;      // num_bands + 2
  std::vector<std::vector<float>> weights;  // [num_bands][num_bins]
};
MelFilterbank make_mel_filterbank(const MelParams& params);

MelSpectrogram compute_mel_spectrogram(const AudioClip& clip, const MelParams& params = {});

// --- Tone synthesis ----------------------------------------------------------

inline constexpr double kMiddleC = 261.626;
inline constexpr double kToneDecaySeconds = 0.15;
inline constexpr float kTonePeak = 0.8f;

// Onset sample index of beat k: round((phase + k * 60 / tempo) * sample_rate).
std::size_t onset_sample(double tempo, double phase_seconds, std::size_t k, int sample_rate);

// Quarter-note decaying sine tones. Each note starts at its onset with peak
// amplitude kTonePeak, decays with time constant kToneDecaySeconds and is cut
// at the next onset. `phase_seconds` delays the first onset.
AudioClip synthesize_tone_track(double tempo, double duration, double pitch = kMiddleC,
                                int sample_rate = 16000, double phase_seconds = 0.0);

// --- Spectrogram cache ("MELS") ---------------------------------------------

void save_spectrogram(const MelSpectrogram& spec, const std::filesystem::path& path);
// Mel parameters are not stored; the returned params are defaults with the
// band count taken from the file.
MelSpectrogram load_spectrogram(const std::filesystem::path& path);

}  // namespace temporef
