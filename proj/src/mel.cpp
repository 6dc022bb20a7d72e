#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "temporef/dsp.hpp"
#include "temporef/error.hpp"

namespace temporef {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per size and kept for the process lifetime.
fftw_plan r2c_plan(int n) {
  static std::mutex mutex;
  static std::map<int, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  double* in = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, plan);
  return plan;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

void MelParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "MelParams: " + what); };
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (window_length <= 0 || hop_length <= 0) fail("window and hop must be positive");
  if (hop_length > window_length) fail("hop_length must not exceed window_length");
  if (num_bands < 8) fail("num_bands must be >= 8");
  if (!(fmin >= 0.0 && fmin < fmax)) fail("require 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0) fail("fmax must not exceed sample_rate / 2");
  if (!(log_offset > 0.0)) fail("log_offset must be positive");
}

std::size_t frame_count(std::size_t num_samples, int window_length, int hop_length) {
  const auto window = static_cast<std::size_t>(window_length);
  if (num_samples < window) return 0;
  return 1 + (num_samples - window) / static_cast<std::size_t>(hop_length);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(const MelParams& params) {
  params.validate();
  const int num_bins = params.window_length / 2 + 1;
  const double mel_lo = hz_to_mel(params.fmin);
  const double mel_hi = hz_to_mel(params.fmax);

  MelFilterbank fb;
  fb.edges_hz.resize(static_cast<std::size_t>(params.num_bands) + 2);
  for (std::size_t i = 0; i < fb.edges_hz.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (params.num_bands + 1);
    fb.edges_hz[i] = mel_to_hz(mel);
  }

  fb.weights.assign(static_cast<std::size_t>(params.num_bands), std::vector<float>(num_bins, 0.0f));
  const double bin_hz = static_cast<double>(params.sample_rate) / params.window_length;
  for (int b = 0; b < params.num_bands; ++b) {
    const double lo = fb.edges_hz[b];
    const double mid = fb.edges_hz[b + 1];
    const double hi = fb.edges_hz[b + 2];
    const double area_norm = 2.0 / (hi - lo);
    for (int k = 0; k < num_bins; ++k) {
      const double f = k * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      fb.weights[b][k] = static_cast<float>(w * area_norm);
    }
  }
  return fb;
}

MelSpectrogram compute_mel_spectrogram(const AudioClip& clip, const MelParams& params) {
  params.validate();
  if (clip.sample_rate != params.sample_rate) {
    throw Error(ErrorKind::InvalidArgument,
                "sample rate " + std::to_string(clip.sample_rate) + " Hz does not match " +
                    std::to_string(params.sample_rate) + " Hz (resampling is not supported)");
  }
  const std::size_t frames = frame_count(clip.samples.size(), params.window_length, params.hop_length);
  if (frames == 0) {
    throw Error(ErrorKind::TooShort, "clip shorter than one analysis window (" +
                                         std::to_string(clip.samples.size()) + " < " +
                                         std::to_string(params.window_length) + " samples)");
  }

  const int n = params.window_length;
  const int num_bins = n / 2 + 1;
  const MelFilterbank fb = make_mel_filterbank(params);

  // Only the nonzero span of each filter is visited.
  std::vector<std::pair<int, int>> support(static_cast<std::size_t>(params.num_bands));
  for (int b = 0; b < params.num_bands; ++b) {
    const auto& w = fb.weights[b];
    int first = num_bins, last = -1;
    for (int k = 0; k < num_bins; ++k) {
      if (w[k] != 0.0f) {
        first = std::min(first, k);
        last = k;
      }
    }
    support[b] = {first, last};
  }

  std::vector<double> window(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);

  fftw_plan plan = r2c_plan(n);
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(static_cast<std::size_t>(n)));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(static_cast<std::size_t>(num_bins)));
  std::vector<double> magnitude(static_cast<std::size_t>(num_bins));

  MelSpectrogram spec;
  spec.params = params;
  spec.frame_rate = params.frame_rate();
  spec.data = FrameMatrix(frames, static_cast<std::size_t>(params.num_bands));

  for (std::size_t f = 0; f < frames; ++f) {
    const float* src = clip.samples.data() + f * static_cast<std::size_t>(params.hop_length);
    for (int i = 0; i < n; ++i) in.get()[i] = src[i] * window[i];
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (int k = 0; k < num_bins; ++k) magnitude[k] = std::hypot(out.get()[k][0], out.get()[k][1]);

    auto row = spec.data.row(f);
    for (int b = 0; b < params.num_bands; ++b) {
      double acc = 0.0;
      for (int k = support[b].first; k <= support[b].second; ++k) acc += fb.weights[b][k] * magnitude[k];
      row[b] = static_cast<float>(std::log(params.log_offset + acc));
    }
  }
  return spec;
}

}  // namespace temporef
