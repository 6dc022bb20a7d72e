#include "temporef/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "temporef/error.hpp"
#include "temporef/simd/kernels.hpp"

namespace temporef {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Argmax: return "argmax";
    case Method::Corrected: return "corrected";
    case Method::Knn: return "knn";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "argmax") return Method::Argmax;
  if (name == "corrected") return Method::Corrected;
  if (name == "knn") return Method::Knn;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "' (argmax|corrected|knn)");
}

TempoCurve same_tempo_curve(const TrackEmbedding& target, const ReferenceBank& bank, const SdnetModel& model) {
  bank.check_complete();
  if (target.values.size() != model.dim || bank.dim != model.dim) {
    throw Error(ErrorKind::DimensionMismatch, "target/bank/model dimensions disagree (" +
                                                  std::to_string(target.values.size()) + ", " +
                                                  std::to_string(bank.dim) + ", " + std::to_string(model.dim) + ")");
  }
  TempoCurve curve;
  curve.bpm.reserve(kBankTempoCount);
  curve.prob.reserve(kBankTempoCount);
  for (int tempo = kBankMinBpm; tempo <= kBankMaxBpm; ++tempo) {
    const auto& variants = bank.entries.at(tempo);
    double logit_sum = 0.0;
    for (const auto& ref : variants) {
      logit_sum += static_cast<double>(forward<float>(model, target.values, ref.values));
    }
    curve.bpm.push_back(tempo);
    curve.prob.push_back(sigmoid(logit_sum / static_cast<double>(variants.size())));
  }
  return curve;
}

TempoEstimate argmax_tempo(const TempoCurve& curve) {
  if (curve.bpm.empty() || curve.bpm.size() != curve.prob.size()) {
    throw Error(ErrorKind::InvalidArgument, "argmax_tempo: invalid curve");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve.prob[i] > curve.prob[best]) best = i;
  }
  return {static_cast<double>(curve.bpm[best]), Method::Argmax, curve};
}

std::vector<CurvePeak> find_peaks(const TempoCurve& curve) {
  std::vector<CurvePeak> peaks;
  const std::size_t n = curve.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && curve.prob[j + 1] == curve.prob[i]) ++j;
    const bool above_left = i == 0 || curve.prob[i - 1] < curve.prob[i];
    const bool above_right = j + 1 == n || curve.prob[j + 1] < curve.prob[i];
    if (above_left && above_right) peaks.push_back({curve.bpm[i], curve.prob[i], i});
    i = j + 1;
  }
  return peaks;
}

TempoEstimate octave_correct(const TempoCurve& curve) {
  TempoEstimate fallback = argmax_tempo(curve);
  fallback.method = Method::Corrected;

  std::vector<CurvePeak> peaks = find_peaks(curve);
  if (peaks.size() < 3) return fallback;
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const CurvePeak& a, const CurvePeak& b) { return a.prob > b.prob; });
  peaks.resize(3);
  std::sort(peaks.begin(), peaks.end(), [](const CurvePeak& a, const CurvePeak& b) { return a.bpm < b.bpm; });

  const double low = peaks[0].bpm, mid = peaks[1].bpm, high = peaks[2].bpm;
  const bool octave_family = std::abs(mid / low - 2.0) <= kOctaveRatioTolerance &&
                             std::abs(high / mid - 2.0) <= kOctaveRatioTolerance;
  if (!octave_family) return fallback;
  return {mid, Method::Corrected, curve};
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "cosine_similarity: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return -1.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

TempoEstimate knn_tempo(const TrackEmbedding& target, const ReferenceBank& bank) {
  bank.check_complete();
  if (target.values.size() != bank.dim) {
    throw Error(ErrorKind::DimensionMismatch, "target dimension " + std::to_string(target.values.size()) +
                                                  " does not match bank dimension " + std::to_string(bank.dim));
  }
  double best_sim = -2.0;
  int best_tempo = kBankMinBpm;
  for (const auto& [tempo, variants] : bank.entries) {
    for (const auto& ref : variants) {
      const double sim = cosine_similarity(target.values, ref.values);
      if (sim > best_sim) {
        best_sim = sim;
        best_tempo = tempo;
      }
    }
  }
  return {static_cast<double>(best_tempo), Method::Knn, std::nullopt};
}

TempoEstimate predict_tempo(const TrackEmbedding& target, const ReferenceBank& bank, const SdnetModel* model,
                            Method method) {
  if (method == Method::Knn) return knn_tempo(target, bank);
  if (model == nullptr) throw Error(ErrorKind::InvalidArgument, "method requires a trained model");
  const TempoCurve curve = same_tempo_curve(target, bank, *model);
  return method == Method::Argmax ? argmax_tempo(curve) : octave_correct(curve);
}

void write_curve_csv(const TempoCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "bpm,probability\n";
  char line[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(line, sizeof line, "%d,%.9g\n", curve.bpm[i], curve.prob[i]);
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace temporef
