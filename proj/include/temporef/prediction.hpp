#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "temporef/embedding.hpp"
#include "temporef/reference_bank.hpp"
#include "temporef/sdnet.hpp"

namespace temporef {

struct TempoCurve {
  std::vector<int> bpm;
  std::vector<double> prob;

  std::size_t size() const { return bpm.size(); }
};

enum class Method { Argmax, Corrected, Knn };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct TempoEstimate {
  double bpm = 0.0;
  Method method = Method::Argmax;
  std::optional<TempoCurve> curve;
};

// Relative tolerance on each "ratio is 2" test in octave_correct.
inline constexpr double kOctaveRatioTolerance = 2 * 0.04;

// Per-tempo probability that `target` shares the reference's tempo. Variant
// logits are averaged before the sigmoid.
TempoCurve same_tempo_curve(const TrackEmbedding& target, const ReferenceBank& bank, const SdnetModel& model);

// Highest probability; ties go to the lowest BPM.
TempoEstimate argmax_tempo(const TempoCurve& curve);

struct CurvePeak {
  int bpm = 0;
  double prob = 0.0;
  std::size_t index = 0;
};

// Runs of equal values that are strictly above both neighbouring values
// (positions past either end count as -inf). A run is reported at its lowest
// BPM. Result is in BPM order.
std::vector<CurvePeak> find_peaks(const TempoCurve& curve);

// Takes the three most probable peaks; when, sorted by BPM, each is about
// twice the previous, returns the middle one. Otherwise falls back to argmax.
TempoEstimate octave_correct(const TempoCurve& curve);

// Cosine similarity; -1 when either vector is zero.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// 1-nearest-neighbour over every reference variant by cosine similarity.
TempoEstimate knn_tempo(const TrackEmbedding& target, const ReferenceBank& bank);

// Dispatches to one of the three methods. `model` may be null for Knn.
TempoEstimate predict_tempo(const TrackEmbedding& target, const ReferenceBank& bank, const SdnetModel* model,
                            Method method);

void write_curve_csv(const TempoCurve& curve, const std::filesystem::path& path);

}  // namespace temporef
