#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "temporef/embedding.hpp"
#include "temporef/prediction.hpp"

namespace temporef {

inline constexpr double kTempoTolerance = 0.04;

// |pred - truth| <= 0.04 * truth. Not symmetric: the window scales with truth.
bool acc1_correct(double pred, double truth);
// acc1_correct against truth scaled by 1, 1/2, 2, 1/3 or 3.
bool acc2_correct(double pred, double truth);

struct AnnotatedTrack {
  std::string track_id;
  std::filesystem::path source;  // audio file (or empty when resolved by id)
  double truth_bpm = 0.0;
};

enum class AnnotationFormat { Tsv, BpmFiles };
AnnotationFormat parse_annotation_format(std::string_view name);

// Tsv: lines "track_id<TAB>bpm"; blank lines and '#' comments are skipped;
// each track's source is <audio_dir>/<track_id>.wav, audio_dir defaulting to
// the annotation file's directory.
// BpmFiles: every <stem>.bpm in the directory holds one decimal BPM for
// <stem>.wav next to it.
std::vector<AnnotatedTrack> load_annotations(const std::filesystem::path& path, AnnotationFormat format,
                                             const std::filesystem::path& audio_dir = {});

struct EvalRow {
  std::string track_id;
  double truth_bpm = 0.0;
  double predicted_bpm = 0.0;
  bool correct1 = false;
  bool correct2 = false;
  Method method = Method::Argmax;
};

struct UnresolvedTrack {
  std::string track_id;
  std::string reason;
};

struct EvalReport {
  std::string dataset;
  Method method = Method::Argmax;
  std::size_t n_tracks = 0;  // scored tracks
  double acc1 = 0.0;
  double acc2 = 0.0;
  std::vector<EvalRow> rows;
  std::vector<UnresolvedTrack> unresolved;
};

using TrackResolver = std::function<TrackEmbedding(const AnnotatedTrack&)>;
using TempoPredictor = std::function<TempoEstimate(const TrackEmbedding&)>;

// Resolves and predicts every track (on up to `threads` workers), then
// reduces in input order. Tracks whose resolution throws are listed as
// unresolved and left out of the fractions.
EvalReport evaluate(std::span<const AnnotatedTrack> dataset, Method method, const TrackResolver& resolve,
                    const TempoPredictor& predict, const std::string& dataset_name = "dataset",
                    unsigned threads = 1);

// Fills n_tracks, acc1 and acc2 from rows.
void summarize(EvalReport& report);

// "track_id,truth_bpm,predicted_bpm,acc1,acc2"
void emit_scatter(const EvalReport& report, const std::filesystem::path& path);
std::vector<EvalRow> read_scatter(const std::filesystem::path& path);

std::string format_report_table(const EvalReport& report);
// key=value lines: dataset, method, n_tracks, n_unresolved, acc1, acc2.
void write_report_summary(const EvalReport& report, const std::filesystem::path& path);

}  // namespace temporef
