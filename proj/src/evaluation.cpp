#include "temporef/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "temporef/error.hpp"
#include "temporef/parallel.hpp"

namespace temporef {

bool acc1_correct(double pred, double truth) { return std::abs(pred - truth) <= kTempoTolerance * truth; }

bool acc2_correct(double pred, double truth) {
  static constexpr double kMultiples[] = {1.0, 0.5, 2.0, 1.0 / 3.0, 3.0};
  return std::any_of(std::begin(kMultiples), std::end(kMultiples),
                     [&](double m) { return acc1_correct(pred, m * truth); });
}

AnnotationFormat parse_annotation_format(std::string_view name) {
  if (name == "tsv") return AnnotationFormat::Tsv;
  if (name == "bpm-files") return AnnotationFormat::BpmFiles;
  throw Error(ErrorKind::InvalidArgument, "unknown annotation format '" + std::string(name) + "' (tsv|bpm-files)");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

double parse_bpm(std::string_view text, const std::string& where) {
  const auto v = parse_double(text);
  if (!v) throw Error(ErrorKind::Parse, where + ": malformed BPM '" + std::string(trim(text)) + "'");
  if (!(*v > 0.0) || !std::isfinite(*v)) {
    throw Error(ErrorKind::Parse, where + ": BPM must be positive, got " + std::string(trim(text)));
  }
  return *v;
}

}  // namespace

std::vector<AnnotatedTrack> load_annotations(const std::filesystem::path& path, AnnotationFormat format,
                                             const std::filesystem::path& audio_dir) {
  std::vector<AnnotatedTrack> tracks;
  if (format == AnnotationFormat::Tsv) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileNotFound, "cannot open annotations " + path.string());
    const std::filesystem::path dir = audio_dir.empty() ? path.parent_path() : audio_dir;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      const std::string_view body = trim(line);
      if (body.empty() || body.front() == '#') continue;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      const auto tab = body.find('\t');
      if (tab == std::string_view::npos) throw Error(ErrorKind::Parse, where + ": expected track_id<TAB>bpm");
      const std::string id(trim(body.substr(0, tab)));
      if (id.empty()) throw Error(ErrorKind::Parse, where + ": empty track id");
      const double bpm = parse_bpm(body.substr(tab + 1), where);
      tracks.push_back({id, dir / (id + ".wav"), bpm});
    }
    return tracks;
  }

  if (!std::filesystem::is_directory(path)) {
    throw Error(ErrorKind::FileNotFound, "annotation directory not found: " + path.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bpm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const std::filesystem::path dir = audio_dir.empty() ? path : audio_dir;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    const double bpm = parse_bpm(ss.str(), file.string());
    const std::string stem = file.stem().string();
    tracks.push_back({stem, dir / (stem + ".wav"), bpm});
  }
  return tracks;
}

void summarize(EvalReport& report) {
  report.n_tracks = report.rows.size();
  if (report.rows.empty()) {
    report.acc1 = report.acc2 = 0.0;
    return;
  }
  std::size_t c1 = 0, c2 = 0;
  for (const auto& r : report.rows) {
    c1 += r.correct1 ? 1 : 0;
    c2 += r.correct2 ? 1 : 0;
  }
  report.acc1 = static_cast<double>(c1) / static_cast<double>(report.rows.size());
  report.acc2 = static_cast<double>(c2) / static_cast<double>(report.rows.size());
}

EvalReport evaluate(std::span<const AnnotatedTrack> dataset, Method method, const TrackResolver& resolve,
                    const TempoPredictor& predict, const std::string& dataset_name, unsigned threads) {
  struct Outcome {
    std::optional<double> bpm;
    std::string error;
  };
  std::vector<Outcome> outcomes(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    try {
      const TrackEmbedding emb = resolve(dataset[i]);
      outcomes[i].bpm = predict(emb).bpm;
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  EvalReport report;
  report.dataset = dataset_name;
  report.method = method;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& track = dataset[i];
    if (!outcomes[i].bpm) {
      report.unresolved.push_back({track.track_id, outcomes[i].error});
      continue;
    }
    const double pred = *outcomes[i].bpm;
    report.rows.push_back({track.track_id, track.truth_bpm, pred, acc1_correct(pred, track.truth_bpm),
                           acc2_correct(pred, track.truth_bpm), method});
  }
  summarize(report);
  return report;
}

void emit_scatter(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "track_id,truth_bpm,predicted_bpm,acc1,acc2\n";
  char nums[96];
  for (const auto& r : report.rows) {
    std::snprintf(nums, sizeof nums, ",%.17g,%.17g,%d,%d\n", r.truth_bpm, r.predicted_bpm, r.correct1 ? 1 : 0,
                  r.correct2 ? 1 : 0);
    out << r.track_id << nums;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<EvalRow> read_scatter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "track_id,truth_bpm,predicted_bpm,acc1,acc2") {
    throw Error(ErrorKind::Parse, path.string() + ": unexpected scatter header");
  }
  std::vector<EvalRow> rows;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    // The id may itself contain commas; the four numeric fields are taken
    // from the right.
    for (int k = 0; k < 4; ++k) {
      const auto comma = rest.rfind(',');
      if (comma == std::string_view::npos) throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno));
      fields.insert(fields.begin(), rest.substr(comma + 1));
      rest = rest.substr(0, comma);
    }
    EvalRow row;
    row.track_id = std::string(rest);
    const auto truth = parse_double(fields[0]);
    const auto pred = parse_double(fields[1]);
    if (!truth || !pred) throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno));
    row.truth_bpm = *truth;
    row.predicted_bpm = *pred;
    row.correct1 = trim(fields[2]) == "1";
    row.correct2 = trim(fields[3]) == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_report_table(const EvalReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %-10s %8s %8s %8s %10s\n", "dataset", "method", "tracks", "acc1", "acc2",
                "unresolved");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %-10s %8zu %8.4f %8.4f %10zu\n", report.dataset.c_str(),
                std::string(to_string(report.method)).c_str(), report.n_tracks, report.acc1, report.acc2,
                report.unresolved.size());
  out += buf;
  for (const auto& u : report.unresolved) out += "  unresolved " + u.track_id + ": " + u.reason + "\n";
  return out;
}

void write_report_summary(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  char buf[128];
  out << "dataset=" << report.dataset << "\n";
  out << "method=" << to_string(report.method) << "\n";
  out << "n_tracks=" << report.n_tracks << "\n";
  out << "n_unresolved=" << report.unresolved.size() << "\n";
  std::snprintf(buf, sizeof buf, "acc1=%.6f\nacc2=%.6f\n", report.acc1, report.acc2);
  out << buf;
  for (const auto& u : report.unresolved) out << "unresolved=" << u.track_id << "\n";
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace temporef
