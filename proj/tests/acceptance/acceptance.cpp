// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Optional arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "temporef/augmentation.hpp"
#include "temporef/cli.hpp"
#include "temporef/error.hpp"
#include "temporef/evaluation.hpp"
#include "temporef/prediction.hpp"
#include "temporef/reference_bank.hpp"
#include "temporef/sdnet.hpp"
#include "test_support.hpp"

using namespace temporef;
namespace fs = std::filesystem;
namespace ts = temporef::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected an error, none was raised");
}

// --- 1. metric oracle ---------------------------------------------------------

Verdict metric_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform(20.0, 400.0), t = rng.uniform(20.0, 400.0);
    mismatches += acc1_correct(p, t) != ts::oracle_acc1(p, t);
    mismatches += acc2_correct(p, t) != ts::oracle_acc2(p, t);
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 5.0, fmt("10000 pairs, %d mismatches, %.3f s (limit 5 s)", mismatches, secs)};
}

// --- 2. gradient check --------------------------------------------------------

Verdict gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  const auto inst = ts::make_gradcheck_instance(8, 16, 7);
  const auto r = ts::check_gradients(inst);
  const double secs = seconds_since(start);
  return {r.max_rel_error < 1e-4 && r.checked > 0 && secs < 10.0,
          fmt("D=8, 16 pairs, %zu parameters, max rel error %.2e (tensor %s), %.2f s (limit 10 s)", r.checked,
              r.max_rel_error, std::string(Network<double>::tensor_name(r.worst_tensor)).c_str(), secs)};
}

// --- 3. learning-rate schedule -------------------------------------------------

Verdict lr_schedule() {
  const TrainConfig cfg;  // 20000 steps, warmup 2000, lr 0.001
  const double at0 = lr_at(0, cfg), at_w = lr_at(2000, cfg), at_end = lr_at(20000, cfg);
  // The warmup line evaluated at the boundary against the cosine branch there.
  const double jump = std::fabs(cfg.lr_init * 2000.0 / 2000.0 - at_w);
  bool monotone = true;
  for (int s = 2001; s <= 20000; ++s) monotone &= lr_at(s, cfg) <= lr_at(s - 1, cfg);
  const bool pass = at0 == 0.0 && at_w == 0.001 && at_end == 0.0 && jump <= 1e-12 && monotone;
  return {pass, fmt("lr(0)=%g lr(2000)=%.17g lr(20000)=%g boundary gap %.1e, non-increasing after warmup: %s", at0,
                    at_w, at_end, jump, monotone ? "yes" : "no")};
}

// --- 4. sampler statistics ------------------------------------------------------

Verdict sampler_statistics() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(4);
  double sum = 0.0, lo = 10.0, hi = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double f = sample_stretch_factor(rng, {0.75, 1.5}).value;
    sum += std::log(f);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  const double mean = sum / n;

  MelSpectrogram track;
  track.frame_rate = 100.0;
  track.data = ts::smooth_matrix(1200, 8, 4);
  PairSamplerConfig cfg;
  Rng pair_rng(44);
  int same = 0;
  const int pairs = 10000;
  for (int i = 0; i < pairs; ++i) same += sample_pair(track, cfg, pair_rng).label;
  const double frac = static_cast<double>(same) / pairs;
  const double secs = seconds_since(start);
  const bool pass = std::fabs(mean - 0.0589) <= 0.01 && lo >= 0.75 && hi <= 1.5 && frac >= 0.48 && frac <= 0.52 &&
                    secs < 30.0;
  return {pass, fmt("mean ln f %.4f (target 0.0589 +- 0.01), range [%.4f, %.4f], same fraction %.4f, %.2f s", mean,
                    lo, hi, frac, secs)};
}

// --- 5. stretch properties --------------------------------------------------------

Verdict stretch_properties() {
  const auto m = ts::smooth_matrix(401, 12, 5);
  const bool identity = time_stretch(m, {1.0}) == m;
  bool counts = true;
  for (double f : {0.75, 1.0, 1.25, 1.5}) {
    counts &= time_stretch(m, {f}).frames() == static_cast<std::size_t>(std::lround(401.0 / f));
  }
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = ts::smooth_matrix(400, 12, seed);
    for (double f : {0.75, 0.9, 1.1, 1.25, 1.5}) {
      const auto back = time_stretch(time_stretch(s, {f}), {1.0 / f});
      const std::size_t frames = std::min(back.frames(), s.frames());
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t b = 0; b < s.bands(); ++b) {
          worst = std::max(worst, static_cast<double>(std::fabs(back(t, b) - s(t, b)) / std::fabs(s(t, b))));
        }
      }
    }
  }
  return {identity && counts && worst <= 0.05,
          fmt("identity bit-exact: %s, frame counts: %s, worst round-trip rel error %.4f (limit 0.05)",
              identity ? "yes" : "no", counts ? "yes" : "no", worst)};
}

// --- 6. octave correction -----------------------------------------------------------

TempoCurve bumps(std::initializer_list<std::pair<double, double>> peaks) {
  TempoCurve c;
  for (int b = kBankMinBpm; b <= kBankMaxBpm; ++b) {
    double p = 0.01;
    for (const auto& [center, height] : peaks) p += height * std::exp(-0.5 * std::pow((b - center) / 4.0, 2));
    c.bpm.push_back(b);
    c.prob.push_back(p);
  }
  return c;
}

Verdict octave_cases() {
  const double middle = octave_correct(bumps({{60, 0.5}, {120, 0.7}, {240, 0.9}})).bpm;
  const double fallback = octave_correct(bumps({{70, 0.5}, {100, 0.9}, {150, 0.6}})).bpm;
  const double single = octave_correct(bumps({{133, 0.8}})).bpm;
  return {middle == 120.0 && fallback == 100.0 && single == 133.0,
          fmt("60/120/240 -> %g (want 120), 70/100/150 -> %g (want 100), single 133 -> %g (want 133)", middle,
              fallback, single)};
}

// --- 7-10. end-to-end ---------------------------------------------------------------

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void cli_or_throw(std::vector<std::string> args) {
  const auto r = cli_run(args);
  if (r.code != 0) throw std::runtime_error(args[0] + " failed (" + std::to_string(r.code) + "): " + r.err);
}

double report_value(const fs::path& report, const std::string& key) {
  const auto text = ts::read_text(report);
  const auto at = text.find(key + "=");
  if (at == std::string::npos) throw std::runtime_error("no " + key + " in " + report.string());
  return std::stod(text.substr(at + key.size() + 1));
}

struct EndToEnd {
  ts::TempDir dir;
  fs::path train_audio = dir / "train_wav";
  fs::path test_audio = dir / "test_wav";
  double corpus_seconds = 0.0;
  std::vector<double> run_seconds;

  EndToEnd() {
    const auto start = std::chrono::steady_clock::now();
    cli_or_throw({"synth-corpus", "--out-dir", train_audio.string(), "--count", "300", "--min-bpm", "60",
                  "--max-bpm", "180", "--seed", "1"});
    cli_or_throw({"synth-corpus", "--out-dir", test_audio.string(), "--count", "100", "--min-bpm", "60",
                  "--max-bpm", "180", "--seed", "2"});
    corpus_seconds = seconds_since(start);
  }

  // Featurize, train (smoke profile), build the bank and evaluate.
  fs::path run(const std::string& name) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path root = dir / name;
    const std::vector<std::string> common{"--profile", "smoke", "--seed", "0", "--threads", "1"};
    auto with_common = [&](std::vector<std::string> args) {
      args.insert(args.end(), common.begin(), common.end());
      return args;
    };
    cli_or_throw(with_common({"featurize", "--audio-dir", train_audio.string(), "--cache-dir", (root / "cache").string()}));
    cli_or_throw(with_common({"train", "--cache-dir", (root / "cache").string(), "--model", (root / "model.sdn").string()}));
    cli_or_throw(with_common({"make-refs", "--bank", (root / "bank.emb").string()}));
    cli_or_throw(with_common({"evaluate", "--annotations", (test_audio / "annotations.tsv").string(), "--method",
                              "argmax", "--method", "corrected", "--method", "knn", "--model",
                              (root / "model.sdn").string(), "--bank", (root / "bank.emb").string(), "--out-dir",
                              (root / "out").string(), "--name", "synthetic"}));
    run_seconds.push_back(seconds_since(start));
    return root;
  }
};

EndToEnd& e2e() {
  static EndToEnd instance;
  return instance;
}

const fs::path& first_run() {
  static const fs::path root = e2e().run("run_a");
  return root;
}

Verdict synthetic_end_to_end() {
  const fs::path& root = first_run();
  const double total = e2e().corpus_seconds + e2e().run_seconds.front();
  const double arg1 = report_value(root / "out" / "report_argmax.txt", "acc1");
  const double arg2 = report_value(root / "out" / "report_argmax.txt", "acc2");
  const double cor1 = report_value(root / "out" / "report_corrected.txt", "acc1");
  const double cor2 = report_value(root / "out" / "report_corrected.txt", "acc2");
  const double knn1 = report_value(root / "out" / "report_knn.txt", "acc1");
  const double knn2 = report_value(root / "out" / "report_knn.txt", "acc2");
  const bool pass = arg2 >= 0.90 && arg1 >= 0.50 && cor1 >= arg1 && total < 900.0;
  return {pass, fmt("argmax Acc1 %.2f Acc2 %.2f | corrected Acc1 %.2f Acc2 %.2f | knn Acc1 %.2f Acc2 %.2f | "
                    "%.0f s (limit 900 s)",
                    arg1, arg2, cor1, cor2, knn1, knn2, total)};
}

Verdict knn_self_retrieval() {
  const ReferenceBank bank = load_bank(first_run() / "bank.emb");
  const TempogramProvider provider;
  const BankConfig bc;
  std::vector<AnnotatedTrack> refs;
  for (int t = kBankMinBpm; t <= kBankMaxBpm; ++t) refs.push_back({"ref/" + std::to_string(t), {}, double(t)});
  const TrackResolver resolve = [&](const AnnotatedTrack& a) {
    const auto clip = synthesize_reference(static_cast<int>(a.truth_bpm), 0, bc);
    return embed_track(compute_mel_spectrogram(clip, bc.mel), provider);
  };
  const TempoPredictor predict = [&](const TrackEmbedding& e) { return knn_tempo(e, bank); };
  const auto report = evaluate(refs, Method::Knn, resolve, predict, "references");
  return {report.acc1 == 1.0 && report.n_tracks == 271,
          fmt("%zu reference tracks re-rendered and embedded, Acc1 %.4f", report.n_tracks, report.acc1)};
}

Verdict determinism() {
  const fs::path& a = first_run();
  const fs::path b = e2e().run("run_b");
  std::vector<std::string> differing;
  std::vector<fs::path> files{"model.sdn", "model.train.csv", "bank.emb"};
  for (const char* m : {"argmax", "corrected", "knn"}) {
    files.push_back(fs::path("out") / (std::string("report_") + m + ".txt"));
    files.push_back(fs::path("out") / (std::string("scatter_") + m + ".csv"));
  }
  for (const auto& f : files) {
    if (ts::read_bytes(a / f) != ts::read_bytes(b / f)) differing.push_back(f.string());
  }
  std::string list;
  for (const auto& d : differing) list += " " + d;
  return {differing.empty(), fmt("%zu artifacts compared across two smoke runs (seed 0, 1 thread), %zu differ%s",
                                 files.size(), differing.size(), list.c_str())};
}

Verdict format_round_trips() {
  ts::TempDir dir;
  const fs::path& run = first_run();
  auto resave_equal = [&](const fs::path& original, const std::function<void(const fs::path&)>& resave) {
    const fs::path copy = dir / ("copy_" + original.filename().string());
    resave(copy);
    return ts::read_bytes(original) == ts::read_bytes(copy);
  };
  const bool model_ok =
      resave_equal(run / "model.sdn", [&](const fs::path& p) { save_model(load_model(run / "model.sdn"), p); });
  const bool bank_ok =
      resave_equal(run / "bank.emb", [&](const fs::path& p) { save_bank(load_bank(run / "bank.emb"), p); });

  EmbeddingFile emb;
  emb.dim = 1728;
  Rng rng(10);
  for (int t = 0; t < 5; ++t) {
    EmbeddingRecord r{"track_" + std::to_string(t), {}};
    for (int v = 0; v <= t % 3; ++v) {
      EmbeddingVector e(emb.dim);
      for (float& x : e) x = static_cast<float>(rng.normal());
      r.vectors.push_back(std::move(e));
    }
    emb.records.push_back(std::move(r));
  }
  save_embedding_file(emb, dir / "tracks.emb");
  const bool emb_ok = resave_equal(dir / "tracks.emb", [&](const fs::path& p) {
    save_embedding_file(load_embedding_file(dir / "tracks.emb"), p);
  });

  auto corrupt_magic = [&](const fs::path& src, const std::string& name) {
    auto bytes = ts::read_bytes(src);
    bytes[0] ^= 0x20;
    ts::write_bytes(dir / name, bytes);
    return dir / name;
  };
  const ErrorKind model_magic = kind_of([&] { load_model(corrupt_magic(run / "model.sdn", "bad.sdn")); });
  const ErrorKind emb_magic = kind_of([&] { load_embedding_file(corrupt_magic(dir / "tracks.emb", "bad.emb")); });
  const ErrorKind model_dim = kind_of([&] { load_model(run / "model.sdn", 1728); });
  const ErrorKind bank_dim = kind_of([&] { load_bank(run / "bank.emb", 1728); });
  auto ragged = encode_embedding_file(emb);
  ragged.insert(ragged.end(), {0, 0, 0, 0});
  const ErrorKind emb_dim = kind_of([&] { decode_embedding_file(ragged); });

  const bool errors_ok = model_magic == ErrorKind::BadMagic && emb_magic == ErrorKind::BadMagic &&
                         model_dim == ErrorKind::DimensionMismatch && bank_dim == ErrorKind::DimensionMismatch &&
                         emb_dim == ErrorKind::DimensionMismatch;
  return {model_ok && bank_ok && emb_ok && errors_ok,
          fmt("re-save identical: model %s, bank %s, embeddings %s | magic errors: %s/%s, dimension errors: %s/%s/%s",
              model_ok ? "yes" : "no", bank_ok ? "yes" : "no", emb_ok ? "yes" : "no",
              std::string(to_string(model_magic)).c_str(), std::string(to_string(emb_magic)).c_str(),
              std::string(to_string(model_dim)).c_str(), std::string(to_string(bank_dim)).c_str(),
              std::string(to_string(emb_dim)).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"metric oracle equivalence", metric_oracle},
      {"gradient check", gradient_check},
      {"learning-rate schedule", lr_schedule},
      {"sampler statistics", sampler_statistics},
      {"stretch properties", stretch_properties},
      {"octave correction cases", octave_cases},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"1-NN self-retrieval", knn_self_retrieval},
      {"determinism", determinism},
      {"format round trips", format_round_trips},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", number, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%s: %d failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
