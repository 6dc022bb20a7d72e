#include "temporef/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>

#include "temporef/config.hpp"
#include "temporef/error.hpp"
#include "temporef/evaluation.hpp"
#include "temporef/parallel.hpp"
#include "temporef/prediction.hpp"
#include "temporef/reference_bank.hpp"
#include "temporef/sdnet.hpp"
#include "temporef/synthetic_corpus.hpp"

namespace temporef::cli {

namespace fs = std::filesystem;

namespace {

// Options shared by every subcommand; flags override config-file keys.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> set;
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> provider;
  std::optional<std::string> embeddings;
  std::optional<std::string> bank;
  std::optional<std::string> model;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "Config file (default: $TEMPOREF_CONFIG)");
  app->add_option("--set", o.set, "Override a config key: key=value (repeatable)");
  app->add_option("--profile", o.profile, "smoke | paper");
  app->add_option("--seed", o.seed, "Global seed");
  app->add_option("--threads", o.threads, "Worker threads (1 = bitwise deterministic)");
  app->add_option("--out-dir", o.out_dir, "Output directory");
  app->add_option("--provider", o.provider, "builtin-tempogram | external-file");
  app->add_option("--embeddings", o.embeddings, "Embedding file for the external-file provider");
  app->add_option("--bank", o.bank, "Reference bank file");
  app->add_option("--model", o.model, "Model file");
}

RunConfig resolve_config(const CommonOptions& o, const KeyValues& extra) {
  KeyValues kv;
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("TEMPOREF_CONFIG"); env != nullptr) path = env;
  }
  if (!path.empty()) kv = load_key_values(path);

  auto put = [&](const char* key, const auto& opt) {
    if (opt) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, std::string>) {
        kv[key] = *opt;
      } else {
        kv[key] = std::to_string(*opt);
      }
    }
  };
  // An explicit --profile replaces the profile's train keys from the file.
  if (o.profile) {
    kv.erase("train.steps");
    kv.erase("train.batch_size");
    kv.erase("train.warmup_steps");
  }
  put("profile", o.profile);
  put("seed", o.seed);
  put("threads", o.threads);
  put("output_dir", o.out_dir);
  put("provider", o.provider);
  put("provider.embeddings", o.embeddings);
  put("bank.path", o.bank);
  put("model.path", o.model);
  for (const auto& [k, v] : extra) kv[k] = v;
  // --steps without an explicit warmup keeps the profiles' 10% warmup ratio.
  if (extra.contains("train.steps") && !kv.contains("train.warmup_steps")) {
    kv["train.warmup_steps"] = std::to_string(std::stoi(extra.at("train.steps")) / 10);
  }
  for (const auto& item : o.set) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, "--set expects key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  RunConfig cfg = config_from_key_values(kv);
  cfg.validate();
  return cfg;
}

std::unique_ptr<TempogramProvider> builtin_provider(const RunConfig& cfg) {
  if (cfg.provider != kBuiltinProvider) {
    throw Error(ErrorKind::InvalidArgument,
                "this command computes embeddings from audio and needs provider builtin-tempogram");
  }
  return std::make_unique<TempogramProvider>(
      TempogramConfig{cfg.mel.frame_rate(), kBankMinBpm, kBankMaxBpm, cfg.tempogram_smoothing});
}

std::size_t provider_dim(const RunConfig& cfg, const ExternalEmbeddingIndex* external) {
  if (cfg.provider == kExternalProvider) return external->dim();
  return builtin_provider(cfg)->dim();
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::FileNotFound, "directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// --- make-refs ---------------------------------------------------------------

int cmd_make_refs(const RunConfig& cfg, std::ostream& out) {
  const auto provider = builtin_provider(cfg);
  BankConfig bc;
  bc.duration = cfg.bank_duration;
  bc.variants_per_tempo = cfg.bank_variants;
  bc.mel = cfg.mel;
  bc.seed = cfg.seed;
  bc.threads = cfg.threads;
  const ReferenceBank bank = build_bank(*provider, bc);
  ensure_parent(cfg.bank_path);
  save_bank(bank, cfg.bank_path);
  out << "tempi=" << bank.entries.size() << " range=" << bank.entries.begin()->first << "-"
      << bank.entries.rbegin()->first << " embeddings=" << bank.embedding_count() << " dim=" << bank.dim
      << " path=" << cfg.bank_path.string() << "\n";
  return 0;
}

// --- featurize ---------------------------------------------------------------

int cmd_featurize(const RunConfig& cfg, const fs::path& audio_dir, const fs::path& cache_dir, std::ostream& out,
                  std::ostream& err) {
  const auto files = list_files(audio_dir, ".wav");
  fs::create_directories(cache_dir);
  enum class Status { Done, Skipped, Failed };
  std::vector<Status> status(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), cfg.threads, [&](std::size_t i) {
    const fs::path target = cache_dir / (files[i].stem().string() + ".mels");
    if (fs::exists(target)) {
      status[i] = Status::Skipped;
      return;
    }
    try {
      save_spectrogram(compute_mel_spectrogram(load_wav(files[i]), cfg.mel), target);
      status[i] = Status::Done;
    } catch (const std::exception& e) {
      status[i] = Status::Failed;
      errors[i] = e.what();
    }
  });
  std::size_t done = 0, skipped = 0, failed = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    switch (status[i]) {
      case Status::Done: ++done; break;
      case Status::Skipped: ++skipped; break;
      case Status::Failed:
        ++failed;
        err << "featurize: " << files[i].filename().string() << ": " << errors[i] << "\n";
        break;
    }
  }
  out << "featurized=" << done << " skipped=" << skipped << " failed=" << failed << "\n";
  return failed > 0 && done + skipped == 0 ? 1 : 0;
}

// --- train -------------------------------------------------------------------

int cmd_train(const RunConfig& cfg, const fs::path& cache_dir, fs::path log_path, std::ostream& out,
              std::ostream& err) {
  const auto provider = builtin_provider(cfg);
  const std::size_t need = 2 * source_window_frames(cfg.sampler, cfg.mel.frame_rate());
  std::vector<MelSpectrogram> corpus;
  for (const auto& file : list_files(cache_dir, ".mels")) {
    try {
      MelSpectrogram spec = load_spectrogram(file);
      if (spec.frames() < need) {
        err << "train: skipping " << file.filename().string() << " (" << spec.frames() << " frames < " << need
            << ")\n";
        continue;
      }
      corpus.push_back(std::move(spec));
    } catch (const std::exception& e) {
      err << "train: skipping " << file.filename().string() << ": " << e.what() << "\n";
    }
  }
  if (corpus.empty()) throw Error(ErrorKind::InvalidArgument, "empty corpus: no usable cached tracks in " + cache_dir.string());

  const int report_every = std::max(1, cfg.train.steps / 20);
  const TrainResult result = train(corpus, *provider, cfg.train, cfg.sampler, [&](const TrainLogRow& row) {
    if (row.step % report_every == 0 || row.step + 1 == cfg.train.steps) {
      char line[128];
      std::snprintf(line, sizeof line, "step %6d  lr %.3e  loss %.4f  acc %.3f\n", row.step, row.lr, row.loss,
                    row.accuracy);
      err << line;
    }
  });

  if (log_path.empty()) log_path = fs::path(cfg.model_path).replace_extension(".train.csv");
  ensure_parent(cfg.model_path);
  ensure_parent(log_path);
  save_model(result.model, cfg.model_path);
  write_train_log(result.log, log_path);
  const TrainLogRow& last = result.log.back();
  char summary[256];
  std::snprintf(summary, sizeof summary, "tracks=%zu steps=%d final_loss=%.6f final_acc=%.4f", corpus.size(),
                cfg.train.steps, last.loss, last.accuracy);
  out << summary << " model=" << cfg.model_path.string() << " log=" << log_path.string() << "\n";
  return 0;
}

// --- predict / evaluate ------------------------------------------------------

struct InferenceContext {
  std::optional<ExternalEmbeddingIndex> external;
  std::unique_ptr<TempogramProvider> builtin;
  ReferenceBank bank;
  std::optional<SdnetModel> model;
};

InferenceContext load_inference(const RunConfig& cfg, bool need_model) {
  InferenceContext ctx;
  if (cfg.provider == kExternalProvider) {
    ctx.external = load_external_embeddings(cfg.embeddings);
  } else {
    ctx.builtin = builtin_provider(cfg);
  }
  const std::size_t dim = provider_dim(cfg, ctx.external ? &*ctx.external : nullptr);
  if (!fs::exists(cfg.bank_path)) throw Error(ErrorKind::FileNotFound, "missing bank: " + cfg.bank_path.string());
  ctx.bank = load_bank(cfg.bank_path, dim);
  if (need_model) {
    if (!fs::exists(cfg.model_path)) {
      throw Error(ErrorKind::FileNotFound, "missing model: " + cfg.model_path.string());
    }
    ctx.model = load_model(cfg.model_path, dim);
  }
  return ctx;
}

TrackEmbedding embed_audio(const InferenceContext& ctx, const RunConfig& cfg, const fs::path& wav,
                           const fs::path& cache_dir, const std::string& id) {
  if (!cache_dir.empty()) {
    const fs::path cached = cache_dir / (id + ".mels");
    if (fs::exists(cached)) return embed_track(load_spectrogram(cached), *ctx.builtin);
  }
  return embed_track(compute_mel_spectrogram(load_wav(wav), cfg.mel), *ctx.builtin);
}

int cmd_predict(const RunConfig& cfg, const std::string& input, const std::string& id, Method method,
                const std::string& curve_path, std::ostream& out) {
  if (input.empty() == id.empty()) throw Error(ErrorKind::InvalidArgument, "give exactly one of --input or --id");
  if (!curve_path.empty() && method == Method::Knn) {
    throw Error(ErrorKind::InvalidArgument, "--emit-curve needs method argmax or corrected");
  }
  const InferenceContext ctx = load_inference(cfg, method != Method::Knn);
  TrackEmbedding target;
  if (!id.empty()) {
    if (!ctx.external) throw Error(ErrorKind::InvalidArgument, "--id needs provider external-file");
    target = ctx.external->track_embedding(id);
  } else {
    if (!ctx.builtin) throw Error(ErrorKind::InvalidArgument, "--input needs provider builtin-tempogram");
    target = embed_audio(ctx, cfg, input, {}, {});
  }
  const TempoEstimate est = predict_tempo(target, ctx.bank, ctx.model ? &*ctx.model : nullptr, method);
  if (!curve_path.empty()) {
    ensure_parent(curve_path);
    write_curve_csv(*est.curve, curve_path);
  }
  char line[64];
  std::snprintf(line, sizeof line, "bpm=%g method=", est.bpm);
  out << line << to_string(est.method) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& annotations, AnnotationFormat format,
                 const fs::path& audio_dir, const fs::path& cache_dir, const std::vector<Method>& methods,
                 std::string dataset, std::ostream& out, std::ostream& err) {
  const auto tracks = load_annotations(annotations, format, audio_dir);
  if (tracks.empty()) throw Error(ErrorKind::InvalidArgument, "no tracks in " + annotations.string());
  const bool need_model = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::Knn; });
  const InferenceContext ctx = load_inference(cfg, need_model);
  if (dataset.empty()) dataset = annotations.stem().string();

  // Embeddings are resolved once and shared by all methods.
  std::vector<std::optional<TrackEmbedding>> embeddings(tracks.size());
  std::vector<std::string> failures(tracks.size());
  parallel_for(tracks.size(), cfg.threads, [&](std::size_t i) {
    try {
      embeddings[i] = ctx.external ? ctx.external->track_embedding(tracks[i].track_id)
                                   : embed_audio(ctx, cfg, tracks[i].source, cache_dir, tracks[i].track_id);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tracks.size(); ++i) index[tracks[i].track_id] = i;
  const TrackResolver resolve = [&](const AnnotatedTrack& t) {
    const std::size_t i = index.at(t.track_id);
    if (!embeddings[i]) throw Error(ErrorKind::FileNotFound, failures[i]);
    return *embeddings[i];
  };

  fs::create_directories(cfg.output_dir);
  for (Method method : methods) {
    const TempoPredictor predict = [&](const TrackEmbedding& e) {
      return predict_tempo(e, ctx.bank, ctx.model ? &*ctx.model : nullptr, method);
    };
    const EvalReport report = evaluate(tracks, method, resolve, predict, dataset, cfg.threads);
    const std::string m(to_string(method));
    const fs::path summary = cfg.output_dir / ("report_" + m + ".txt");
    const fs::path scatter = cfg.output_dir / ("scatter_" + m + ".csv");
    write_report_summary(report, summary);
    emit_scatter(report, scatter);
    out << format_report_table(report);
    out << "report=" << summary.string() << " scatter=" << scatter.string() << "\n";
    for (const auto& u : report.unresolved) err << "evaluate: unresolved " << u.track_id << ": " << u.reason << "\n";
  }
  return 0;
}

// --- synth-corpus ------------------------------------------------------------

int cmd_synth_corpus(const SyntheticCorpusConfig& sc, const fs::path& dir, unsigned threads, std::ostream& out) {
  fs::create_directories(dir);
  std::vector<SyntheticTrack> meta(static_cast<std::size_t>(sc.count));
  parallel_for(meta.size(), threads, [&](std::size_t i) {
    SyntheticTrack t = generate_synthetic_track(sc, static_cast<int>(i));
    save_wav(t.clip, dir / (t.id + ".wav"));
    t.clip = {};
    meta[i] = std::move(t);
  });
  std::ofstream tsv(dir / "annotations.tsv", std::ios::trunc);
  if (!tsv) throw Error(ErrorKind::Io, "cannot write annotations in " + dir.string());
  char bpm[32];
  for (const auto& t : meta) {
    std::snprintf(bpm, sizeof bpm, "%.4f", t.tempo);
    tsv << t.id << '\t' << bpm << '\n';
  }
  out << "tracks=" << meta.size() << " dir=" << dir.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised tempo estimation: same/different classifier over synthetic references", "temporef"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* make_refs = app.add_subcommand("make-refs", "Build and save the 30-300 BPM reference bank");
  add_common(make_refs, common);
  std::optional<int> variants;
  std::optional<double> ref_duration;
  make_refs->add_option("--variants", variants, "References per tempo");
  make_refs->add_option("--duration", ref_duration, "Reference track length in seconds");

  auto* featurize = app.add_subcommand("featurize", "Cache log-mel spectrograms for a directory of WAV files");
  add_common(featurize, common);
  std::string audio_dir, cache_dir;
  featurize->add_option("--audio-dir", audio_dir, "Directory of .wav files")->required();
  featurize->add_option("--cache-dir", cache_dir, "Output directory for .mels files")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the same/different classifier on cached spectrograms");
  add_common(train_cmd, common);
  std::string train_cache, log_path;
  std::optional<int> steps, batch_size;
  train_cmd->add_option("--cache-dir", train_cache, "Directory of .mels files")->required();
  train_cmd->add_option("--log", log_path, "Training log CSV (default: <model>.train.csv)");
  train_cmd->add_option("--steps", steps, "Training steps (warmup defaults to 10%)");
  train_cmd->add_option("--batch-size", batch_size, "Pairs per step");

  auto* predict = app.add_subcommand("predict", "Estimate the tempo of one track");
  add_common(predict, common);
  std::string input, track_id, method_name = "argmax", curve_path;
  predict->add_option("--input", input, "WAV file");
  predict->add_option("--id", track_id, "Track id in the external embedding file");
  predict->add_option("--method", method_name, "argmax | corrected | knn");
  predict->add_option("--emit-curve", curve_path, "Write the same-tempo curve as CSV");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against annotations (Acc1/Acc2)");
  add_common(evaluate_cmd, common);
  std::string annotations, format_name = "tsv", eval_audio, eval_cache, dataset;
  std::vector<std::string> eval_methods;
  evaluate_cmd->add_option("--annotations", annotations, "TSV file or directory of .bpm files")->required();
  evaluate_cmd->add_option("--format", format_name, "tsv | bpm-files");
  evaluate_cmd->add_option("--audio-dir", eval_audio, "Directory holding <track_id>.wav");
  evaluate_cmd->add_option("--cache-dir", eval_cache, "Reuse <track_id>.mels from this directory");
  evaluate_cmd->add_option("--method", eval_methods, "argmax | corrected | knn (repeatable)");
  evaluate_cmd->add_option("--name", dataset, "Dataset name in the report");

  auto* synth = app.add_subcommand("synth-corpus", "Write synthetic tone-pattern tracks and their annotations");
  SyntheticCorpusConfig sc;
  std::string synth_dir;
  unsigned synth_threads = 1;
  synth->add_option("--out-dir", synth_dir, "Output directory")->required();
  synth->add_option("--count", sc.count, "Number of tracks");
  synth->add_option("--min-bpm", sc.bpm_min, "Lowest tempo");
  synth->add_option("--max-bpm", sc.bpm_max, "Highest tempo");
  synth->add_option("--duration", sc.duration, "Track length in seconds");
  synth->add_option("--seed", sc.seed, "Seed");
  synth->add_option("--threads", synth_threads, "Worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth_corpus(sc, synth_dir, synth_threads, out);

    KeyValues extra;
    if (variants) extra["bank.variants"] = std::to_string(*variants);
    if (ref_duration) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", *ref_duration);
      extra["bank.duration"] = buf;
    }
    if (steps) extra["train.steps"] = std::to_string(*steps);
    if (batch_size) extra["train.batch_size"] = std::to_string(*batch_size);
    const RunConfig cfg = resolve_config(common, extra);

    if (make_refs->parsed()) return cmd_make_refs(cfg, out);
    if (featurize->parsed()) return cmd_featurize(cfg, audio_dir, cache_dir, out, err);
    if (train_cmd->parsed()) return cmd_train(cfg, train_cache, log_path, out, err);
    if (predict->parsed()) return cmd_predict(cfg, input, track_id, parse_method(method_name), curve_path, out);
    if (evaluate_cmd->parsed()) {
      std::vector<Method> methods;
      for (const auto& m : eval_methods) methods.push_back(parse_method(m));
      if (methods.empty()) methods.push_back(Method::Argmax);
      return cmd_evaluate(cfg, annotations, parse_annotation_format(format_name), eval_audio, eval_cache, methods,
                          dataset, out, err);
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace temporef::cli
