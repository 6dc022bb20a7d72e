#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "temporef/cli.hpp"
#include "temporef/dsp.hpp"
#include "temporef/embedding.hpp"
#include "temporef/evaluation.hpp"
#include "temporef/reference_bank.hpp"
#include "temporef/sdnet.hpp"
#include "test_support.hpp"

using namespace temporef;
using temporef::testing::read_bytes;
using temporef::testing::read_text;
using temporef::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) { return std::count(text.begin(), text.end(), '\n'); }

// One small corpus, cache and bank shared by the slower cases.
struct Workspace {
  TempDir dir;
  fs::path audio = dir / "audio";
  fs::path cache = dir / "cache";
  fs::path bank = dir / "bank.emb";

  Workspace() {
    REQUIRE(run_cli({"synth-corpus", "--out-dir", audio.string(), "--count", "6", "--duration", "10", "--seed",
                     "5"})
                .code == 0);
    REQUIRE(run_cli({"featurize", "--audio-dir", audio.string(), "--cache-dir", cache.string()}).code == 0);
    REQUIRE(run_cli({"make-refs", "--duration", "10", "--threads", "4", "--bank", bank.string()}).code == 0);
  }
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"train"}).code == 2);  // --cache-dir is required
  CHECK(run_cli({"make-refs", "--no-such-flag"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  TempDir dir;
  const auto missing = run_cli({"train", "--cache-dir", (dir / "nothing").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error") != std::string::npos);
  CHECK(run_cli({"make-refs", "--profile", "tiny"}).code == 1);
  CHECK(run_cli({"make-refs", "--set", "bogus.key=1"}).code == 1);
}

TEST_CASE("make-refs") {
  TempDir dir;
  const auto a = run_cli({"make-refs", "--duration", "10", "--bank", (dir / "a.emb").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("tempi=271 range=30-300 embeddings=271 dim=271") == 0);
  const auto bank = load_bank(dir / "a.emb");
  CHECK(bank.missing_tempi().empty());

  const auto b = run_cli({"make-refs", "--duration", "10", "--variants", "2", "--threads", "3", "--bank",
                          (dir / "b.emb").string()});
  REQUIRE(b.code == 0);
  CHECK(b.out.find("embeddings=542") != std::string::npos);

  REQUIRE(run_cli({"make-refs", "--duration", "10", "--threads", "4", "--bank", (dir / "c.emb").string()}).code ==
          0);
  CHECK(read_bytes(dir / "a.emb") == read_bytes(dir / "c.emb"));
}

TEST_CASE("configuration file from TEMPOREF_CONFIG") {
  TempDir dir;
  temporef::testing::write_text(dir / "run.cfg", "bank.variants = 2\nbank.duration = 10\n");
  ::setenv("TEMPOREF_CONFIG", (dir / "run.cfg").c_str(), 1);
  const auto env = run_cli({"make-refs", "--bank", (dir / "e.emb").string()});
  ::unsetenv("TEMPOREF_CONFIG");
  REQUIRE(env.code == 0);
  CHECK(env.out.find("embeddings=542") != std::string::npos);

  // --config wins over the environment; --variants wins over the file.
  ::setenv("TEMPOREF_CONFIG", (dir / "missing.cfg").c_str(), 1);
  const auto flag = run_cli(
      {"make-refs", "--config", (dir / "run.cfg").string(), "--variants", "1", "--bank", (dir / "f.emb").string()});
  ::unsetenv("TEMPOREF_CONFIG");
  REQUIRE(flag.code == 0);
  CHECK(flag.out.find("embeddings=271") != std::string::npos);
}

TEST_CASE("featurize") {
  auto& ws = workspace();
  for (const auto& entry : fs::directory_iterator(ws.audio)) {
    if (entry.path().extension() == ".wav") CHECK(fs::exists(ws.cache / (entry.path().stem().string() + ".mels")));
  }
  const auto again = run_cli({"featurize", "--audio-dir", ws.audio.string(), "--cache-dir", ws.cache.string()});
  CHECK(again.code == 0);
  CHECK(again.out == "featurized=0 skipped=6 failed=0\n");

  TempDir dir;
  fs::create_directories(dir / "in");
  save_wav(synthesize_tone_track(100.0, 3.0), dir / "in" / "a.wav");
  save_wav(synthesize_tone_track(110.0, 3.0), dir / "in" / "b.wav");
  temporef::testing::write_text(dir / "in" / "broken.wav", "RIFF nonsense");
  const auto mixed = run_cli({"featurize", "--audio-dir", (dir / "in").string(), "--cache-dir", (dir / "out").string()});
  CHECK(mixed.code == 0);
  CHECK(mixed.out == "featurized=2 skipped=0 failed=1\n");
  CHECK(mixed.err.find("broken.wav") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "a.mels"));
  CHECK_FALSE(fs::exists(dir / "out" / "broken.mels"));
}

TEST_CASE("train writes a model and a log, reproducibly") {
  auto& ws = workspace();
  TempDir dir;
  auto train_run = [&](const std::string& name) {
    return run_cli({"train", "--cache-dir", ws.cache.string(), "--profile", "smoke", "--steps", "40",
                    "--batch-size", "8", "--seed", "3", "--model", (dir / (name + ".sdn")).string(), "--log",
                    (dir / (name + ".csv")).string()});
  };
  const auto first = train_run("a");
  REQUIRE(first.code == 0);
  CHECK(first.out.find("tracks=6 steps=40") == 0);
  CHECK(line_count(read_text(dir / "a.csv")) == 41);
  const auto model = load_model(dir / "a.sdn", 271);
  CHECK(model.dim == 271);
  REQUIRE(train_run("b").code == 0);
  CHECK(read_bytes(dir / "a.sdn") == read_bytes(dir / "b.sdn"));
  CHECK(read_bytes(dir / "a.csv") == read_bytes(dir / "b.csv"));

  // Default log path sits next to the model.
  REQUIRE(run_cli({"train", "--cache-dir", ws.cache.string(), "--steps", "3", "--batch-size", "4", "--model",
                   (dir / "c.sdn").string()})
              .code == 0);
  CHECK(fs::exists(dir / "c.train.csv"));
}

TEST_CASE("predict on audio") {
  auto& ws = workspace();
  TempDir dir;
  save_wav(synthesize_tone_track(120.0, 20.0, 392.0), dir / "t.wav");
  const auto knn = run_cli({"predict", "--input", (dir / "t.wav").string(), "--method", "knn", "--bank",
                            ws.bank.string()});
  REQUIRE(knn.code == 0);
  REQUIRE(knn.out.rfind("bpm=", 0) == 0);
  const double bpm = std::stod(knn.out.substr(4));
  CHECK(acc2_correct(bpm, 120.0));
  CHECK(knn.out.find("method=knn") != std::string::npos);

  CHECK(run_cli({"predict", "--input", (dir / "t.wav").string(), "--bank", ws.bank.string(), "--model",
                 (dir / "none.sdn").string()})
            .code == 1);
  CHECK(run_cli({"predict", "--method", "knn", "--bank", ws.bank.string()}).code == 1);
  CHECK(run_cli({"predict", "--input", (dir / "t.wav").string(), "--method", "psychic", "--bank",
                 ws.bank.string()})
            .code == 1);
}

TEST_CASE("predict with external embeddings and a crafted model") {
  TempDir dir;
  // One-dimensional embeddings; the model's logit equals the reference value,
  // so the curve is a monotone function of the bank values.
  ReferenceBank bank;
  bank.dim = 1;
  for (int t = kBankMinBpm; t <= kBankMaxBpm; ++t) {
    const auto bump = [&](double c, double h) { return h * std::exp(-0.5 * std::pow((t - c) / 3.0, 2)); };
    const float v = static_cast<float>(0.1 + bump(60, 2.0) + bump(120, 2.5) + bump(240, 3.0));
    bank.entries[t].push_back(TrackEmbedding{{v}, 1});
  }
  save_bank(bank, dir / "bank.emb");

  SdnetModel model = SdnetModel::zeros(1);
  model.w_proj[0] = 1.0f;               // p[0] = x
  model.w_h1[256 * 128 + 0] = 1.0f;     // h1[0] = relu(p_b[0])
  model.w_h2[0] = 1.0f;                 // h2[0] = h1[0]
  model.w_out[0] = 1.0f;
  save_model(model, dir / "m.sdn");

  EmbeddingFile emb;
  emb.dim = 1;
  emb.records.push_back({"song", {{0.7f}}});
  save_embedding_file(emb, dir / "tracks.emb");

  const std::vector<std::string> common{"--provider", "external-file",         "--embeddings",
                                        (dir / "tracks.emb").string(), "--bank", (dir / "bank.emb").string(),
                                        "--model",    (dir / "m.sdn").string(), "--id", "song"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"predict"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  const auto argmax = with({"--method", "argmax", "--emit-curve", (dir / "curve.csv").string()});
  REQUIRE(argmax.code == 0);
  CHECK(argmax.out == "bpm=240 method=argmax\n");
  const auto curve = read_text(dir / "curve.csv");
  CHECK(line_count(curve) == 272);
  CHECK(curve.rfind("bpm,", 0) == 0);
  const auto corrected = with({"--method", "corrected"});
  REQUIRE(corrected.code == 0);
  CHECK(corrected.out == "bpm=120 method=corrected\n");
  CHECK(with({"--method", "knn", "--emit-curve", (dir / "k.csv").string()}).code == 1);
  CHECK(with({"--input", "x.wav"}).code == 1);

  // A model of another dimension is rejected.
  save_model(init_network<float>(4, 1), dir / "m4.sdn");
  auto args = common;
  args[7] = (dir / "m4.sdn").string();
  args.insert(args.begin(), "predict");
  const auto mismatch = run_cli(args);
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("dimension") != std::string::npos);
}

TEST_CASE("evaluate") {
  auto& ws = workspace();
  TempDir dir;
  REQUIRE(run_cli({"train", "--cache-dir", ws.cache.string(), "--steps", "20", "--batch-size", "8", "--model",
                   (dir / "m.sdn").string()})
              .code == 0);
  const auto r = run_cli({"evaluate", "--annotations", (ws.audio / "annotations.tsv").string(), "--cache-dir",
                          ws.cache.string(), "--method", "knn", "--method", "argmax", "--method", "corrected",
                          "--bank", ws.bank.string(), "--model", (dir / "m.sdn").string(), "--out-dir",
                          (dir / "out").string(), "--name", "synth"});
  REQUIRE(r.code == 0);
  for (const char* m : {"knn", "argmax", "corrected"}) {
    CAPTURE(m);
    const fs::path report = dir / "out" / (std::string("report_") + m + ".txt");
    REQUIRE(fs::exists(report));
    const auto text = read_text(report);
    CHECK(text.find("dataset=synth\n") != std::string::npos);
    CHECK(text.find("n_tracks=6\n") != std::string::npos);
    const double a1 = std::stod(text.substr(text.find("acc1=") + 5));
    const double a2 = std::stod(text.substr(text.find("acc2=") + 5));
    CHECK(a1 <= a2);
    const auto rows = read_scatter(dir / "out" / (std::string("scatter_") + m + ".csv"));
    CHECK(rows.size() == 6);
  }
  CHECK(r.out.find("report=") != std::string::npos);

  temporef::testing::write_text(dir / "empty.tsv", "# nothing\n");
  const auto empty = run_cli({"evaluate", "--annotations", (dir / "empty.tsv").string(), "--method", "knn",
                              "--bank", ws.bank.string()});
  CHECK(empty.code == 1);
  CHECK(empty.err.find("no tracks") != std::string::npos);

  // Tracks without audio are reported as unresolved, not fatal.
  temporef::testing::write_text(dir / "ghost.tsv", "ghost\t120\n");
  const auto ghost = run_cli({"evaluate", "--annotations", (dir / "ghost.tsv").string(), "--method", "knn",
                              "--bank", ws.bank.string(), "--out-dir", (dir / "g").string()});
  CHECK(ghost.code == 0);
  CHECK(ghost.err.find("unresolved ghost") != std::string::npos);
}
