#include <cstdio>
#include <fstream>

#include "temporef/error.hpp"
#include "temporef/parallel.hpp"
#include "temporef/rng.hpp"
#include "temporef/sdnet.hpp"

namespace temporef {

TrainResult train(std::span<const MelSpectrogram> corpus, const EmbeddingProvider& provider,
                  const TrainConfig& cfg, const PairSamplerConfig& sampler, const TrainProgress& progress) {
  cfg.validate();
  sampler.validate();
  if (corpus.empty()) throw Error(ErrorKind::InvalidArgument, "empty training corpus");

  const std::size_t dim = provider.dim();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  TrainResult result{init_network<float>(dim, cfg.seed), {}};
  AdamState<float> adam = AdamState<float>::zeros(dim);

  std::vector<EmbeddingVector> emb_a(batch_size), emb_b(batch_size);
  std::vector<int> labels(batch_size);
  std::vector<LabeledPair<float>> batch(batch_size);
  const std::uint64_t stream_seed = derive_seed(cfg.seed ^ sampler.rng_seed, "pairs");

  for (int step = 0; step < cfg.steps; ++step) {
    parallel_for(batch_size, cfg.threads, [&](std::size_t slot) {
      Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(step), slot));
      const MelSpectrogram& track = corpus[rng.below(corpus.size())];
      TrainingPair pair = sample_pair(track, sampler, rng);
      emb_a[slot] = provider.embed(pair.a);
      emb_b[slot] = provider.embed(pair.b);
      labels[slot] = pair.label;
    });
    for (std::size_t i = 0; i < batch_size; ++i) {
      if (emb_a[i].size() != dim || emb_b[i].size() != dim) {
        throw Error(ErrorKind::DimensionMismatch, "provider returned a vector of the wrong dimension");
      }
      batch[i] = {emb_a[i], emb_b[i], labels[i]};
    }

    const BatchGradient<float> bg = backward<float>(result.model, batch);
    const double lr = lr_at(step, cfg);
    adam_step(result.model, adam, bg.grad, lr, cfg);

    if (step % cfg.log_interval == 0 || step + 1 == cfg.steps) {
      TrainLogRow row{step, lr, static_cast<double>(bg.loss), bg.accuracy};
      result.log.push_back(row);
      if (progress) progress(row);
    }
  }
  return result;
}

void write_train_log(std::span<const TrainLogRow> log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "step,lr,loss,acc\n";
  char line[128];
  for (const auto& row : log) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.6f\n", row.step, row.lr, row.loss, row.accuracy);
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace temporef
