#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "temporef/dsp.hpp"
#include "temporef/embedding.hpp"

namespace temporef {

inline constexpr int kBankMinBpm = 30;
inline constexpr int kBankMaxBpm = 300;
inline constexpr int kBankTempoCount = kBankMaxBpm - kBankMinBpm + 1;  // 271

struct ReferenceBank {
  std::size_t dim = 0;
  std::map<int, std::vector<TrackEmbedding>> entries;  // tempo -> variants

  std::size_t embedding_count() const;
  std::vector<int> missing_tempi() const;
  // Throws IncompleteBank naming the missing tempi, DimensionMismatch on a
  // vector of the wrong size.
  void check_complete() const;

  // Compares embedding values only; excerpt counts are not persisted.
  bool same_embeddings(const ReferenceBank& other) const;
};

struct BankConfig {
  double duration = 30.0;
  int variants_per_tempo = 1;
  double pitch = kMiddleC;
  MelParams mel{};
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Phase offset of a reference variant: 0 for variant 0, otherwise uniform in
// one beat period, seeded by (seed, tempo, variant).
double reference_phase(int tempo, int variant, std::uint64_t seed);

AudioClip synthesize_reference(int tempo, int variant, const BankConfig& cfg);

// One entry per integer tempo in [30, 300], each holding variants_per_tempo
// track-level embeddings of synthetic quarter-note tracks.
ReferenceBank build_bank(const EmbeddingProvider& provider, const BankConfig& cfg = {});

// Track ids are "ref/<tempo>/<variant>", one track-level vector each.
EmbeddingFile bank_to_embedding_file(const ReferenceBank& bank);
ReferenceBank bank_from_embedding_file(const EmbeddingFile& file);

void save_bank(const ReferenceBank& bank, const std::filesystem::path& path);
ReferenceBank load_bank(const std::filesystem::path& path);
ReferenceBank load_bank(const std::filesystem::path& path, std::size_t expected_dim);

}  // namespace temporef
