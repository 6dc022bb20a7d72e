#include "temporef/reference_bank.hpp"

#include <charconv>
#include <string>

#include "temporef/error.hpp"
#include "temporef/parallel.hpp"
#include "temporef/rng.hpp"

namespace temporef {

std::size_t ReferenceBank::embedding_count() const {
  std::size_t n = 0;
  for (const auto& [tempo, variants] : entries) n += variants.size();
  return n;
}

std::vector<int> ReferenceBank::missing_tempi() const {
  std::vector<int> missing;
  for (int t = kBankMinBpm; t <= kBankMaxBpm; ++t) {
    auto it = entries.find(t);
    if (it == entries.end() || it->second.empty()) missing.push_back(t);
  }
  return missing;
}

void ReferenceBank::check_complete() const {
  const auto missing = missing_tempi();
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i > 0) list += ", ";
      if (i == 20) {
        list += "... (" + std::to_string(missing.size()) + " total)";
        break;
      }
      list += std::to_string(missing[i]);
    }
    throw Error(ErrorKind::IncompleteBank, "incomplete bank: missing " + list);
  }
  for (const auto& [tempo, variants] : entries) {
    if (tempo < kBankMinBpm || tempo > kBankMaxBpm) {
      throw Error(ErrorKind::InvalidArgument, "bank tempo " + std::to_string(tempo) + " outside [30, 300]");
    }
    for (const auto& e : variants) {
      if (e.values.size() != dim) {
        throw Error(ErrorKind::DimensionMismatch, "bank entry for tempo " + std::to_string(tempo) +
                                                      " has dimension " + std::to_string(e.values.size()));
      }
    }
  }
}

bool ReferenceBank::same_embeddings(const ReferenceBank& other) const {
  if (dim != other.dim || entries.size() != other.entries.size()) return false;
  for (auto a = entries.begin(), b = other.entries.begin(); a != entries.end(); ++a, ++b) {
    if (a->first != b->first || a->second.size() != b->second.size()) return false;
    for (std::size_t v = 0; v < a->second.size(); ++v) {
      if (a->second[v].values != b->second[v].values) return false;
    }
  }
  return true;
}

double reference_phase(int tempo, int variant, std::uint64_t seed) {
  if (variant == 0) return 0.0;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(tempo), static_cast<std::uint64_t>(variant)));
  return rng.uniform() * 60.0 / tempo;
}

AudioClip synthesize_reference(int tempo, int variant, const BankConfig& cfg) {
  return synthesize_tone_track(tempo, cfg.duration, cfg.pitch, cfg.mel.sample_rate,
                               reference_phase(tempo, variant, cfg.seed));
}

ReferenceBank build_bank(const EmbeddingProvider& provider, const BankConfig& cfg) {
  if (cfg.duration < 10.0) throw Error(ErrorKind::InvalidArgument, "reference duration must be >= 10 s");
  if (cfg.variants_per_tempo < 1) throw Error(ErrorKind::InvalidArgument, "variants_per_tempo must be >= 1");

  const auto variants = static_cast<std::size_t>(cfg.variants_per_tempo);
  std::vector<TrackEmbedding> flat(static_cast<std::size_t>(kBankTempoCount) * variants);
  parallel_for(flat.size(), cfg.threads, [&](std::size_t i) {
    const int tempo = kBankMinBpm + static_cast<int>(i / variants);
    const int variant = static_cast<int>(i % variants);
    const MelSpectrogram spec = compute_mel_spectrogram(synthesize_reference(tempo, variant, cfg), cfg.mel);
    flat[i] = embed_track(spec, provider);
  });

  ReferenceBank bank;
  bank.dim = provider.dim();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    bank.entries[kBankMinBpm + static_cast<int>(i / variants)].push_back(std::move(flat[i]));
  }
  return bank;
}

EmbeddingFile bank_to_embedding_file(const ReferenceBank& bank) {
  EmbeddingFile file;
  file.dim = static_cast<std::uint32_t>(bank.dim);
  for (const auto& [tempo, variants] : bank.entries) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      file.records.push_back({"ref/" + std::to_string(tempo) + "/" + std::to_string(v), {variants[v].values}});
    }
  }
  return file;
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

ReferenceBank bank_from_embedding_file(const EmbeddingFile& file) {
  ReferenceBank bank;
  bank.dim = file.dim;
  std::map<int, std::map<int, TrackEmbedding>> staged;
  for (const auto& rec : file.records) {
    const std::string_view id = rec.id;
    const auto slash = id.find('/', 4);
    int tempo = 0, variant = 0;
    if (!id.starts_with("ref/") || slash == std::string_view::npos || !parse_int(id.substr(4, slash - 4), tempo) ||
        !parse_int(id.substr(slash + 1), variant) || variant < 0) {
      throw Error(ErrorKind::Parse, "bank record id '" + rec.id + "' is not of the form ref/<tempo>/<variant>");
    }
    if (rec.vectors.size() != 1) {
      throw Error(ErrorKind::Parse, "bank record " + rec.id + " must hold exactly one track-level vector");
    }
    staged[tempo][variant] = TrackEmbedding{rec.vectors.front(), 1};
  }
  for (auto& [tempo, variants] : staged) {
    auto& list = bank.entries[tempo];
    for (auto& [v, e] : variants) list.push_back(std::move(e));
  }
  bank.check_complete();
  return bank;
}

void save_bank(const ReferenceBank& bank, const std::filesystem::path& path) {
  bank.check_complete();
  save_embedding_file(bank_to_embedding_file(bank), path);
}

ReferenceBank load_bank(const std::filesystem::path& path) {
  return bank_from_embedding_file(load_embedding_file(path));
}

ReferenceBank load_bank(const std::filesystem::path& path, std::size_t expected_dim) {
  ReferenceBank bank = load_bank(path);
  if (bank.dim != expected_dim) {
    throw Error(ErrorKind::DimensionMismatch, path.string() + ": bank dimension " + std::to_string(bank.dim) +
                                                  " does not match embedding dimension " +
                                                  std::to_string(expected_dim));
  }
  return bank;
}

}  // namespace temporef
