#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "temporef/augmentation.hpp"
#include "temporef/dsp.hpp"

namespace temporef {

using EmbeddingVector = std::vector<float>;

struct TrackEmbedding {
  std::vector<float> values;
  std::size_t num_excerpts = 0;

  friend bool operator==(const TrackEmbedding&, const TrackEmbedding&) = default;
};

// Maps a fixed-length excerpt to a D-dimensional vector. Implementations must
// be deterministic and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(const Excerpt& excerpt) const = 0;
};

// Lag in frames for each integer BPM in [bpm_min, bpm_max]:
// round(60 * frame_rate / bpm).
std::vector<int> tempo_lag_grid(double frame_rate, int bpm_min = 30, int bpm_max = 300);

// Onset envelope of an excerpt: for t = 1..L-1, the band sum of positive
// frame-to-frame increases. Length L - 1.
std::vector<double> onset_envelope(const FrameMatrix& data);

// Gaussian smoothing with standard deviation `sigma` frames (kernel cut at
// 3 sigma, renormalized at the edges). sigma <= 0 returns the input.
std::vector<double> smooth_envelope(std::span<const double> env, double sigma);

// Tempogram feature of one excerpt. The onset envelope is smoothed by
// `sigma` frames and mean-removed; entry k is its normalized autocorrelation
// r(lags[k]) / r(0), with r summed over the overlapping part.
// The vector is then mean-centered and scaled to unit norm; a constant
// envelope yields the zero vector.
EmbeddingVector tempogram_embed(const Excerpt& excerpt, std::span<const int> lags, double sigma = 0.0);

struct TempogramConfig {
  double frame_rate = 100.0;
  int bpm_min = 30;
  int bpm_max = 300;
  double smoothing_frames = 1.0;
};

class TempogramProvider final : public EmbeddingProvider {
 public:
  explicit TempogramProvider(TempogramConfig config = {});

  std::size_t dim() const override { return lags_.size(); }
  EmbeddingVector embed(const Excerpt& excerpt) const override;

  const TempogramConfig& config() const { return config_; }
  const std::vector<int>& lags() const { return lags_; }

 private:
  TempogramConfig config_;
  std::vector<int> lags_;
};

// Excerpts start every 1.5 s (150 frames at 100 fps); a trailing partial
// window is dropped.
std::size_t excerpt_hop(double frame_rate);
std::vector<Excerpt> tile_excerpts(const MelSpectrogram& spec);

TrackEmbedding mean_pool(std::span<const EmbeddingVector> vectors);
TrackEmbedding embed_track(std::span<const Excerpt> excerpts, const EmbeddingProvider& provider);
TrackEmbedding embed_track(const MelSpectrogram& spec, const EmbeddingProvider& provider);

// --- Embedding file ("EMB1") -------------------------------------------------

struct EmbeddingRecord {
  std::string id;
  std::vector<EmbeddingVector> vectors;  // V >= 1 vectors of dimension D

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingFile {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;

  friend bool operator==(const EmbeddingFile&, const EmbeddingFile&) = default;
};

std::vector<std::uint8_t> encode_embedding_file(const EmbeddingFile& file);
EmbeddingFile decode_embedding_file(std::span<const std::uint8_t> bytes, const std::string& what = "EMB1");
void save_embedding_file(const EmbeddingFile& file, const std::filesystem::path& path);
EmbeddingFile load_embedding_file(const std::filesystem::path& path);

// Read-only lookup over an embedding file. Records with V > 1 are
// excerpt-level and are mean-pooled on request.
class ExternalEmbeddingIndex {
 public:
  ExternalEmbeddingIndex() = default;
  explicit ExternalEmbeddingIndex(EmbeddingFile file);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool contains(const std::string& id) const { return records_.contains(id); }
  const EmbeddingRecord& record(const std::string& id) const;
  TrackEmbedding track_embedding(const std::string& id) const;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, EmbeddingRecord> records_;
};

ExternalEmbeddingIndex load_external_embeddings(const std::filesystem::path& path);

}  // namespace temporef
