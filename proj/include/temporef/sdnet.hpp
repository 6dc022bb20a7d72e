#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "temporef/augmentation.hpp"
#include "temporef/dsp.hpp"
#include "temporef/embedding.hpp"

namespace temporef {

inline constexpr std::size_t kProjectionDim = 256;
inline constexpr std::size_t kHiddenDim = 128;

// Same/different tempo classifier:
//   p_a = W_proj^T a + b_proj,  p_b = W_proj^T b + b_proj   (shared weights)
//   h1  = relu(W_h1^T [p_a ; p_b] + b_h1)
//   h2  = relu(W_h2^T h1 + b_h2)
//   logit = w_out . h2 + b_out
// Matrices are stored input-major: row i of W holds the weights leaving
// input unit i.
template <typename T>
struct Network {
  std::size_t dim = 0;
  std::vector<T> w_proj;  // [dim x 256]
  std::vector<T> b_proj;  // [256]
  std::vector<T> w_h1;    // [512 x 128]
  std::vector<T> b_h1;    // [128]
  std::vector<T> w_h2;    // [128 x 128]
  std::vector<T> b_h2;    // [128]
  std::vector<T> w_out;   // [128]
  std::vector<T> b_out;   // [1]

  static Network zeros(std::size_t dim);

  static constexpr std::size_t kTensorCount = 8;
  std::array<std::vector<T>*, kTensorCount> tensors();
  std::array<const std::vector<T>*, kTensorCount> tensors() const;
  // Shape of tensor i as stored in the model file.
  std::vector<std::uint32_t> shape(std::size_t i) const;
  static std::string_view tensor_name(std::size_t i);

  friend bool operator==(const Network&, const Network&) = default;
};

using SdnetModel = Network<float>;

// Glorot-uniform weights, zero biases.
template <typename T>
Network<T> init_network(std::size_t dim, std::uint64_t seed);

template <typename T>
struct ForwardCache {
  std::vector<T> input;  // [p_a ; p_b], 512
  std::vector<T> z1, h1, z2, h2;
  T logit = 0;
};

template <typename T>
T forward(const Network<T>& net, std::span<const T> a, std::span<const T> b, ForwardCache<T>* cache = nullptr);

// max(z, 0) - z*y + log(1 + exp(-|z|))
template <typename T>
T bce_loss(T logit, int label);

template <typename T>
T sigmoid(T z);

template <typename T>
struct LabeledPair {
  std::span<const T> a;
  std::span<const T> b;
  int label = 0;
};

template <typename T>
struct BatchGradient {
  Network<T> grad;
  T loss = 0;        // mean BCE
  double accuracy = 0;  // fraction with (logit > 0) == label
};

// Exact reverse-mode gradient of the mean BCE over the batch. ReLU'(0) = 0.
template <typename T>
BatchGradient<T> backward(const Network<T>& net, std::span<const LabeledPair<T>> batch);

template <typename T>
T batch_loss(const Network<T>& net, std::span<const LabeledPair<T>> batch);

struct TrainConfig {
  int steps = 20000;
  int batch_size = 256;
  double lr_init = 1e-3;
  int warmup_steps = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int log_interval = 1;
  unsigned threads = 1;

  void validate() const;
};

// Linear warmup to lr_init, then cosine decay to 0 at `steps`.
double lr_at(int step, const TrainConfig& cfg);

template <typename T>
struct AdamState {
  Network<T> m;
  Network<T> v;
  std::int64_t step = 0;

  static AdamState zeros(std::size_t dim) { return {Network<T>::zeros(dim), Network<T>::zeros(dim), 0}; }
};

template <typename T>
void adam_step(Network<T>& net, AdamState<T>& state, const Network<T>& grad, double lr, const TrainConfig& cfg);

struct TrainLogRow {
  int step = 0;
  double lr = 0;
  double loss = 0;
  double accuracy = 0;
};

struct TrainResult {
  SdnetModel model;
  std::vector<TrainLogRow> log;
};

using TrainProgress = std::function<void(const TrainLogRow&)>;

// Streams fresh pairs every step: slot i of step s draws from an rng seeded
// with hash(cfg.seed, s, i), picks a track, samples a pair and embeds both
// excerpts. Batch construction runs on cfg.threads workers; the optimizer is
// single-threaded, so the result does not depend on the thread count.
TrainResult train(std::span<const MelSpectrogram> corpus, const EmbeddingProvider& provider,
                  const TrainConfig& cfg, const PairSamplerConfig& sampler, const TrainProgress& progress = {});

void write_train_log(std::span<const TrainLogRow> log, const std::filesystem::path& path);

// --- Model file ("SDN1") -----------------------------------------------------

std::vector<std::uint8_t> encode_model(const SdnetModel& model);
SdnetModel decode_model(std::span<const std::uint8_t> bytes, const std::string& what = "SDN1");
void save_model(const SdnetModel& model, const std::filesystem::path& path);
SdnetModel load_model(const std::filesystem::path& path);
// Also checks the model dimension against the embedding provider.
SdnetModel load_model(const std::filesystem::path& path, std::size_t expected_dim);

}  // namespace temporef
