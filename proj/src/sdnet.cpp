#include "temporef/sdnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "temporef/error.hpp"
#include "temporef/rng.hpp"
#include "temporef/simd/kernels.hpp"

namespace temporef {

namespace {

constexpr std::size_t kConcatDim = 2 * kProjectionDim;

template <typename T>
void check_input(const Network<T>& net, std::span<const T> a, std::span<const T> b) {
  if (a.size() != net.dim || b.size() != net.dim) {
    throw Error(ErrorKind::DimensionMismatch, "classifier expects dimension " + std::to_string(net.dim) + ", got " +
                                                  std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

// out = bias + sum_i x_i * W[i, :]
template <typename T>
void dense(std::span<const T> x, const std::vector<T>& w, const std::vector<T>& bias, T* out) {
  const std::size_t width = bias.size();
  std::copy(bias.begin(), bias.end(), out);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != T(0)) simd::axpy(x[i], w.data() + i * width, out, width);
  }
}

template <typename T>
void glorot(std::vector<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (T& x : w) x = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace

template <typename T>
Network<T> Network<T>::zeros(std::size_t dim) {
  Network net;
  net.dim = dim;
  net.w_proj.assign(dim * kProjectionDim, T(0));
  net.b_proj.assign(kProjectionDim, T(0));
  net.w_h1.assign(kConcatDim * kHiddenDim, T(0));
  net.b_h1.assign(kHiddenDim, T(0));
  net.w_h2.assign(kHiddenDim * kHiddenDim, T(0));
  net.b_h2.assign(kHiddenDim, T(0));
  net.w_out.assign(kHiddenDim, T(0));
  net.b_out.assign(1, T(0));
  return net;
}

template <typename T>
std::array<std::vector<T>*, Network<T>::kTensorCount> Network<T>::tensors() {
  return {&w_proj, &b_proj, &w_h1, &b_h1, &w_h2, &b_h2, &w_out, &b_out};
}

template <typename T>
std::array<const std::vector<T>*, Network<T>::kTensorCount> Network<T>::tensors() const {
  return {&w_proj, &b_proj, &w_h1, &b_h1, &w_h2, &b_h2, &w_out, &b_out};
}

template <typename T>
std::vector<std::uint32_t> Network<T>::shape(std::size_t i) const {
  const auto d = static_cast<std::uint32_t>(dim);
  constexpr auto p = static_cast<std::uint32_t>(kProjectionDim);
  constexpr auto h = static_cast<std::uint32_t>(kHiddenDim);
  switch (i) {
    case 0: return {d, p};
    case 1: return {p};
    case 2: return {2 * p, h};
    case 3: return {h};
    case 4: return {h, h};
    case 5: return {h};
    case 6: return {h};
    case 7: return {1};
    default: throw Error(ErrorKind::InvalidArgument, "tensor index out of range");
  }
}

template <typename T>
std::string_view Network<T>::tensor_name(std::size_t i) {
  static constexpr std::array<std::string_view, kTensorCount> names{
      "w_proj", "b_proj", "w_h1", "b_h1", "w_h2", "b_h2", "w_out", "b_out"};
  return names.at(i);
}

template <typename T>
Network<T> init_network(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
  Network<T> net = Network<T>::zeros(dim);
  Rng rng(derive_seed(seed, "sdnet-init"));
  glorot(net.w_proj, dim, kProjectionDim, rng);
  glorot(net.w_h1, kConcatDim, kHiddenDim, rng);
  glorot(net.w_h2, kHiddenDim, kHiddenDim, rng);
  glorot(net.w_out, kHiddenDim, 1, rng);
  return net;
}

template <typename T>
T forward(const Network<T>& net, std::span<const T> a, std::span<const T> b, ForwardCache<T>* cache) {
  check_input(net, a, b);
  ForwardCache<T> local;
  ForwardCache<T>& c = cache != nullptr ? *cache : local;
  c.input.resize(kConcatDim);
  c.z1.resize(kHiddenDim);
  c.h1.resize(kHiddenDim);
  c.z2.resize(kHiddenDim);
  c.h2.resize(kHiddenDim);

  dense<T>(a, net.w_proj, net.b_proj, c.input.data());
  dense<T>(b, net.w_proj, net.b_proj, c.input.data() + kProjectionDim);
  dense<T>(c.input, net.w_h1, net.b_h1, c.z1.data());
  for (std::size_t j = 0; j < kHiddenDim; ++j) c.h1[j] = std::max(c.z1[j], T(0));
  dense<T>(c.h1, net.w_h2, net.b_h2, c.z2.data());
  for (std::size_t j = 0; j < kHiddenDim; ++j) c.h2[j] = std::max(c.z2[j], T(0));
  c.logit = simd::dot(net.w_out.data(), c.h2.data(), kHiddenDim) + net.b_out[0];
  return c.logit;
}

template <typename T>
T bce_loss(T logit, int label) {
  const T y = label != 0 ? T(1) : T(0);
  return std::max(logit, T(0)) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
BatchGradient<T> backward(const Network<T>& net, std::span<const LabeledPair<T>> batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "backward: empty batch");
  BatchGradient<T> out{Network<T>::zeros(net.dim), T(0), 0.0};
  Network<T>& g = out.grad;
  const T scale = T(1) / static_cast<T>(batch.size());

  ForwardCache<T> c;
  std::vector<T> dz2(kHiddenDim), dz1(kHiddenDim), dinput(kConcatDim);
  double loss = 0.0;
  std::size_t correct = 0;

  for (const auto& ex : batch) {
    const T logit = forward(net, ex.a, ex.b, &c);
    loss += static_cast<double>(bce_loss(logit, ex.label));
    if ((logit > T(0)) == (ex.label != 0)) ++correct;

    // dL/dz = sigmoid(z) - y, averaged over the batch.
    const T dlogit = (sigmoid(logit) - (ex.label != 0 ? T(1) : T(0))) * scale;
    g.b_out[0] += dlogit;
    simd::axpy(dlogit, c.h2.data(), g.w_out.data(), kHiddenDim);

    for (std::size_t j = 0; j < kHiddenDim; ++j) dz2[j] = c.z2[j] > T(0) ? dlogit * net.w_out[j] : T(0);
    simd::axpy(T(1), dz2.data(), g.b_h2.data(), kHiddenDim);
    for (std::size_t i = 0; i < kHiddenDim; ++i) {
      if (c.h1[i] != T(0)) simd::axpy(c.h1[i], dz2.data(), g.w_h2.data() + i * kHiddenDim, kHiddenDim);
      dz1[i] = c.z1[i] > T(0) ? simd::dot(net.w_h2.data() + i * kHiddenDim, dz2.data(), kHiddenDim) : T(0);
    }

    simd::axpy(T(1), dz1.data(), g.b_h1.data(), kHiddenDim);
    for (std::size_t i = 0; i < kConcatDim; ++i) {
      if (c.input[i] != T(0)) simd::axpy(c.input[i], dz1.data(), g.w_h1.data() + i * kHiddenDim, kHiddenDim);
      dinput[i] = simd::dot(net.w_h1.data() + i * kHiddenDim, dz1.data(), kHiddenDim);
    }

    const T* dpa = dinput.data();
    const T* dpb = dinput.data() + kProjectionDim;
    simd::axpy(T(1), dpa, g.b_proj.data(), kProjectionDim);
    simd::axpy(T(1), dpb, g.b_proj.data(), kProjectionDim);
    for (std::size_t i = 0; i < net.dim; ++i) {
      T* row = g.w_proj.data() + i * kProjectionDim;
      if (ex.a[i] != T(0)) simd::axpy(ex.a[i], dpa, row, kProjectionDim);
      if (ex.b[i] != T(0)) simd::axpy(ex.b[i], dpb, row, kProjectionDim);
    }
  }
  out.loss = static_cast<T>(loss / static_cast<double>(batch.size()));
  out.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
  return out;
}

template <typename T>
T batch_loss(const Network<T>& net, std::span<const LabeledPair<T>> batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "batch_loss: empty batch");
  double loss = 0.0;
  for (const auto& ex : batch) loss += static_cast<double>(bce_loss(forward(net, ex.a, ex.b), ex.label));
  return static_cast<T>(loss / static_cast<double>(batch.size()));
}

void TrainConfig::validate() const {
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= steps) {
    throw Error(ErrorKind::InvalidArgument, "warmup_steps must lie in [0, steps)");
  }
  if (!(lr_init > 0.0)) throw Error(ErrorKind::InvalidArgument, "lr_init must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid Adam hyperparameters");
  }
  if (log_interval < 1) throw Error(ErrorKind::InvalidArgument, "log_interval must be >= 1");
}

double lr_at(int step, const TrainConfig& cfg) {
  if (step < cfg.warmup_steps) {
    return cfg.lr_init * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (step >= cfg.steps) return 0.0;
  const double progress =
      static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(cfg.steps - cfg.warmup_steps);
  return cfg.lr_init * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adam_step(Network<T>& net, AdamState<T>& state, const Network<T>& grad, double lr, const TrainConfig& cfg) {
  if (net.dim != grad.dim || net.dim != state.m.dim || net.dim != state.v.dim) {
    throw Error(ErrorKind::DimensionMismatch, "adam_step: inconsistent shapes");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);

  auto params = net.tensors();
  auto grads = grad.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  for (std::size_t k = 0; k < Network<T>::kTensorCount; ++k) {
    std::vector<T>& w = *params[k];
    const std::vector<T>& g = *grads[k];
    std::vector<T>& m = *ms[k];
    std::vector<T>& v = *vs[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const double m_hat = static_cast<double>(m[i]) / correction1;
      const double v_hat = static_cast<double>(v[i]) / correction2;
      w[i] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

#define TEMPOREF_INSTANTIATE(T)                                                                      \
  template struct Network<T>;                                                                        \
  template Network<T> init_network<T>(std::size_t, std::uint64_t);                                   \
  template T forward<T>(const Network<T>&, std::span<const T>, std::span<const T>, ForwardCache<T>*); \
  template T bce_loss<T>(T, int);                                                                    \
  template T sigmoid<T>(T);                                                                          \
  template BatchGradient<T> backward<T>(const Network<T>&, std::span<const LabeledPair<T>>);          \
  template T batch_loss<T>(const Network<T>&, std::span<const LabeledPair<T>>);                      \
  template void adam_step<T>(Network<T>&, AdamState<T>&, const Network<T>&, double, const TrainConfig&);

TEMPOREF_INSTANTIATE(float)
TEMPOREF_INSTANTIATE(double)

#undef TEMPOREF_INSTANTIATE

}  // namespace temporef
