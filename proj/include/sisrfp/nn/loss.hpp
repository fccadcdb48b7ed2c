#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sisrfp/nn/tensor.hpp"

namespace sisrfp::nn {

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // dL/d(input)
};

// Row-wise softmax of [N, K] logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p(logits.shape());
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.data().data() + i * k;
    T* out = p.data().data() + i * k;
    T mx = z[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(double(z[j] - mx));
    for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<T>(std::exp(double(z[j] - mx)) / s);
  }
  return p;
}

// Mean cross-entropy of softmax(logits) against integer labels.
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) fail("shape-error", "label count does not match batch");
  LossResult<T> r{0.0, Tensor<T>(logits.shape())};
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.data().data() + i * k;
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= k) fail("bad-label", std::to_string(labels[i]));
    double mx = z[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, double(z[j]));
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(double(z[j]) - mx);
    const double lse = mx + std::log(s);
    r.loss += lse - double(z[y]);
    T* g = r.grad.data().data() + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = static_cast<T>((std::exp(double(z[j]) - lse) - (j == y ? 1.0 : 0.0)) / double(n));
    }
  }
  r.loss /= double(n);
  return r;
}

template <typename T>
LossResult<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  LossResult<T> r{0.0, Tensor<T>(pred.shape())};
  const double inv = 1.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    r.loss += std::abs(d);
    r.grad[i] = static_cast<T>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
  }
  r.loss *= inv;
  return r;
}

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  LossResult<T> r{0.0, Tensor<T>(pred.shape())};
  const double inv = 1.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = double(pred[i]) - double(target[i]);
    r.loss += d * d;
    r.grad[i] = static_cast<T>(2.0 * d * inv);
  }
  r.loss *= inv;
  return r;
}

// Mean binary cross-entropy of probabilities against a constant target in {0, 1}.
// Probabilities are clamped away from 0 and 1 for stability.
template <typename T>
LossResult<T> bce_loss(const Tensor<T>& prob, double target) {
  LossResult<T> r{0.0, Tensor<T>(prob.shape())};
  constexpr double lo = 1e-7;
  const double inv = 1.0 / double(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(double(prob[i]), lo, 1.0 - lo);
    r.loss -= target * std::log(p) + (1.0 - target) * std::log(1.0 - p);
    r.grad[i] = static_cast<T>(inv * (-(target / p) + (1.0 - target) / (1.0 - p)));
  }
  r.loss *= inv;
  return r;
}

}  // namespace sisrfp::nn
