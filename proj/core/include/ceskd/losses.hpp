#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ceskd/error.hpp"
#include "ceskd/tensor.hpp"

namespace ceskd {

// Distillation constants: softening temperature and the KD/CE mixing weight.
struct KDHyperparams {
  double temperature = 10.0;
  double alpha = 0.9;

  bool operator==(const KDHyperparams&) const = default;

  void validate() const {
    if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must lie in [0, 1]");
  }
};

template <typename S>
struct LossValueT {
  double scalar = 0.0;
  TensorT<S> grad;  // w.r.t. the student logits (or the prediction argument)
};

using LossValue = LossValueT<float>;

inline constexpr double kLogClamp = 1e-12;

// Row-wise softmax of z / T with max subtraction.
template <typename S>
TensorT<S> tempered_softmax(const TensorT<S>& z, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("tempered_softmax: temperature must be > 0");
  if (z.ndim() != 2) throw ConfigError("tempered_softmax: expects [batch, classes] logits");
  const std::size_t n = z.dim(0), k = z.dim(1);
  TensorT<S> p(z.shape);
  for (std::size_t r = 0; r < n; ++r) {
    double zmax = -1e300;
    for (std::size_t c = 0; c < k; ++c) zmax = std::max(zmax, static_cast<double>(z.at2(r, c)) / temperature);
    double denom = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      denom += std::exp(static_cast<double>(z.at2(r, c)) / temperature - zmax);
    }
    for (std::size_t c = 0; c < k; ++c) {
      p.at2(r, c) = static_cast<S>(std::exp(static_cast<double>(z.at2(r, c)) / temperature - zmax) / denom);
    }
  }
  return p;
}

// Mean over the batch of -sum target * log(pred), log clamped at 1e-12.
// The gradient field is taken w.r.t. the prediction probabilities.
template <typename S>
LossValueT<S> cross_entropy_soft(const TensorT<S>& target, const TensorT<S>& pred) {
  if (!target.same_shape(pred) || target.ndim() != 2) {
    throw ConfigError("cross_entropy_soft: target/pred must be equal [batch, classes] tensors");
  }
  const std::size_t n = target.dim(0), k = target.dim(1);
  LossValueT<S> out;
  out.grad = TensorT<S>(pred.shape);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double t = target.at2(r, c);
      const double p = std::max(static_cast<double>(pred.at2(r, c)), kLogClamp);
      total -= t * std::log(p);
      out.grad.at2(r, c) = static_cast<S>(-t / p / static_cast<double>(n));
    }
  }
  out.scalar = total / static_cast<double>(n);
  return out;
}

// Hard-label cross entropy evaluated from logits at T=1; gradient w.r.t. the
// logits is (softmax(z) - onehot) / batch.
template <typename S>
LossValueT<S> cross_entropy_with_logits(const TensorT<S>& z, const TensorT<S>& onehot) {
  if (!z.same_shape(onehot) || z.ndim() != 2) {
    throw ConfigError("cross_entropy_with_logits: logits/labels must be equal [batch, classes] tensors");
  }
  const TensorT<S> p = tempered_softmax(z, 1.0);
  LossValueT<S> ce = cross_entropy_soft(onehot, p);
  LossValueT<S> out;
  out.scalar = ce.scalar;
  out.grad = TensorT<S>(z.shape);
  const std::size_t n = z.dim(0);
  for (std::size_t j = 0; j < z.numel(); ++j) {
    out.grad.data[j] = static_cast<S>((static_cast<double>(p.data[j]) -
                                       static_cast<double>(onehot.data[j])) /
                                      static_cast<double>(n));
  }
  return out;
}

// Per-mini-batch distillation term: cross entropy between the selected
// expert's tempered distribution (target) and the student's (prediction).
// Expert logits are constants; the gradient flows into z_s only.
template <typename S>
LossValueT<S> kd_select_loss(const TensorT<S>& z_s, const TensorT<S>& z_l, double temperature) {
  if (!z_s.same_shape(z_l)) throw ConfigError("kd_select_loss: logit shapes differ");
  const TensorT<S> p_s = tempered_softmax(z_s, temperature);
  const TensorT<S> p_l = tempered_softmax(z_l, temperature);
  LossValueT<S> out;
  out.scalar = cross_entropy_soft(p_l, p_s).scalar;
  out.grad = TensorT<S>(z_s.shape);
  const std::size_t n = z_s.dim(0);
  for (std::size_t j = 0; j < z_s.numel(); ++j) {
    out.grad.data[j] = static_cast<S>((static_cast<double>(p_s.data[j]) -
                                       static_cast<double>(p_l.data[j])) /
                                      (temperature * static_cast<double>(n)));
  }
  return out;
}

// Total loss: alpha * T^2 * KD + (1 - alpha) * CE(labels, softmax(z_s)).
// The T^2 factor applies to the KD term only; the hard-label term runs at T=1.
template <typename S>
LossValueT<S> ceskd_total_loss(const TensorT<S>& z_s, const TensorT<S>& z_expert,
                               const TensorT<S>& onehot, const KDHyperparams& hp) {
  hp.validate();
  const LossValueT<S> kd = kd_select_loss(z_s, z_expert, hp.temperature);
  const LossValueT<S> ce = cross_entropy_with_logits(z_s, onehot);
  const double t2 = hp.temperature * hp.temperature;
  LossValueT<S> out;
  out.scalar = hp.alpha * t2 * kd.scalar + (1.0 - hp.alpha) * ce.scalar;
  out.grad = TensorT<S>(z_s.shape);
  for (std::size_t j = 0; j < z_s.numel(); ++j) {
    out.grad.data[j] = static_cast<S>(hp.alpha * t2 * static_cast<double>(kd.grad.data[j]) +
                                      (1.0 - hp.alpha) * static_cast<double>(ce.grad.data[j]));
  }
  return out;
}

// Dense-guidance baseline: the KD term is the unweighted mean over all
// ancestor experts, combined with the hard-label term as in the total loss.
template <typename S>
LossValueT<S> ensemble_kd_loss(const TensorT<S>& z_s, const std::vector<TensorT<S>>& ancestors,
                               const TensorT<S>& onehot, const KDHyperparams& hp) {
  hp.validate();
  if (ancestors.empty()) throw ConfigError("ensemble_kd_loss: at least one ancestor required");
  double kd_scalar = 0.0;
  TensorT<double> kd_grad(std::vector<std::size_t>(z_s.shape));
  for (const TensorT<S>& z_a : ancestors) {
    const LossValueT<S> kd = kd_select_loss(z_s, z_a, hp.temperature);
    kd_scalar += kd.scalar;
    for (std::size_t j = 0; j < z_s.numel(); ++j) kd_grad.data[j] += static_cast<double>(kd.grad.data[j]);
  }
  const double inv = 1.0 / static_cast<double>(ancestors.size());
  const LossValueT<S> ce = cross_entropy_with_logits(z_s, onehot);
  const double t2 = hp.temperature * hp.temperature;
  LossValueT<S> out;
  out.scalar = hp.alpha * t2 * kd_scalar * inv + (1.0 - hp.alpha) * ce.scalar;
  out.grad = TensorT<S>(z_s.shape);
  for (std::size_t j = 0; j < z_s.numel(); ++j) {
    out.grad.data[j] = static_cast<S>(hp.alpha * t2 * kd_grad.data[j] * inv +
                                      (1.0 - hp.alpha) * static_cast<double>(ce.grad.data[j]));
  }
  return out;
}

// One-hot encoding of integer labels.
template <typename S>
TensorT<S> one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  TensorT<S> out({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DataError("one_hot: label out of range");
    }
    out.at2(i, static_cast<std::size_t>(labels[i])) = S(1);
  }
  return out;
}

}  // namespace ceskd
