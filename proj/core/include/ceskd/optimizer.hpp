#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "ceskd/error.hpp"
#include "ceskd/model.hpp"

namespace ceskd {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool nesterov = true;

  bool operator==(const SgdConfig&) const = default;
};

// Momentum buffers mirroring the model's parameter tensors.
template <typename S>
struct OptimizerStateT {
  SgdConfig cfg;
  GradientsT<S> momentum;

  static OptimizerStateT for_model(const ModelT<S>& m, SgdConfig cfg) {
    OptimizerStateT st;
    st.cfg = cfg;
    st.momentum.resize(m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      for (const auto& p : m.params[i]) st.momentum[i].push_back(TensorT<S>(p.shape));
    }
    return st;
  }
};

using OptimizerState = OptimizerStateT<float>;

// SGD with L2 weight decay added to the gradient before the momentum update,
// and the Nesterov look-ahead correction. Aborts before touching any
// parameter if a gradient is non-finite.
template <typename S>
void sgd_step(ModelT<S>& model, const GradientsT<S>& grads, OptimizerStateT<S>& opt, double lr) {
  if (grads.size() != model.params.size()) throw ConfigError("sgd_step: gradient layout mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != model.params[i].size()) {
      throw ConfigError("sgd_step: gradient layout mismatch at layer " + std::to_string(i));
    }
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      if (!grads[i][j].same_shape(model.params[i][j])) {
        throw ConfigError("sgd_step: gradient shape mismatch at layer " + std::to_string(i));
      }
      if (!grads[i][j].all_finite()) {
        throw NumericError("sgd_step: non-finite gradient at layer " + std::to_string(i) +
                           ", step aborted");
      }
    }
  }
  const S mu = static_cast<S>(opt.cfg.momentum);
  const S wd = static_cast<S>(opt.cfg.weight_decay);
  const S step = static_cast<S>(lr);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      TensorT<S>& p = model.params[i][j];
      TensorT<S>& buf = opt.momentum[i][j];
      const TensorT<S>& g = grads[i][j];
      for (std::size_t e = 0; e < p.numel(); ++e) {
        S grad = g.data[e] + wd * p.data[e];
        buf.data[e] = mu * buf.data[e] + grad;
        const S update = opt.cfg.nesterov ? grad + mu * buf.data[e] : buf.data[e];
        p.data[e] -= step * update;
      }
    }
  }
}

// Step decay: initial * factor^(number of milestones <= epoch).
struct LrSchedule {
  double initial = 0.1;
  std::vector<int> milestones = {30, 90, 120};
  double factor = 0.1;

  bool operator==(const LrSchedule&) const = default;

  void validate() const {
    for (std::size_t i = 1; i < milestones.size(); ++i) {
      if (milestones[i] <= milestones[i - 1]) {
        throw ConfigError("lr schedule: milestones must be strictly increasing");
      }
    }
  }
};

inline double lr_at(const LrSchedule& sched, int epoch) {
  sched.validate();
  double lr = sched.initial;
  for (int m : sched.milestones) {
    if (m <= epoch) lr *= sched.factor;
  }
  return lr;
}

}  // namespace ceskd
