#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

inline void validate(const AdamConfig& c) {
  if (!(c.learning_rate > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) ||
      !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.epsilon > 0.0)) {
    throw ParameterError("adam: need lr > 0, beta1/beta2 in [0, 1), epsilon > 0");
  }
}

// One bias-corrected Adam update of `params` in place.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.push_back(Tensor::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Tensor::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks a different parameter count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_shape(grads[k], params[k]->rows(), params[k]->cols(), "adam_step gradient");
    require_shape(state.first_moment[k], params[k]->rows(), params[k]->cols(), "adam_step moment");
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    m = c.beta1 * m + (1.0 - c.beta1) * grads[k];
    v = c.beta2 * v + (1.0 - c.beta2) * grads[k].cwiseAbs2();
    params[k]->array() -=
        c.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
  }
}

}  // namespace acgan
