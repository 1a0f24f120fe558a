#include "cforge/optim.hpp"

#include <cmath>

#include "cforge/error.hpp"

namespace cforge::nn {

void adam_init(AdamState& state, std::span<const Tensor* const> params) {
  state.step_count = 0;
  state.first_moment.clear();
  state.second_moment.clear();
  for (const Tensor* p : params) {
    state.first_moment.emplace_back(p->rows(), p->cols());
    state.second_moment.emplace_back(p->rows(), p->cols());
  }
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config, std::span<const std::uint8_t> decay_mask) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    fail(errc::contract, "adam_step: parameters, gradients and state are misaligned");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k])) {
      fail(errc::shape, "adam_step: gradient shape " + grads[k].shape_str() +
                            " does not match parameter " + params[k]->shape_str());
    }
    if (!grads[k].all_finite()) fail(errc::numeric, "adam_step: non-finite gradient");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    const bool decay = config.weight_decay > 0.0 && (decay_mask.empty() || decay_mask[k] != 0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.vec()[i];
      m.vec()[i] = config.beta1 * m.vec()[i] + (1.0 - config.beta1) * gi;
      v.vec()[i] = config.beta2 * v.vec()[i] + (1.0 - config.beta2) * gi * gi;
      const double m_hat = m.vec()[i] / bias1;
      const double v_hat = v.vec()[i] / bias2;
      double step = config.eta * m_hat / (std::sqrt(v_hat) + config.epsilon);
      if (decay) step += config.eta * config.weight_decay * theta.vec()[i];
      theta.vec()[i] -= step;
    }
  }
}

}  // namespace cforge::nn
