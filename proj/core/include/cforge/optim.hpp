#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cforge/tensor.hpp"

namespace cforge::nn {

struct AdamConfig {
  double eta = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled, see adam_step
};

struct AdamState {
  std::int64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

void adam_init(AdamState& state, std::span<const Tensor* const> params);

// Bias-corrected Adam with decoupled weight decay:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   theta <- theta - eta * m_hat / (sqrt(v_hat) + eps) - eta * wd * theta
// Decay applies only where decay_mask is set (empty mask = decay everywhere).
// Non-finite gradients raise a numeric error.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config, std::span<const std::uint8_t> decay_mask = {});

}  // namespace cforge::nn
