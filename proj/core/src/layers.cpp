#include "cforge/layers.hpp"

#include <cmath>

#include "cforge/error.hpp"

namespace cforge::nn {

void MlpConfig::validate() const {
  if (hidden_widths.empty()) fail(errc::config, "mlp needs at least one hidden layer");
  for (int w : hidden_widths) {
    if (w <= 0) fail(errc::config, "mlp hidden widths must be positive");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    fail(errc::config, "dropout rate must be in [0, 1)");
  }
  if (bn_epsilon <= 0.0) fail(errc::config, "batch-norm epsilon must be positive");
  if (bn_momentum < 0.0 || bn_momentum >= 1.0) {
    fail(errc::config, "batch-norm momentum must be in [0, 1)");
  }
}

Value batch_norm(Value x, Value gamma, Value beta, Mode mode, double epsilon,
                 double momentum, Tensor* running_mean, Tensor* running_var) {
  const std::size_t n = x.rows();
  if (mode == Mode::train) {
    Value mean = scale(sum_rows(x), 1.0 / static_cast<double>(n));
    Value centered = sub(x, mean);
    Value var = scale(sum_rows(square(centered)), 1.0 / static_cast<double>(n));
    Value inv_std = pow_scalar(add_scalar(var, epsilon), -0.5);
    Value normalized = mul(centered, inv_std);
    if (running_mean != nullptr && running_var != nullptr) {
      const Tensor& m = mean.tensor();
      const Tensor& v = var.tensor();
      for (std::size_t j = 0; j < m.cols(); ++j) {
        running_mean->at(0, j) = momentum * running_mean->at(0, j) + (1.0 - momentum) * m.at(0, j);
        running_var->at(0, j) = momentum * running_var->at(0, j) + (1.0 - momentum) * v.at(0, j);
      }
    }
    return add(mul(normalized, gamma), beta);
  }
  if (running_mean == nullptr || running_var == nullptr) {
    fail(errc::contract, "batch_norm eval mode needs running statistics");
  }
  Tape& tape = *x.tape();
  Value mean = tape.constant(*running_mean);
  Value inv_std_const = [&] {
    Tensor inv(1, running_var->cols());
    for (std::size_t j = 0; j < inv.cols(); ++j) {
      inv.at(0, j) = 1.0 / std::sqrt(running_var->at(0, j) + epsilon);
    }
    return tape.constant(std::move(inv));
  }();
  Value normalized = mul(sub(x, mean), inv_std_const);
  return add(mul(normalized, gamma), beta);
}

Value dropout(Value x, double p, Mode mode, Rng& rng) {
  if (p < 0.0 || p >= 1.0) fail(errc::config, "dropout rate must be in [0, 1)");
  if (mode == Mode::eval || p == 0.0) return x;
  Tensor mask(x.rows(), x.cols());
  const double keep = 1.0 - p;
  for (auto& m : mask.vec()) m = rng.uniform() < p ? 0.0 : 1.0 / keep;
  return mask_scale(x, std::move(mask));
}

Mlp::Mlp(int in_dim, int out_dim, MlpConfig config)
    : in_dim_(in_dim), out_dim_(out_dim), config_(std::move(config)) {
  if (in_dim <= 0 || out_dim <= 0) fail(errc::config, "mlp dimensions must be positive");
  config_.validate();
  int prev = in_dim_;
  for (int w : config_.hidden_widths) {
    DenseLayer layer;
    layer.weight = Tensor(static_cast<std::size_t>(prev), static_cast<std::size_t>(w));
    layer.bias = Tensor(1, static_cast<std::size_t>(w));
    layer.has_bn = config_.batch_norm;
    if (layer.has_bn) {
      layer.bn_gamma = Tensor::full(1, static_cast<std::size_t>(w), 1.0);
      layer.bn_beta = Tensor(1, static_cast<std::size_t>(w));
      layer.bn_run_mean = Tensor(1, static_cast<std::size_t>(w));
      layer.bn_run_var = Tensor::full(1, static_cast<std::size_t>(w), 1.0);
    }
    layers_.push_back(std::move(layer));
    prev = w;
  }
  DenseLayer out;
  out.weight = Tensor(static_cast<std::size_t>(prev), static_cast<std::size_t>(out_dim_));
  out.bias = Tensor(1, static_cast<std::size_t>(out_dim_));
  layers_.push_back(std::move(out));
}

void Mlp::init_params(Rng& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    for (auto& w : layer.weight.vec()) w = rng.uniform(-bound, bound);
    for (auto& b : layer.bias.vec()) b = 0.0;
    if (layer.has_bn) {
      for (auto& g : layer.bn_gamma.vec()) g = 1.0;
      for (auto& b : layer.bn_beta.vec()) b = 0.0;
      for (auto& m : layer.bn_run_mean.vec()) m = 0.0;
      for (auto& v : layer.bn_run_var.vec()) v = 1.0;
    }
  }
}

Mlp::Binding Mlp::bind(Tape& tape, bool trainable) const {
  Binding binding;
  for (const auto& layer : layers_) {
    binding.params.push_back(tape.leaf(layer.weight, trainable));
    binding.params.push_back(tape.leaf(layer.bias, trainable));
    if (layer.has_bn) {
      binding.params.push_back(tape.leaf(layer.bn_gamma, trainable));
      binding.params.push_back(tape.leaf(layer.bn_beta, trainable));
    }
  }
  return binding;
}

Value Mlp::forward(Tape& tape, const Binding& binding, Value x, Mode mode, Rng* rng,
                   bool stochastic) {
  if (x.cols() != static_cast<std::size_t>(in_dim_)) {
    fail(errc::shape, "mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                          std::to_string(in_dim_));
  }
  std::size_t p = 0;
  Value h = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto& layer = layers_[li];
    const bool is_output = li + 1 == layers_.size();
    Value w = binding.params[p++];
    Value b = binding.params[p++];
    h = affine(h, w, b);
    if (is_output) break;
    if (layer.has_bn) {
      Value gamma = binding.params[p++];
      Value beta = binding.params[p++];
      const Mode bn_mode = (mode == Mode::train && stochastic) ? Mode::train : Mode::eval;
      h = batch_norm(h, gamma, beta, bn_mode, config_.bn_epsilon, config_.bn_momentum,
                     &layer.bn_run_mean, &layer.bn_run_var);
    }
    h = config_.activation == ActivationKind::relu ? relu(h)
                                                   : leaky_relu(h, config_.leaky_alpha);
    if (config_.dropout_rate > 0.0 && mode == Mode::train && stochastic) {
      if (rng == nullptr) fail(errc::contract, "dropout in train mode needs an rng");
      h = dropout(h, config_.dropout_rate, mode, *rng);
    }
  }
  return h;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
    if (layer.has_bn) {
      out.push_back(&layer.bn_gamma);
      out.push_back(&layer.bn_beta);
    }
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
    if (layer.has_bn) {
      out.push_back(&layer.bn_gamma);
      out.push_back(&layer.bn_beta);
    }
  }
  return out;
}

std::vector<std::uint8_t> Mlp::decay_mask() const {
  std::vector<std::uint8_t> mask;
  for (const auto& layer : layers_) {
    mask.push_back(1);
    mask.push_back(0);
    if (layer.has_bn) {
      mask.push_back(0);
      mask.push_back(0);
    }
  }
  return mask;
}

}  // namespace cforge::nn
