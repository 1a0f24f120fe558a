#pragma once

#include <vector>

#include "cforge/rng.hpp"
#include "cforge/tape.hpp"

namespace cforge::nn {

enum class Mode { train, eval };

enum class ActivationKind { relu, leaky_relu };

struct MlpConfig {
  std::vector<int> hidden_widths{128, 64, 32};
  ActivationKind activation = ActivationKind::relu;
  double leaky_alpha = 0.2;
  bool batch_norm = false;
  double dropout_rate = 0.0;
  double bn_epsilon = 1e-8;
  double bn_momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

  void validate() const;
};

// Batch normalization over the batch dimension, one (gamma, beta) pair per
// feature. Train mode normalizes with batch statistics (population variance)
// and folds them into the running estimates; eval mode uses the running
// estimates only.
Value batch_norm(Value x, Value gamma, Value beta, Mode mode, double epsilon,
                 double momentum, Tensor* running_mean, Tensor* running_var);

// Inverted dropout: train mode zeroes units with probability p and rescales
// survivors by 1/(1-p); eval mode is the identity. p = 0 returns x unchanged.
Value dropout(Value x, double p, Mode mode, Rng& rng);

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
  bool has_bn = false;
  Tensor bn_gamma, bn_beta;          // 1 x out
  Tensor bn_run_mean, bn_run_var;    // 1 x out, eval-mode statistics
};

// Fully connected stack: hidden layers (affine -> [batch norm] -> activation
// -> [dropout]) followed by a plain affine output layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in_dim, int out_dim, MlpConfig config);

  // Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases
  // zero, batch-norm gamma 1 / beta 0, running stats (0, 1).
  void init_params(Rng& rng);

  struct Binding {
    std::vector<Value> params;  // same order as parameters()
  };
  Binding bind(Tape& tape, bool trainable) const;

  // `stochastic` = false evaluates the network deterministically even in train
  // mode: dropout is skipped and batch norm reads running statistics without
  // updating them. The gradient-penalty term uses this path.
  Value forward(Tape& tape, const Binding& binding, Value x, Mode mode, Rng* rng,
                bool stochastic = true);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  // 1 for weight matrices, 0 for biases and batch-norm parameters; aligns with
  // parameters(). Weight decay applies only where the mask is set.
  std::vector<std::uint8_t> decay_mask() const;

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const MlpConfig& config() const { return config_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  MlpConfig config_;
  std::vector<DenseLayer> layers_;  // hidden layers then output layer
};

}  // namespace cforge::nn
