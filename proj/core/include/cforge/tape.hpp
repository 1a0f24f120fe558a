#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cforge/tensor.hpp"

namespace cforge::nn {

class Tape;

// Handle to a tape node. Cheap to copy; valid for the lifetime of its tape.
class Value {
 public:
  Value() = default;

  const Tensor& tensor() const;
  double item() const { return tensor().item(); }
  std::size_t rows() const { return tensor().rows(); }
  std::size_t cols() const { return tensor().cols(); }
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  Value(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Reverse-mode tape over dense 2-D tensors.
//
// The key contract is that backward() does not compute raw numbers: it builds
// the gradient as new nodes on the same tape, expressed in the same primitive
// op set. Gradients are therefore themselves differentiable, and calling
// backward() on a scalar built from a gradient yields second-order
// derivatives. This is exactly what a gradient-penalty term needs: the norm of
// the critic's input gradient is a tape value whose own gradient with respect
// to the critic parameters is well defined.
//
// A tape is single-writer. Node handles are strictly increasing and the graph
// is acyclic by construction (ops only reference existing nodes).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value leaf(Tensor value, bool requires_grad = false);
  Value constant(Tensor value) { return leaf(std::move(value), false); }
  Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  std::size_t size() const { return nodes_.size(); }

  // Builds the gradient graph of a scalar output and returns one gradient
  // Value per requested node (zeros when the output does not depend on it).
  // The returned handles live on this tape, so further ops may be built on
  // them and differentiated again.
  std::vector<Value> backward_graph(Value output, std::span<const Value> wrt);

  // Convenience: materialized gradients.
  std::vector<Tensor> backward(Value output, std::span<const Value> wrt);

 private:
  friend class Value;
  friend struct OpsAccess;

  enum class Op : std::uint8_t {
    leaf,
    add,
    mul,
    matmul,
    transpose,
    scale,
    add_scalar,
    pow_scalar,
    sum_all,
    sum_rows,
    sum_cols,
    expand,
    tile_rows,
    tile_cols,
    concat_cols,
    slice_cols,
    pad_cols,
    mask_scale,
  };

  struct Node {
    Op op = Op::leaf;
    bool needs_grad = false;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double c0 = 0.0;  // op-specific: scale factor, exponent, offsets, tile counts
    double c1 = 0.0;
    Tensor value;
    Tensor aux;  // constant elementwise factor for mask_scale
  };

  Value push(Node node);
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  Value handle(std::uint32_t id) { return Value(this, id); }
  Value accumulate(Value into, Value contribution);
  Value reduce_to(Value grad, std::size_t rows, std::size_t cols);
  void add_parent_grads(std::uint32_t id, Value grad, std::vector<std::int64_t>& adjoint);

  std::vector<Node> nodes_;
};

// ---- primitive ops -------------------------------------------------------
// add/mul broadcast 1x1, 1xC and Rx1 operands against an RxC partner (both
// sides). Shape mismatches raise a shape error naming both shapes.
Value add(Value a, Value b);
Value mul(Value a, Value b);
Value matmul(Value a, Value b);
Value transpose(Value a);
Value scale(Value a, double c);
Value add_scalar(Value a, double c);
Value pow_scalar(Value a, double p);  // elementwise a^p; fractional p needs positive base
Value sum_all(Value a);
Value sum_rows(Value a);  // 1xC column sums
Value sum_cols(Value a);  // Rx1 row sums
Value concat_cols(Value a, Value b);
Value slice_cols(Value a, std::size_t c0, std::size_t c1);
Value mask_scale(Value a, Tensor mask);  // elementwise product with a constant

// ---- derived ops ---------------------------------------------------------
Value neg(Value a);
Value sub(Value a, Value b);
Value mean_all(Value a);
Value square(Value a);

// ---- layer-level ops (the spec'd forward set) -----------------------------
Value affine(Value x, Value weight, Value bias);
Value relu(Value x);
Value leaky_relu(Value x, double alpha);
Value concat(Value a, Value b);
Value reduce_mean(Value x);
Value norm2_rows(Value x);  // Rx1 Euclidean norm of each row

}  // namespace cforge::nn
