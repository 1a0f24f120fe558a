#include "cforge/tape.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cforge/error.hpp"

namespace cforge::nn {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapConst = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

void check_same_tape(Value a, Value b, const char* op) {
  if (a.tape() == nullptr || b.tape() == nullptr || a.tape() != b.tape()) {
    fail(errc::contract, std::string(op) + " operands must live on the same tape");
  }
}

// Index helper for broadcasting: maps an output coordinate to the flat index
// of an operand whose dims are each either 1 or the output dim.
struct BroadcastIndex {
  std::size_t rows, cols;
  std::size_t operator()(std::size_t i, std::size_t j) const {
    return (rows == 1 ? 0 : i) * cols + (cols == 1 ? 0 : j);
  }
};

void broadcast_shape(const Tensor& a, const Tensor& b, const char* op,
                     std::size_t& rows, std::size_t& cols) {
  rows = std::max(a.rows(), b.rows());
  cols = std::max(a.cols(), b.cols());
  auto compatible = [](std::size_t d, std::size_t out) { return d == 1 || d == out; };
  if (!compatible(a.rows(), rows) || !compatible(a.cols(), cols) ||
      !compatible(b.rows(), rows) || !compatible(b.cols(), cols)) {
    fail(errc::shape, std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                          b.shape_str());
  }
}

}  // namespace

const Tensor& Value::tensor() const {
  if (tape_ == nullptr) fail(errc::contract, "use of an empty Value handle");
  return tape_->node(id_).value;
}

Value Tape::push(Node node) {
  if (!node.value.all_finite()) {
    fail(errc::numeric, "non-finite result in tape operation");
  }
  nodes_.push_back(std::move(node));
  return Value(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Value Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.needs_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

// Access shim so the free op functions can reach Tape internals.
struct OpsAccess {
  static Value make(Tape* tape, Tape::Op op, Value a, Value b, double c0, double c1,
                    Tensor value, Tensor aux = {}) {
    Tape::Node n;
    n.op = op;
    n.a = a.id();
    n.b = b.valid() ? b.id() : a.id();
    n.needs_grad = tape->node(a.id()).needs_grad ||
                   (b.valid() && tape->node(b.id()).needs_grad);
    n.c0 = c0;
    n.c1 = c1;
    n.value = std::move(value);
    n.aux = std::move(aux);
    return tape->push(std::move(n));
  }
  static const Tensor& val(Value v) { return v.tape()->node(v.id()).value; }
};

namespace {

Value binary_elementwise(Tape::Op op, Value a, Value b, const char* name) {
  check_same_tape(a, b, name);
  const Tensor& ta = OpsAccess::val(a);
  const Tensor& tb = OpsAccess::val(b);
  std::size_t rows = 0, cols = 0;
  broadcast_shape(ta, tb, name, rows, cols);
  BroadcastIndex ia{ta.rows(), ta.cols()};
  BroadcastIndex ib{tb.rows(), tb.cols()};
  Tensor out(rows, cols);
  const double* pa = ta.data();
  const double* pb = tb.data();
  double* po = out.data();
  if (op == Tape::Op::add) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) po[i * cols + j] = pa[ia(i, j)] + pb[ib(i, j)];
  } else {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) po[i * cols + j] = pa[ia(i, j)] * pb[ib(i, j)];
  }
  return OpsAccess::make(a.tape(), op, a, b, 0, 0, std::move(out));
}

}  // namespace

Value add(Value a, Value b) { return binary_elementwise(Tape::Op::add, a, b, "add"); }
Value mul(Value a, Value b) { return binary_elementwise(Tape::Op::mul, a, b, "mul"); }

Value matmul(Value a, Value b) {
  check_same_tape(a, b, "matmul");
  const Tensor& ta = OpsAccess::val(a);
  const Tensor& tb = OpsAccess::val(b);
  if (ta.cols() != tb.rows()) {
    fail(errc::shape, "matmul: incompatible shapes " + ta.shape_str() + " and " + tb.shape_str());
  }
  Tensor out(ta.rows(), tb.cols());
  MapConst ma(ta.data(), static_cast<Eigen::Index>(ta.rows()), static_cast<Eigen::Index>(ta.cols()));
  MapConst mb(tb.data(), static_cast<Eigen::Index>(tb.rows()), static_cast<Eigen::Index>(tb.cols()));
  Map mo(out.data(), static_cast<Eigen::Index>(out.rows()), static_cast<Eigen::Index>(out.cols()));
  mo.noalias() = ma * mb;
  return OpsAccess::make(a.tape(), Tape::Op::matmul, a, b, 0, 0, std::move(out));
}

Value transpose(Value a) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(ta.cols(), ta.rows());
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(j, i) = ta.at(i, j);
  return OpsAccess::make(a.tape(), Tape::Op::transpose, a, Value(), 0, 0, std::move(out));
}

Value scale(Value a, double c) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out = ta;
  for (auto& x : out.vec()) x *= c;
  return OpsAccess::make(a.tape(), Tape::Op::scale, a, Value(), c, 0, std::move(out));
}

Value add_scalar(Value a, double c) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out = ta;
  for (auto& x : out.vec()) x += c;
  return OpsAccess::make(a.tape(), Tape::Op::add_scalar, a, Value(), c, 0, std::move(out));
}

Value pow_scalar(Value a, double p) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out = ta;
  for (auto& x : out.vec()) x = std::pow(x, p);
  return OpsAccess::make(a.tape(), Tape::Op::pow_scalar, a, Value(), p, 0, std::move(out));
}

Value sum_all(Value a) {
  const Tensor& ta = OpsAccess::val(a);
  double s = 0;
  for (double x : ta.vec()) s += x;
  return OpsAccess::make(a.tape(), Tape::Op::sum_all, a, Value(), 0, 0, Tensor::scalar(s));
}

Value sum_rows(Value a) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(1, ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(0, j) += ta.at(i, j);
  return OpsAccess::make(a.tape(), Tape::Op::sum_rows, a, Value(), 0, 0, std::move(out));
}

Value sum_cols(Value a) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < ta.cols(); ++j) s += ta.at(i, j);
    out.at(i, 0) = s;
  }
  return OpsAccess::make(a.tape(), Tape::Op::sum_cols, a, Value(), 0, 0, std::move(out));
}

namespace {

Value expand(Value a, std::size_t rows, std::size_t cols) {
  double v = OpsAccess::val(a).item();
  return OpsAccess::make(a.tape(), Tape::Op::expand, a, Value(), static_cast<double>(rows),
                         static_cast<double>(cols), Tensor::full(rows, cols, v));
}

Value tile_rows(Value a, std::size_t n) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(n, ta.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, j) = ta.at(0, j);
  return OpsAccess::make(a.tape(), Tape::Op::tile_rows, a, Value(), static_cast<double>(n), 0,
                         std::move(out));
}

Value tile_cols(Value a, std::size_t n) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(ta.rows(), n);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = ta.at(i, 0);
  return OpsAccess::make(a.tape(), Tape::Op::tile_cols, a, Value(), static_cast<double>(n), 0,
                         std::move(out));
}

Value pad_cols(Value a, std::size_t offset, std::size_t total) {
  const Tensor& ta = OpsAccess::val(a);
  Tensor out(ta.rows(), total);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, offset + j) = ta.at(i, j);
  return OpsAccess::make(a.tape(), Tape::Op::pad_cols, a, Value(), static_cast<double>(offset),
                         static_cast<double>(total), std::move(out));
}

}  // namespace

Value concat_cols(Value a, Value b) {
  check_same_tape(a, b, "concat");
  const Tensor& ta = OpsAccess::val(a);
  const Tensor& tb = OpsAccess::val(b);
  if (ta.rows() != tb.rows()) {
    fail(errc::shape, "concat: incompatible shapes " + ta.shape_str() + " and " + tb.shape_str());
  }
  Tensor out(ta.rows(), ta.cols() + tb.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, j) = ta.at(i, j);
    for (std::size_t j = 0; j < tb.cols(); ++j) out.at(i, ta.cols() + j) = tb.at(i, j);
  }
  return OpsAccess::make(a.tape(), Tape::Op::concat_cols, a, b, 0, 0, std::move(out));
}

Value slice_cols(Value a, std::size_t c0, std::size_t c1) {
  const Tensor& ta = OpsAccess::val(a);
  if (c0 >= c1 || c1 > ta.cols()) {
    fail(errc::shape, "slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                          ") invalid for shape " + ta.shape_str());
  }
  Tensor out(ta.rows(), c1 - c0);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = ta.at(i, j);
  return OpsAccess::make(a.tape(), Tape::Op::slice_cols, a, Value(), static_cast<double>(c0),
                         static_cast<double>(c1), std::move(out));
}

Value mask_scale(Value a, Tensor mask) {
  const Tensor& ta = OpsAccess::val(a);
  if (!ta.same_shape(mask)) {
    fail(errc::shape, "mask_scale: incompatible shapes " + ta.shape_str() + " and " +
                          mask.shape_str());
  }
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] = ta.vec()[i] * mask.vec()[i];
  return OpsAccess::make(a.tape(), Tape::Op::mask_scale, a, Value(), 0, 0, std::move(out),
                         std::move(mask));
}

Value neg(Value a) { return scale(a, -1.0); }

Value sub(Value a, Value b) { return add(a, neg(b)); }

Value mean_all(Value a) {
  const Tensor& ta = OpsAccess::val(a);
  return scale(sum_all(a), 1.0 / static_cast<double>(ta.size()));
}

Value square(Value a) { return mul(a, a); }

Value affine(Value x, Value weight, Value bias) { return add(matmul(x, weight), bias); }

Value relu(Value x) {
  const Tensor& t = OpsAccess::val(x);
  Tensor mask(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) mask.vec()[i] = t.vec()[i] > 0 ? 1.0 : 0.0;
  return mask_scale(x, std::move(mask));
}

Value leaky_relu(Value x, double alpha) {
  const Tensor& t = OpsAccess::val(x);
  Tensor mask(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) mask.vec()[i] = t.vec()[i] > 0 ? 1.0 : alpha;
  return mask_scale(x, std::move(mask));
}

Value concat(Value a, Value b) { return concat_cols(a, b); }

Value reduce_mean(Value x) { return mean_all(x); }

Value norm2_rows(Value x) { return pow_scalar(sum_cols(square(x)), 0.5); }

// ---- backward -------------------------------------------------------------

Value Tape::accumulate(Value into, Value contribution) {
  if (!into.valid()) return contribution;
  return add(into, contribution);
}

Value Tape::reduce_to(Value grad, std::size_t rows, std::size_t cols) {
  const Tensor& g = node(grad.id()).value;
  if (g.rows() == rows && g.cols() == cols) return grad;
  if (rows == 1 && cols == 1) return sum_all(grad);
  if (rows == 1) return sum_rows(grad);
  if (cols == 1) return sum_cols(grad);
  fail(errc::shape, "cannot reduce gradient " + g.shape_str() + " to " + std::to_string(rows) +
                        "x" + std::to_string(cols));
}

// Appends the vector-Jacobian product of node `id` to its parents' adjoints.
// Every rule below is written in terms of the primitive ops, so the adjoint
// graph is itself differentiable.
void Tape::add_parent_grads(std::uint32_t id, Value grad, std::vector<std::int64_t>& adjoint) {
  const Node& n = nodes_[id];
  // Gradient branches for parents that do not reach a grad leaf are never
  // built; this is what detaches constant data and frozen networks for free.
  auto wants = [&](std::uint32_t parent) { return nodes_[parent].needs_grad; };
  auto put = [&](std::uint32_t parent, Value g) {
    Value prev = adjoint[parent] >= 0 ? handle(static_cast<std::uint32_t>(adjoint[parent])) : Value();
    adjoint[parent] = accumulate(prev, g).id();
  };
  Value pa = handle(n.a);
  Value pb = handle(n.b);
  const Tensor& va = nodes_[n.a].value;
  const Tensor& vb = nodes_[n.b].value;

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::add:
      if (wants(n.a)) put(n.a, reduce_to(grad, va.rows(), va.cols()));
      if (wants(n.b)) put(n.b, reduce_to(grad, vb.rows(), vb.cols()));
      break;
    case Op::mul:
      if (wants(n.a)) put(n.a, reduce_to(mul(grad, pb), va.rows(), va.cols()));
      if (wants(n.b)) put(n.b, reduce_to(mul(grad, pa), vb.rows(), vb.cols()));
      break;
    case Op::matmul:
      if (wants(n.a)) put(n.a, matmul(grad, transpose(pb)));
      if (wants(n.b)) put(n.b, matmul(transpose(pa), grad));
      break;
    case Op::transpose:
      if (wants(n.a)) put(n.a, transpose(grad));
      break;
    case Op::scale:
      if (wants(n.a)) put(n.a, scale(grad, n.c0));
      break;
    case Op::add_scalar:
      if (wants(n.a)) put(n.a, grad);
      break;
    case Op::pow_scalar:
      // d(a^p) = p * a^(p-1) da
      if (wants(n.a)) put(n.a, mul(grad, scale(pow_scalar(pa, n.c0 - 1.0), n.c0)));
      break;
    case Op::sum_all:
      if (wants(n.a)) put(n.a, expand(grad, va.rows(), va.cols()));
      break;
    case Op::sum_rows:
      if (wants(n.a)) put(n.a, tile_rows(grad, va.rows()));
      break;
    case Op::sum_cols:
      if (wants(n.a)) put(n.a, tile_cols(grad, va.cols()));
      break;
    case Op::expand:
      if (wants(n.a)) put(n.a, sum_all(grad));
      break;
    case Op::tile_rows:
      if (wants(n.a)) put(n.a, sum_rows(grad));
      break;
    case Op::tile_cols:
      if (wants(n.a)) put(n.a, sum_cols(grad));
      break;
    case Op::concat_cols:
      if (wants(n.a)) put(n.a, slice_cols(grad, 0, va.cols()));
      if (wants(n.b)) put(n.b, slice_cols(grad, va.cols(), va.cols() + vb.cols()));
      break;
    case Op::slice_cols:
      if (wants(n.a)) put(n.a, pad_cols(grad, static_cast<std::size_t>(n.c0), va.cols()));
      break;
    case Op::pad_cols:
      if (wants(n.a))
        put(n.a, slice_cols(grad, static_cast<std::size_t>(n.c0),
                            static_cast<std::size_t>(n.c0) + va.cols()));
      break;
    case Op::mask_scale:
      if (wants(n.a)) put(n.a, mask_scale(grad, n.aux));
      break;
  }
}

std::vector<Value> Tape::backward_graph(Value output, std::span<const Value> wrt) {
  if (output.tape() != this) fail(errc::contract, "backward: output is not on this tape");
  const Tensor& out_val = node(output.id()).value;
  if (out_val.rows() != 1 || out_val.cols() != 1) {
    fail(errc::contract, "backward: output must be a scalar, got " + out_val.shape_str());
  }
  for (const Value& v : wrt) {
    if (v.tape() != this) fail(errc::contract, "backward: wrt value is not on this tape");
  }

  // adjoint[i] holds the node id of dOutput/dNode_i, -1 when absent.
  std::vector<std::int64_t> adjoint(nodes_.size(), -1);
  if (node(output.id()).needs_grad) {
    adjoint[output.id()] = constant_scalar(1.0).id();
    // Sweep the frozen range [0, output] in reverse creation order. Nodes the
    // sweep itself appends belong to the gradient graph and are not revisited.
    for (std::uint32_t id = output.id() + 1; id-- > 0;) {
      if (adjoint[id] < 0 || !nodes_[id].needs_grad) continue;
      add_parent_grads(id, handle(static_cast<std::uint32_t>(adjoint[id])), adjoint);
    }
  }

  std::vector<Value> grads;
  grads.reserve(wrt.size());
  for (const Value& v : wrt) {
    if (adjoint[v.id()] >= 0) {
      grads.push_back(handle(static_cast<std::uint32_t>(adjoint[v.id()])));
    } else {
      const Tensor& shape = node(v.id()).value;
      grads.push_back(constant(Tensor(shape.rows(), shape.cols())));
    }
  }
  return grads;
}

std::vector<Tensor> Tape::backward(Value output, std::span<const Value> wrt) {
  std::vector<Value> graph = backward_graph(output, wrt);
  std::vector<Tensor> out;
  out.reserve(graph.size());
  for (const Value& g : graph) out.push_back(g.tensor());
  return out;
}

}  // namespace cforge::nn
