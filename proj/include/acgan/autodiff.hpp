#pragma once

// Reverse-mode differentiation over dense matrices.
//
// Every primitive has its backward rule written once, generically over an
// "ops" policy: the eager policy evaluates adjoints as plain matrices, the
// recording policy pushes them onto the tape as new nodes. Recording the
// backward pass makes first derivatives themselves differentiable, which is
// what the gradient penalty of a WGAN-GP critic needs.

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/random.hpp"
#include "acgan/tensor.hpp"

namespace acgan::ad {

enum class Phase : std::uint8_t { Train, Infer };

enum class Op : std::uint8_t {
  Leaf,
  MatMul,           // op(a) * op(b), op = optional transpose
  AddRowBias,       // a + 1 * b, b is 1 x cols
  MaskedScale,      // a where b >= 0, scalar * a elsewhere (b is not differentiated)
  MulConst,         // a .* constant
  Tanh,
  OneMinusSquare,   // 1 - a.^2
  Add,
  Sub,
  Mul,              // elementwise
  Scale,            // scalar * a
  AddScalar,        // a + scalar
  Square,
  Sqrt,
  Reciprocal,       // 1 / a, with 1/0 := 0
  RowSum,           // rows x 1
  ColSum,           // 1 x cols
  BroadcastCols,    // rows x 1 -> rows x p0
  BroadcastRows,    // 1 x cols -> p0 x cols
  SumAll,           // 1 x 1
  BroadcastScalar,  // 1 x 1 -> p0 x p1
  ConcatCols,
  SliceCols,        // columns [p0, p0 + p1)
  PadCols,          // a placed at column p0 of a zero matrix with p1 columns
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::AddRowBias: return "add_row_bias";
    case Op::MaskedScale: return "masked_scale";
    case Op::MulConst: return "mul_const";
    case Op::Tanh: return "tanh";
    case Op::OneMinusSquare: return "one_minus_square";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Reciprocal: return "reciprocal";
    case Op::RowSum: return "row_sum";
    case Op::ColSum: return "col_sum";
    case Op::BroadcastCols: return "broadcast_cols";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::SumAll: return "sum";
    case Op::BroadcastScalar: return "broadcast_scalar";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
  }
  return "?";
}

// Plain-matrix kernels shared by forward evaluation, tape replay and the
// eager backward pass.
namespace kernels {

inline Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  const Index inner_a = ta ? a.rows() : a.cols();
  const Index inner_b = tb ? b.cols() : b.rows();
  if (inner_a != inner_b) {
    throw DimensionError("matmul: inner dimensions differ (" + shape_string(a) + (ta ? "^T" : "") +
                         " * " + shape_string(b) + (tb ? "^T" : "") + ")");
  }
  Tensor out;
  if (!ta && !tb) out.noalias() = a * b;
  else if (ta && !tb) out.noalias() = a.transpose() * b;
  else if (!ta && tb) out.noalias() = a * b.transpose();
  else out.noalias() = a.transpose() * b.transpose();
  return out;
}

inline Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias) + " does not fit input " +
                         shape_string(x));
  }
  return x.rowwise() + bias.row(0);
}

inline Tensor masked_scale(const Tensor& a, const Tensor& ref, double slope) {
  return (ref.array() >= 0.0).select(a, slope * a.array());
}

inline void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shapes differ (" + shape_string(a) + " vs " +
                         shape_string(b) + ")");
  }
}

inline Tensor reciprocal(const Tensor& a) {
  return (a.array() != 0.0).select(a.array().inverse(), 0.0);
}

inline Tensor slice_cols(const Tensor& a, Index start, Index width) {
  if (start < 0 || width < 0 || start + width > a.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") outside " + shape_string(a));
  }
  return a.middleCols(start, width);
}

inline Tensor pad_cols(const Tensor& a, Index start, Index total) {
  if (start < 0 || start + a.cols() > total) {
    throw DimensionError("pad_cols: block does not fit");
  }
  Tensor out = Tensor::Zero(a.rows(), total);
  out.middleCols(start, a.cols()) = a;
  return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts differ (" + shape_string(a) + " vs " +
                         shape_string(b) + ")");
  }
  Tensor out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Inverted dropout mask: 0 with probability rate, 1/(1-rate) otherwise.
// Drawn sample by sample so each row's mask depends only on its own draws.
inline Tensor dropout_mask(Index rows, Index cols, double rate, CounterRng& rng) {
  Tensor mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
  }
  return mask;
}

}  // namespace kernels

struct Node {
  Op op = Op::Leaf;
  int a = -1;
  int b = -1;
  double scalar = 0.0;
  bool trans_a = false;
  bool trans_b = false;
  Index p0 = 0;
  Index p1 = 0;
  Tensor constant;
  Tensor value;
  bool requires_grad = false;
};

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

namespace detail {
template <class Ops>
void propagate(Ops& ops, int id);
struct EagerOps;
struct RecordingOps;
}  // namespace detail

class Tape {
 public:
  Tape() { nodes_.reserve(512); }

  // Tapes hand out raw back-pointers through Var.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var variable(Tensor value) { return leaf(std::move(value), true); }

  const Tensor& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  Var record(Node n) {
    n.value = evaluate(n);
    if (!n.value.allFinite()) {
      throw NumericError(std::string("non-finite value produced by ") + op_name(n.op));
    }
    n.requires_grad = (n.a >= 0 && nodes_[static_cast<std::size_t>(n.a)].requires_grad) ||
                      (n.b >= 0 && n.op != Op::MaskedScale &&
                       nodes_[static_cast<std::size_t>(n.b)].requires_grad);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
  }

  // d(output)/d(wrt[k]) for a 1x1 output. Entries for inputs the output does
  // not depend on are zero matrices.
  std::vector<Tensor> gradient(Var output, std::span<const Var> wrt);

  // Same as gradient(), but the backward pass is itself recorded so the
  // returned handles can be differentiated again.
  std::vector<Var> gradient_graph(Var output, std::span<const Var> wrt);

  // Recomputes every non-leaf value from the leaves in recording order.
  // Returns true when all recomputed values are bit-identical.
  bool replay() {
    bool identical = true;
    for (auto& n : nodes_) {
      if (n.op == Op::Leaf) continue;
      Tensor v = evaluate(n);
      if (v.rows() != n.value.rows() || v.cols() != n.value.cols() ||
          std::memcmp(v.data(), n.value.data(), sizeof(double) * static_cast<std::size_t>(v.size())) != 0) {
        identical = false;
      }
      n.value = std::move(v);
    }
    return identical;
  }

 private:
  template <class Ops>
  friend void detail::propagate(Ops& ops, int id);
  friend struct detail::EagerOps;
  friend struct detail::RecordingOps;

  Var leaf(Tensor value, bool requires_grad) {
    if (!value.allFinite()) throw NumericError("non-finite value in tape leaf");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
  }

  const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  Tensor evaluate(const Node& n) const {
    using namespace kernels;
    switch (n.op) {
      case Op::Leaf: return n.value;
      case Op::MatMul: return matmul(val(n.a), val(n.b), n.trans_a, n.trans_b);
      case Op::AddRowBias: return add_row_bias(val(n.a), val(n.b));
      case Op::MaskedScale:
        require_same(val(n.a), val(n.b), "masked_scale");
        return masked_scale(val(n.a), val(n.b), n.scalar);
      case Op::MulConst:
        require_same(val(n.a), n.constant, "mul_const");
        return val(n.a).cwiseProduct(n.constant);
      case Op::Tanh: return val(n.a).array().tanh().matrix();
      case Op::OneMinusSquare: return (1.0 - val(n.a).array().square()).matrix();
      case Op::Add: require_same(val(n.a), val(n.b), "add"); return val(n.a) + val(n.b);
      case Op::Sub: require_same(val(n.a), val(n.b), "sub"); return val(n.a) - val(n.b);
      case Op::Mul: require_same(val(n.a), val(n.b), "mul"); return val(n.a).cwiseProduct(val(n.b));
      case Op::Scale: return n.scalar * val(n.a);
      case Op::AddScalar: return (val(n.a).array() + n.scalar).matrix();
      case Op::Square: return val(n.a).array().square().matrix();
      case Op::Sqrt:
        if ((val(n.a).array() < 0.0).any()) throw DomainError("sqrt of negative value");
        return val(n.a).array().sqrt().matrix();
      case Op::Reciprocal: return reciprocal(val(n.a));
      case Op::RowSum: return val(n.a).rowwise().sum();
      case Op::ColSum: return val(n.a).colwise().sum();
      case Op::BroadcastCols:
        if (val(n.a).cols() != 1) throw DimensionError("broadcast_cols expects a column");
        return val(n.a).replicate(1, n.p0);
      case Op::BroadcastRows:
        if (val(n.a).rows() != 1) throw DimensionError("broadcast_rows expects a row");
        return val(n.a).replicate(n.p0, 1);
      case Op::SumAll: return Tensor::Constant(1, 1, val(n.a).sum());
      case Op::BroadcastScalar:
        if (val(n.a).size() != 1) throw DimensionError("broadcast_scalar expects 1x1");
        return Tensor::Constant(n.p0, n.p1, val(n.a)(0, 0));
      case Op::ConcatCols: return concat_cols(val(n.a), val(n.b));
      case Op::SliceCols: return slice_cols(val(n.a), n.p0, n.p1);
      case Op::PadCols: return pad_cols(val(n.a), n.p0, n.p1);
    }
    throw ParameterError("unknown op");
  }

  // Nodes on a path from any wrt leaf to the output.
  std::vector<char> live_mask(int output, std::span<const Var> wrt) const {
    std::vector<char> live(static_cast<std::size_t>(output) + 1, 0);
    for (const Var& w : wrt) {
      if (w.tape != this) throw ParameterError("gradient target belongs to another tape");
      if (w.id <= output) live[static_cast<std::size_t>(w.id)] = 1;
    }
    for (int id = 0; id <= output; ++id) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.op == Op::Leaf || live[static_cast<std::size_t>(id)]) continue;
      const bool from_a = n.a >= 0 && live[static_cast<std::size_t>(n.a)];
      const bool from_b = n.b >= 0 && n.op != Op::MaskedScale && live[static_cast<std::size_t>(n.b)];
      live[static_cast<std::size_t>(id)] = from_a || from_b;
    }
    return live;
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

// ---------------------------------------------------------------------------
// Recording primitives

namespace detail {
inline Tape* same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ParameterError("operands live on different tapes");
  return a.tape;
}

inline Var unary(Op op, Var a, double scalar = 0.0) {
  Node n;
  n.op = op;
  n.a = a.id;
  n.scalar = scalar;
  return a.tape->record(std::move(n));
}

inline Var binary(Op op, Var a, Var b) {
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  return same_tape(a, b)->record(std::move(n));
}
}  // namespace detail

inline Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false) {
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  return detail::same_tape(a, b)->record(std::move(n));
}

inline Var add_row_bias(Var x, Var bias) { return detail::binary(Op::AddRowBias, x, bias); }

inline Var masked_scale(Var a, Var ref, double slope) {
  Node n;
  n.op = Op::MaskedScale;
  n.a = a.id;
  n.b = ref.id;
  n.scalar = slope;
  return detail::same_tape(a, ref)->record(std::move(n));
}

inline Var leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ParameterError("leaky_relu slope must lie in (0, 1)");
  return masked_scale(x, x, slope);
}

inline Var mul_const(Var a, Tensor constant) {
  Node n;
  n.op = Op::MulConst;
  n.a = a.id;
  n.constant = std::move(constant);
  return a.tape->record(std::move(n));
}

inline Var dropout(Var x, double rate, Phase phase, CounterRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  if (phase == Phase::Infer || rate == 0.0) return x;
  return mul_const(x, kernels::dropout_mask(x.rows(), x.cols(), rate, rng));
}

inline Var tanh(Var a) { return detail::unary(Op::Tanh, a); }
inline Var one_minus_square(Var a) { return detail::unary(Op::OneMinusSquare, a); }
inline Var add(Var a, Var b) { return detail::binary(Op::Add, a, b); }
inline Var sub(Var a, Var b) { return detail::binary(Op::Sub, a, b); }
inline Var mul(Var a, Var b) { return detail::binary(Op::Mul, a, b); }
inline Var scale(Var a, double s) { return detail::unary(Op::Scale, a, s); }
inline Var add_scalar(Var a, double s) { return detail::unary(Op::AddScalar, a, s); }
inline Var square(Var a) { return detail::unary(Op::Square, a); }
inline Var sqrt(Var a) { return detail::unary(Op::Sqrt, a); }
inline Var reciprocal(Var a) { return detail::unary(Op::Reciprocal, a); }
inline Var row_sum(Var a) { return detail::unary(Op::RowSum, a); }
inline Var col_sum(Var a) { return detail::unary(Op::ColSum, a); }
inline Var sum(Var a) { return detail::unary(Op::SumAll, a); }

inline Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.rows() * a.cols()));
}

inline Var broadcast_cols(Var a, Index cols) {
  Node n;
  n.op = Op::BroadcastCols;
  n.a = a.id;
  n.p0 = cols;
  return a.tape->record(std::move(n));
}

inline Var broadcast_rows(Var a, Index rows) {
  Node n;
  n.op = Op::BroadcastRows;
  n.a = a.id;
  n.p0 = rows;
  return a.tape->record(std::move(n));
}

inline Var broadcast_scalar(Var a, Index rows, Index cols) {
  Node n;
  n.op = Op::BroadcastScalar;
  n.a = a.id;
  n.p0 = rows;
  n.p1 = cols;
  return a.tape->record(std::move(n));
}

inline Var concat_cols(Var a, Var b) { return detail::binary(Op::ConcatCols, a, b); }

inline Var slice_cols(Var a, Index start, Index width) {
  Node n;
  n.op = Op::SliceCols;
  n.a = a.id;
  n.p0 = start;
  n.p1 = width;
  return a.tape->record(std::move(n));
}

inline Var pad_cols(Var a, Index start, Index total) {
  Node n;
  n.op = Op::PadCols;
  n.a = a.id;
  n.p0 = start;
  n.p1 = total;
  return a.tape->record(std::move(n));
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Mean squared error between two equally shaped matrices.
inline Var mse(Var prediction, Var target) { return mean(square(sub(prediction, target))); }

// ---------------------------------------------------------------------------
// Backward pass

namespace detail {

struct EagerOps {
  using G = Tensor;

  const Tape& tape;
  const std::vector<char>& live_nodes;
  std::vector<Tensor> adjoints;

  const Tensor& val(int id) const { return tape.val(id); }
  const Tensor& mask(int id) const { return tape.nodes_[static_cast<std::size_t>(id)].constant; }
  bool live(int id) const { return id >= 0 && live_nodes[static_cast<std::size_t>(id)]; }
  bool has(int id) const { return adjoints[static_cast<std::size_t>(id)].size() > 0; }
  const Tensor& adj(int id) const { return adjoints[static_cast<std::size_t>(id)]; }

  void accumulate(int id, Tensor g) {
    Tensor& slot = adjoints[static_cast<std::size_t>(id)];
    if (slot.size() == 0) slot = std::move(g);
    else slot += g;
  }

  static Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
    return kernels::matmul(a, b, ta, tb);
  }
  static Tensor masked_scale(const Tensor& a, const Tensor& ref, double s) {
    return kernels::masked_scale(a, ref, s);
  }
  static Tensor mul_const(const Tensor& a, const Tensor& c) { return a.cwiseProduct(c); }
  static Tensor one_minus_square(const Tensor& a) { return (1.0 - a.array().square()).matrix(); }
  static Tensor add(const Tensor& a, const Tensor& b) { return a + b; }
  static Tensor mul(const Tensor& a, const Tensor& b) { return a.cwiseProduct(b); }
  static Tensor scale(const Tensor& a, double s) { return s * a; }
  static Tensor square(const Tensor& a) { return a.array().square().matrix(); }
  static Tensor reciprocal(const Tensor& a) { return kernels::reciprocal(a); }
  static Tensor row_sum(const Tensor& a) { return a.rowwise().sum(); }
  static Tensor col_sum(const Tensor& a) { return a.colwise().sum(); }
  static Tensor broadcast_cols(const Tensor& a, Index c) { return a.replicate(1, c); }
  static Tensor broadcast_rows(const Tensor& a, Index r) { return a.replicate(r, 1); }
  static Tensor sum(const Tensor& a) { return Tensor::Constant(1, 1, a.sum()); }
  static Tensor broadcast_scalar(const Tensor& a, Index r, Index c) {
    return Tensor::Constant(r, c, a(0, 0));
  }
  static Tensor slice_cols(const Tensor& a, Index s, Index w) { return kernels::slice_cols(a, s, w); }
  static Tensor pad_cols(const Tensor& a, Index s, Index t) { return kernels::pad_cols(a, s, t); }
  static Index rows(const Tensor& a) { return a.rows(); }
  static Index cols(const Tensor& a) { return a.cols(); }
};

struct RecordingOps {
  using G = Var;

  Tape& tape;
  const std::vector<char>& live_nodes;
  std::vector<Var> adjoints;

  Var val(int id) const { return Var{&tape, id}; }
  Tensor mask(int id) const { return tape.nodes_[static_cast<std::size_t>(id)].constant; }
  bool live(int id) const { return id >= 0 && live_nodes[static_cast<std::size_t>(id)]; }
  bool has(int id) const { return adjoints[static_cast<std::size_t>(id)].id >= 0; }
  Var adj(int id) const { return adjoints[static_cast<std::size_t>(id)]; }

  void accumulate(int id, Var g) {
    Var& slot = adjoints[static_cast<std::size_t>(id)];
    if (slot.id < 0) slot = g;
    else slot = ad::add(slot, g);
  }

  static Var matmul(Var a, Var b, bool ta, bool tb) { return ad::matmul(a, b, ta, tb); }
  static Var masked_scale(Var a, Var ref, double s) { return ad::masked_scale(a, ref, s); }
  static Var mul_const(Var a, Tensor c) { return ad::mul_const(a, std::move(c)); }
  static Var one_minus_square(Var a) { return ad::one_minus_square(a); }
  static Var add(Var a, Var b) { return ad::add(a, b); }
  static Var mul(Var a, Var b) { return ad::mul(a, b); }
  static Var scale(Var a, double s) { return ad::scale(a, s); }
  static Var square(Var a) { return ad::square(a); }
  static Var reciprocal(Var a) { return ad::reciprocal(a); }
  static Var row_sum(Var a) { return ad::row_sum(a); }
  static Var col_sum(Var a) { return ad::col_sum(a); }
  static Var broadcast_cols(Var a, Index c) { return ad::broadcast_cols(a, c); }
  static Var broadcast_rows(Var a, Index r) { return ad::broadcast_rows(a, r); }
  static Var sum(Var a) { return ad::sum(a); }
  static Var broadcast_scalar(Var a, Index r, Index c) { return ad::broadcast_scalar(a, r, c); }
  static Var slice_cols(Var a, Index s, Index w) { return ad::slice_cols(a, s, w); }
  static Var pad_cols(Var a, Index s, Index t) { return ad::pad_cols(a, s, t); }
  static Index rows(Var a) { return a.rows(); }
  static Index cols(Var a) { return a.cols(); }
};

// Pushes the adjoint of node `id` to its inputs.
template <class Ops>
void propagate(Ops& ops, int id) {
  // Copy the header: the recording policy appends to the node vector.
  const Node& ref = ops.tape.nodes_[static_cast<std::size_t>(id)];
  const Op op = ref.op;
  const int a = ref.a;
  const int b = ref.b;
  const double s = ref.scalar;
  const bool ta = ref.trans_a;
  const bool tb = ref.trans_b;
  const Index p0 = ref.p0;
  const Index p1 = ref.p1;
  const Index a_rows = a >= 0 ? ops.tape.val(a).rows() : 0;
  const Index a_cols = a >= 0 ? ops.tape.val(a).cols() : 0;
  const Index b_cols = b >= 0 ? ops.tape.val(b).cols() : 0;

  const auto& g = ops.adj(id);

  switch (op) {
    case Op::Leaf: break;
    case Op::MatMul:
      if (ops.live(a)) {
        if (!ta) ops.accumulate(a, Ops::matmul(g, ops.val(b), false, !tb));
        else ops.accumulate(a, Ops::matmul(ops.val(b), g, tb, true));
      }
      if (ops.live(b)) {
        if (!tb) ops.accumulate(b, Ops::matmul(ops.val(a), g, !ta, false));
        else ops.accumulate(b, Ops::matmul(g, ops.val(a), true, ta));
      }
      break;
    case Op::AddRowBias:
      if (ops.live(a)) ops.accumulate(a, g);
      if (ops.live(b)) ops.accumulate(b, Ops::col_sum(g));
      break;
    case Op::MaskedScale:
      // The mask is piecewise constant in `b`, so only `a` receives gradient.
      if (ops.live(a)) ops.accumulate(a, Ops::masked_scale(g, ops.val(b), s));
      break;
    case Op::MulConst:
      if (ops.live(a)) ops.accumulate(a, Ops::mul_const(g, ops.mask(id)));
      break;
    case Op::Tanh:
      if (ops.live(a)) ops.accumulate(a, Ops::mul(g, Ops::one_minus_square(ops.val(id))));
      break;
    case Op::OneMinusSquare:
      if (ops.live(a)) ops.accumulate(a, Ops::scale(Ops::mul(g, ops.val(a)), -2.0));
      break;
    case Op::Add:
      if (ops.live(a)) ops.accumulate(a, g);
      if (ops.live(b)) ops.accumulate(b, g);
      break;
    case Op::Sub:
      if (ops.live(a)) ops.accumulate(a, g);
      if (ops.live(b)) ops.accumulate(b, Ops::scale(g, -1.0));
      break;
    case Op::Mul:
      if (ops.live(a)) ops.accumulate(a, Ops::mul(g, ops.val(b)));
      if (ops.live(b)) ops.accumulate(b, Ops::mul(g, ops.val(a)));
      break;
    case Op::Scale:
      if (ops.live(a)) ops.accumulate(a, Ops::scale(g, s));
      break;
    case Op::AddScalar:
      if (ops.live(a)) ops.accumulate(a, g);
      break;
    case Op::Square:
      if (ops.live(a)) ops.accumulate(a, Ops::scale(Ops::mul(g, ops.val(a)), 2.0));
      break;
    case Op::Sqrt:
      // d sqrt(x) = 1 / (2 sqrt(x)); taken as 0 at x = 0.
      if (ops.live(a)) ops.accumulate(a, Ops::scale(Ops::mul(g, Ops::reciprocal(ops.val(id))), 0.5));
      break;
    case Op::Reciprocal:
      // d(1/x) = -1/x^2 = -(1/x)^2.
      if (ops.live(a)) ops.accumulate(a, Ops::scale(Ops::mul(g, Ops::square(ops.val(id))), -1.0));
      break;
    case Op::RowSum:
      if (ops.live(a)) ops.accumulate(a, Ops::broadcast_cols(g, a_cols));
      break;
    case Op::ColSum:
      if (ops.live(a)) ops.accumulate(a, Ops::broadcast_rows(g, a_rows));
      break;
    case Op::BroadcastCols:
      if (ops.live(a)) ops.accumulate(a, Ops::row_sum(g));
      break;
    case Op::BroadcastRows:
      if (ops.live(a)) ops.accumulate(a, Ops::col_sum(g));
      break;
    case Op::SumAll:
      if (ops.live(a)) ops.accumulate(a, Ops::broadcast_scalar(g, a_rows, a_cols));
      break;
    case Op::BroadcastScalar:
      if (ops.live(a)) ops.accumulate(a, Ops::sum(g));
      break;
    case Op::ConcatCols:
      if (ops.live(a)) ops.accumulate(a, Ops::slice_cols(g, 0, a_cols));
      if (ops.live(b)) ops.accumulate(b, Ops::slice_cols(g, a_cols, b_cols));
      break;
    case Op::SliceCols:
      if (ops.live(a)) ops.accumulate(a, Ops::pad_cols(g, p0, a_cols));
      break;
    case Op::PadCols:
      if (ops.live(a)) ops.accumulate(a, Ops::slice_cols(g, p0, a_cols));
      break;
  }
  (void)p1;
}

}  // namespace detail

inline std::vector<Tensor> Tape::gradient(Var output, std::span<const Var> wrt) {
  if (output.tape != this) throw ParameterError("output belongs to another tape");
  if (value(output).size() != 1) {
    throw DimensionError("gradient needs a 1x1 output, got " + shape_string(value(output)));
  }
  const std::vector<char> live = live_mask(output.id, wrt);
  detail::EagerOps ops{*this, live, std::vector<Tensor>(static_cast<std::size_t>(output.id) + 1)};
  ops.adjoints[static_cast<std::size_t>(output.id)] = Tensor::Ones(1, 1);
  std::vector<char> keep(static_cast<std::size_t>(output.id) + 1, 0);
  for (const Var& w : wrt) {
    if (w.id <= output.id) keep[static_cast<std::size_t>(w.id)] = 1;
  }
  for (int id = output.id; id >= 0; --id) {
    if (!live[static_cast<std::size_t>(id)] || !ops.has(id)) continue;
    detail::propagate(ops, id);
    // Intermediate adjoints are dropped once consumed.
    if (!keep[static_cast<std::size_t>(id)]) {
      ops.adjoints[static_cast<std::size_t>(id)].resize(0, 0);
    }
  }
  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Tensor& v = value(w);
    if (w.id <= output.id && ops.has(w.id)) {
      const Tensor& g = ops.adj(w.id);
      if (!g.allFinite()) throw NumericError("non-finite gradient");
      result.push_back(g);
    } else {
      result.push_back(Tensor::Zero(v.rows(), v.cols()));
    }
  }
  return result;
}

inline std::vector<Var> Tape::gradient_graph(Var output, std::span<const Var> wrt) {
  if (output.tape != this) throw ParameterError("output belongs to another tape");
  if (value(output).size() != 1) {
    throw DimensionError("gradient needs a 1x1 output, got " + shape_string(value(output)));
  }
  const std::vector<char> live = live_mask(output.id, wrt);
  detail::RecordingOps ops{*this, live, std::vector<Var>(static_cast<std::size_t>(output.id) + 1)};
  ops.adjoints[static_cast<std::size_t>(output.id)] = constant(Tensor::Ones(1, 1));
  for (int id = output.id; id >= 0; --id) {
    if (!live[static_cast<std::size_t>(id)] || !ops.has(id)) continue;
    detail::propagate(ops, id);
  }
  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id <= output.id && ops.has(w.id)) {
      result.push_back(ops.adj(w.id));
    } else {
      const Tensor& v = value(w);
      result.push_back(constant(Tensor::Zero(v.rows(), v.cols())));
    }
  }
  return result;
}

}  // namespace acgan::ad
