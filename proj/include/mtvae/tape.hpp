// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "mtvae/array.hpp"
#include "mtvae/rng.hpp"

namespace mtvae {

enum class Op : std::uint8_t {
  Leaf,
  MatMul,     // A[mxk] * B[kxn]
  MatMulNT,   // A[mxk] * B[nxk]^T
  Add,
  Sub,
  Mul,
  AddRowVec,  // matrix + row vector broadcast over rows
  Tanh,
  Sigmoid,
  Exp,
  Log,
  Sqrt,
  Square,
  Abs,
  Scale,      // x * constant
  AddConst,   // x + constant
  Clamp,
  ConcatCols,
  SliceCols,
  Sum,
  Mean,
  RowSum,     // sum over last axis -> rank-1 of length rows
  LayerNorm,  // inputs: x, gain, bias; per-row normalization
  Dropout,
};

class Tape;

/// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const DenseArray& value() const;
};

struct Node {
  Op op = Op::Leaf;
  std::array<std::int32_t, 3> in{-1, -1, -1};
  DenseArray value;
  DenseArray grad;
  bool grad_live = false;
  // op-specific extras
  double a0 = 0.0;
  double a1 = 0.0;
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  DenseArray aux;   // dropout mask / layer-norm normalized values
  DenseArray aux2;  // layer-norm reciprocal stddev per row
};

/// Append-only computation graph with reverse-mode differentiation.
/// Nodes are created in topological order; backward walks them in reverse.
class Tape {
 public:
  Var leaf(DenseArray v);
  Var constant(DenseArray v) { return leaf(std::move(v)); }

  const DenseArray& value(Var v) const;
  /// Gradient of the last backward() root with respect to v. Zero for nodes
  /// the root does not depend on.
  const DenseArray& grad(Var v);

  /// Reverse-mode sweep from a scalar root. Resets previous gradients.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  Node& node(std::int32_t id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Var emplace(Node n);

 private:
  void backward_step(std::int32_t id);
  DenseArray& grad_buffer(std::int32_t id);

  std::deque<Node> nodes_;  // stable references under growth
};

// Graph-building operations. Shape rules:
//   matmul:      [m x k] . [k x n] -> [m x n]
//   matmul_nt:   [m x k] . [n x k]^T -> [m x n]
//   add/sub/mul: elementwise, identical shapes
//   add_rowvec:  [r x c] + [c] broadcast over rows
//   unary ops:   shape-preserving
//   concat_cols: along the last axis; row counts must agree
//   slice_cols:  half-open column range [from, to)
//   sum/mean:    full reduction to a scalar (shape [1])
//   row_sum:     [r x c] -> [r]
//   layer_norm:  per-row mean/variance normalization, gain/bias of length c
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_rowvec(Var m, Var v);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var abs(Var a);
Var scale(Var a, double c);
Var add_const(Var a, double c);
Var clamp(Var a, double lo, double hi);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::int64_t from, std::int64_t to);
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
Var layer_norm(Var x, Var gain, Var bias, double epsilon);
/// Inverted dropout: zero with probability 1-keep, scale survivors by 1/keep.
/// Identity when training is false or keep == 1.
Var dropout(Var x, double keep_probability, Rng& rng, bool training);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace mtvae
