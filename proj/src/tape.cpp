// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mtvae {

namespace {

[[noreturn]] void shape_error(const char* op, const DenseArray& a, const DenseArray& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void check_same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands belong to different tapes");
}

void check_finite(const char* op, const DenseArray& a) {
  if (checked_mode() && !a.all_finite()) {
    throw std::domain_error(std::string(op) + ": produced non-finite values");
  }
}

// C += A . B, A is m x k, B is k x n.
void matmul_nn_acc(double* c, const double* a, const double* b, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A . B^T, A is m x k, B is n x k.
void matmul_nt_acc(double* c, const double* a, const double* b, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C += A^T . B, A is k x m, B is k x n.
void matmul_tn_acc(double* c, const double* a, const double* b, std::int64_t k, std::int64_t m, std::int64_t n) {
  for (std::int64_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Var unary(const char* name, Op op, Var a, DenseArray value) {
  check_finite(name, value);
  Node n;
  n.op = op;
  n.in[0] = a.id;
  n.value = std::move(value);
  return a.tape->emplace(std::move(n));
}

}  // namespace

const DenseArray& Var::value() const { return tape->value(*this); }

Var Tape::emplace(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(DenseArray v) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(v);
  return emplace(std::move(n));
}

const DenseArray& Tape::value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }

DenseArray& Tape::grad_buffer(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad_live) {
    n.grad = DenseArray(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

const DenseArray& Tape::grad(Var v) {
  return grad_buffer(v.id);
}

void Tape::backward(Var root) {
  const Node& r = nodes_[static_cast<std::size_t>(root.id)];
  if (r.value.size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " + r.value.shape_str());
  }
  for (auto& n : nodes_) {
    n.grad_live = false;
    n.grad = DenseArray();
  }
  grad_buffer(root.id)[0] = 1.0;
  for (std::int32_t id = root.id; id >= 0; --id) {
    if (!nodes_[static_cast<std::size_t>(id)].grad_live) continue;
    backward_step(id);
  }
}

void Tape::backward_step(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const DenseArray& g = n.grad;
  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::MatMul: {
      const DenseArray& a = nodes_[n.in[0]].value;
      const DenseArray& b = nodes_[n.in[1]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      // gA += G . B^T ; gB += A^T . G
      matmul_nt_acc(ga.data(), g.data(), b.data(), a.rows(), b.cols(), a.cols());
      matmul_tn_acc(gb.data(), a.data(), g.data(), a.rows(), a.cols(), b.cols());
      break;
    }
    case Op::MatMulNT: {
      const DenseArray& a = nodes_[n.in[0]].value;
      const DenseArray& b = nodes_[n.in[1]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      // C = A . B^T: gA += G . B ; gB += G^T . A
      matmul_nn_acc(ga.data(), g.data(), b.data(), a.rows(), b.rows(), a.cols());
      matmul_tn_acc(gb.data(), g.data(), a.data(), a.rows(), b.rows(), a.cols());
      break;
    }
    case Op::Add: {
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
      break;
    }
    case Op::Sub: {
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] -= g[i];
      }
      break;
    }
    case Op::Mul: {
      const DenseArray& a = nodes_[n.in[0]].value;
      const DenseArray& b = nodes_[n.in[1]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * b[i];
        gb[i] += g[i] * a[i];
      }
      break;
    }
    case Op::AddRowVec: {
      DenseArray& gm = grad_buffer(n.in[0]);
      DenseArray& gv = grad_buffer(n.in[1]);
      const std::int64_t r = n.value.rows(), c = n.value.cols();
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < c; ++j) {
          gm[i * c + j] += g[i * c + j];
          gv[j] += g[i * c + j];
        }
      }
      break;
    }
    case Op::Tanh: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::Sigmoid: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::Exp: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      break;
    }
    case Op::Log: {
      const DenseArray& a = nodes_[n.in[0]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a[i];
      break;
    }
    case Op::Sqrt: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / n.value[i];
      break;
    }
    case Op::Square: {
      const DenseArray& a = nodes_[n.in[0]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * a[i];
      break;
    }
    case Op::Abs: {
      const DenseArray& a = nodes_[n.in[0]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * (a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0));
      }
      break;
    }
    case Op::Scale: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.a0;
      break;
    }
    case Op::AddConst: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      break;
    }
    case Op::Clamp: {
      const DenseArray& a = nodes_[n.in[0]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        if (a[i] > n.a0 && a[i] < n.a1) ga[i] += g[i];
      }
      break;
    }
    case Op::ConcatCols: {
      const DenseArray& a = nodes_[n.in[0]].value;
      const DenseArray& b = nodes_[n.in[1]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      DenseArray& gb = grad_buffer(n.in[1]);
      const std::int64_t r = n.value.rows(), ca = a.cols(), cb = b.cols();
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * (ca + cb) + j];
        for (std::int64_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * (ca + cb) + ca + j];
      }
      break;
    }
    case Op::SliceCols: {
      const DenseArray& a = nodes_[n.in[0]].value;
      DenseArray& ga = grad_buffer(n.in[0]);
      const std::int64_t r = a.rows(), c = a.cols(), w = n.i1 - n.i0;
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < w; ++j) ga[i * c + n.i0 + j] += g[i * w + j];
      }
      break;
    }
    case Op::Sum: {
      DenseArray& ga = grad_buffer(n.in[0]);
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      break;
    }
    case Op::Mean: {
      DenseArray& ga = grad_buffer(n.in[0]);
      const double s = g[0] / static_cast<double>(ga.size());
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += s;
      break;
    }
    case Op::RowSum: {
      DenseArray& ga = grad_buffer(n.in[0]);
      const std::int64_t r = nodes_[n.in[0]].value.rows(), c = nodes_[n.in[0]].value.cols();
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < c; ++j) ga[i * c + j] += g[i];
      }
      break;
    }
    case Op::LayerNorm: {
      const DenseArray& gain = nodes_[n.in[1]].value;
      DenseArray& gx = grad_buffer(n.in[0]);
      DenseArray& gg = grad_buffer(n.in[1]);
      DenseArray& gb = grad_buffer(n.in[2]);
      const DenseArray& xhat = n.aux;
      const DenseArray& rstd = n.aux2;
      const std::int64_t r = n.value.rows(), c = n.value.cols();
      for (std::int64_t i = 0; i < r; ++i) {
        double mean_gq = 0.0, mean_gqx = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
          const double gq = g[i * c + j] * gain[j];
          mean_gq += gq;
          mean_gqx += gq * xhat[i * c + j];
        }
        mean_gq /= static_cast<double>(c);
        mean_gqx /= static_cast<double>(c);
        for (std::int64_t j = 0; j < c; ++j) {
          const double gq = g[i * c + j] * gain[j];
          gx[i * c + j] += rstd[i] * (gq - mean_gq - xhat[i * c + j] * mean_gqx);
          gg[j] += g[i * c + j] * xhat[i * c + j];
          gb[j] += g[i * c + j];
        }
      }
      break;
    }
    case Op::Dropout: {
      DenseArray& ga = grad_buffer(n.in[0]);
      if (n.aux.size() == 0) {
        for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      } else {
        for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux[i];
      }
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  DenseArray out = av.rank() == 1 && bv.cols() == 1   ? DenseArray({1})
                   : av.rank() == 1                   ? DenseArray({bv.cols()})
                                                      : DenseArray({av.rows(), bv.cols()});
  matmul_nn_acc(out.data(), av.data(), bv.data(), av.rows(), av.cols(), bv.cols());
  check_finite("matmul", out);
  Node n;
  n.op = Op::MatMul;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.value = std::move(out);
  return a.tape->emplace(std::move(n));
}

Var matmul_nt(Var a, Var b) {
  check_same_tape("matmul_nt", a, b);
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("matmul_nt", av, bv);
  DenseArray out = av.rank() == 1 ? DenseArray({bv.rows()}) : DenseArray({av.rows(), bv.rows()});
  matmul_nt_acc(out.data(), av.data(), bv.data(), av.rows(), av.cols(), bv.rows());
  check_finite("matmul_nt", out);
  Node n;
  n.op = Op::MatMulNT;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.value = std::move(out);
  return a.tape->emplace(std::move(n));
}

namespace {
Var binary_elementwise(const char* name, Op op, Var a, Var b) {
  check_same_tape(name, a, b);
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  if (!av.same_shape(bv)) shape_error(name, av, bv);
  DenseArray out(av.shape());
  const double* pa = av.data();
  const double* pb = bv.data();
  double* po = out.data();
  const std::int64_t nsz = av.size();
  switch (op) {
    case Op::Add:
      for (std::int64_t i = 0; i < nsz; ++i) po[i] = pa[i] + pb[i];
      break;
    case Op::Sub:
      for (std::int64_t i = 0; i < nsz; ++i) po[i] = pa[i] - pb[i];
      break;
    case Op::Mul:
      for (std::int64_t i = 0; i < nsz; ++i) po[i] = pa[i] * pb[i];
      break;
    default:
      break;
  }
  check_finite(name, out);
  Node n;
  n.op = op;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.value = std::move(out);
  return a.tape->emplace(std::move(n));
}
}  // namespace

Var add(Var a, Var b) { return binary_elementwise("add", Op::Add, a, b); }
Var sub(Var a, Var b) { return binary_elementwise("sub", Op::Sub, a, b); }
Var mul(Var a, Var b) { return binary_elementwise("mul", Op::Mul, a, b); }

Var add_rowvec(Var m, Var v) {
  check_same_tape("add_rowvec", m, v);
  const DenseArray& mv = m.value();
  const DenseArray& vv = v.value();
  if (vv.rank() != 1 || vv.cols() != mv.cols()) shape_error("add_rowvec", mv, vv);
  DenseArray out(mv.shape());
  const std::int64_t r = mv.rows(), c = mv.cols();
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + vv[j];
  }
  check_finite("add_rowvec", out);
  Node n;
  n.op = Op::AddRowVec;
  n.in[0] = m.id;
  n.in[1] = v.id;
  n.value = std::move(out);
  return m.tape->emplace(std::move(n));
}

Var tanh(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  return unary("tanh", Op::Tanh, a, std::move(out));
}

Var sigmoid(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return unary("sigmoid", Op::Sigmoid, a, std::move(out));
}

Var exp(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
  return unary("exp", Op::Exp, a, std::move(out));
}

Var log(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) {
    if (checked_mode() && av[i] <= 0.0) {
      throw std::domain_error("log: non-positive input " + std::to_string(av[i]));
    }
    out[i] = std::log(av[i]);
  }
  return unary("log", Op::Log, a, std::move(out));
}

Var sqrt(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) {
    if (checked_mode() && av[i] < 0.0) {
      throw std::domain_error("sqrt: negative input " + std::to_string(av[i]));
    }
    out[i] = std::sqrt(av[i]);
  }
  return unary("sqrt", Op::Sqrt, a, std::move(out));
}

Var square(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = av[i] * av[i];
  return unary("square", Op::Square, a, std::move(out));
}

Var abs(Var a) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = std::abs(av[i]);
  return unary("abs", Op::Abs, a, std::move(out));
}

Var scale(Var a, double c) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  Var r = unary("scale", Op::Scale, a, std::move(out));
  r.tape->node(r.id).a0 = c;
  return r;
}

Var add_const(Var a, double c) {
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  Var r = unary("add_const", Op::AddConst, a, std::move(out));
  r.tape->node(r.id).a0 = c;
  return r;
}

Var clamp(Var a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  const DenseArray& av = a.value();
  DenseArray out(av.shape());
  for (std::int64_t i = 0; i < av.size(); ++i) out[i] = av[i] < lo ? lo : (av[i] > hi ? hi : av[i]);
  Var r = unary("clamp", Op::Clamp, a, std::move(out));
  r.tape->node(r.id).a0 = lo;
  r.tape->node(r.id).a1 = hi;
  return r;
}

Var concat_cols(Var a, Var b) {
  check_same_tape("concat_cols", a, b);
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  if (av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
  const std::int64_t r = av.rows(), ca = av.cols(), cb = bv.cols();
  DenseArray out = (av.rank() == 1 && bv.rank() == 1) ? DenseArray({ca + cb}) : DenseArray({r, ca + cb});
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < ca; ++j) out[i * (ca + cb) + j] = av[i * ca + j];
    for (std::int64_t j = 0; j < cb; ++j) out[i * (ca + cb) + ca + j] = bv[i * cb + j];
  }
  Node n;
  n.op = Op::ConcatCols;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.value = std::move(out);
  return a.tape->emplace(std::move(n));
}

Var slice_cols(Var a, std::int64_t from, std::int64_t to) {
  const DenseArray& av = a.value();
  if (from < 0 || to > av.cols() || from >= to) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(from) + "," + std::to_string(to) +
                                ") invalid for shape " + av.shape_str());
  }
  const std::int64_t r = av.rows(), c = av.cols(), w = to - from;
  DenseArray out = av.rank() == 1 ? DenseArray({w}) : DenseArray({r, w});
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < w; ++j) out[i * w + j] = av[i * c + from + j];
  }
  Node n;
  n.op = Op::SliceCols;
  n.in[0] = a.id;
  n.i0 = from;
  n.i1 = to;
  n.value = std::move(out);
  return a.tape->emplace(std::move(n));
}

Var sum(Var a) {
  const DenseArray& av = a.value();
  double s = 0.0;
  for (std::int64_t i = 0; i < av.size(); ++i) s += av[i];
  return unary("sum", Op::Sum, a, DenseArray::scalar(s));
}

Var mean(Var a) {
  const DenseArray& av = a.value();
  double s = 0.0;
  for (std::int64_t i = 0; i < av.size(); ++i) s += av[i];
  return unary("mean", Op::Mean, a, DenseArray::scalar(s / static_cast<double>(av.size())));
}

Var row_sum(Var a) {
  const DenseArray& av = a.value();
  const std::int64_t r = av.rows(), c = av.cols();
  DenseArray out({r});
  for (std::int64_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < c; ++j) s += av[i * c + j];
    out[i] = s;
  }
  return unary("row_sum", Op::RowSum, a, std::move(out));
}

Var layer_norm(Var x, Var gain, Var bias, double epsilon) {
  check_same_tape("layer_norm", x, gain);
  check_same_tape("layer_norm", x, bias);
  const DenseArray& xv = x.value();
  const DenseArray& gv = gain.value();
  const DenseArray& bv = bias.value();
  const std::int64_t r = xv.rows(), c = xv.cols();
  if (checked_mode() && c < 2) {
    throw std::invalid_argument("layer_norm: last axis of length " + std::to_string(c) + " is degenerate");
  }
  if (gv.rank() != 1 || gv.cols() != c) shape_error("layer_norm(gain)", xv, gv);
  if (bv.rank() != 1 || bv.cols() != c) shape_error("layer_norm(bias)", xv, bv);
  DenseArray out(xv.shape());
  DenseArray xhat(xv.shape());
  DenseArray rstd({r});
  for (std::int64_t i = 0; i < r; ++i) {
    double m = 0.0;
    for (std::int64_t j = 0; j < c; ++j) m += xv[i * c + j];
    m /= static_cast<double>(c);
    double v = 0.0;
    for (std::int64_t j = 0; j < c; ++j) {
      const double d = xv[i * c + j] - m;
      v += d * d;
    }
    v /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(v + epsilon);
    rstd[i] = rs;
    for (std::int64_t j = 0; j < c; ++j) {
      const double xh = (xv[i * c + j] - m) * rs;
      xhat[i * c + j] = xh;
      out[i * c + j] = gv[j] * xh + bv[j];
    }
  }
  check_finite("layer_norm", out);
  Node n;
  n.op = Op::LayerNorm;
  n.in[0] = x.id;
  n.in[1] = gain.id;
  n.in[2] = bias.id;
  n.a0 = epsilon;
  n.value = std::move(out);
  n.aux = std::move(xhat);
  n.aux2 = std::move(rstd);
  return x.tape->emplace(std::move(n));
}

Var dropout(Var x, double keep_probability, Rng& rng, bool training) {
  if (!(keep_probability > 0.0) || keep_probability > 1.0) {
    throw std::invalid_argument("dropout: keep probability " + std::to_string(keep_probability) +
                                " outside (0, 1]");
  }
  const DenseArray& xv = x.value();
  Node n;
  n.op = Op::Dropout;
  n.in[0] = x.id;
  n.a0 = keep_probability;
  if (!training || keep_probability == 1.0) {
    n.value = xv;  // identity; empty mask signals pass-through in backward
    return x.tape->emplace(std::move(n));
  }
  DenseArray mask(xv.shape());
  DenseArray out(xv.shape());
  const double inv_keep = 1.0 / keep_probability;
  for (std::int64_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < keep_probability ? inv_keep : 0.0;
    out[i] = xv[i] * mask[i];
  }
  n.value = std::move(out);
  n.aux = std::move(mask);
  return x.tape->emplace(std::move(n));
}

}  // namespace mtvae
