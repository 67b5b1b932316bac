// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mtvae/tape.hpp"
#include "testutil.hpp"

using namespace mtvae;
namespace tu = mtvae::testutil;

TEST_SUITE("tape") {

TEST_CASE("array invariants") {
  CHECK_THROWS(DenseArray({2, 3}, {1.0, 2.0}));  // size mismatch
  CHECK_THROWS(DenseArray({0}));                 // non-positive dim
  CHECK(checked_mode());
  CHECK_THROWS(DenseArray({2}, {1.0, std::nan("")}));
  {
    CheckedModeScope off(false);
    CHECK_NOTHROW(DenseArray({2}, {1.0, std::nan("")}));
  }
  CHECK(checked_mode());
}

TEST_CASE("trivial op values") {
  Tape t;
  Var x = t.leaf(DenseArray::scalar(0.0));
  CHECK(tanh(x).value()[0] == 0.0);

  // matmul(I3, A) == A
  Var eye = t.leaf(DenseArray::mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  Var a = t.leaf(DenseArray::mat(3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK(tu::arrays_equal(matmul(eye, a).value(), a.value()));

  Var u = t.leaf(DenseArray::vec({1, 2}));
  Var v = t.leaf(DenseArray::vec({3}));
  CHECK(tu::arrays_equal(concat_cols(u, v).value(), DenseArray::vec({1, 2, 3})));
}

TEST_CASE("shape errors name the op and shapes") {
  Tape t;
  Var a = t.leaf(DenseArray::mat(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = t.leaf(DenseArray::mat(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[2x3]"), std::invalid_argument);
}

TEST_CASE("log and sqrt domain errors in checked mode") {
  Tape t;
  Var a = t.leaf(DenseArray::vec({-1.0}));
  CHECK_THROWS_AS(log(a), std::domain_error);
  CHECK_THROWS_AS(sqrt(a), std::domain_error);
}

TEST_CASE("backward basics") {
  Tape t;
  Var x = t.leaf(DenseArray::scalar(3.0));
  Var y = t.leaf(DenseArray::scalar(7.0));  // disconnected
  Var root = square(x);
  t.backward(root);
  CHECK(t.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(t.grad(y)[0] == 0.0);

  Var m = t.leaf(DenseArray::mat(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_AS(t.backward(m), std::invalid_argument);  // non-scalar root
}

TEST_CASE("sum(tanh(Wx)) matches finite differences") {
  Rng rng(7);
  DenseArray w = tu::random_array({4, 3}, rng);
  DenseArray x = tu::random_array({3, 1}, rng);  // column vector
  const double worst = tu::max_grad_rel_err({w, x}, [](Tape&, const std::vector<Var>& in) {
    return sum(tanh(matmul(in[0], in[1])));
  });
  CHECK(worst <= 1e-6);
}

TEST_CASE("gradient linearity over summed roots") {
  Rng rng(11);
  DenseArray xv = tu::random_array({5}, rng);

  auto run = [&](int which) {
    Tape t;
    Var x = t.leaf(xv);
    Var r1 = sum(square(x));
    Var r2 = sum(tanh(x));
    t.backward(which == 0 ? add(r1, r2) : (which == 1 ? r1 : r2));
    return DenseArray(t.grad(x));
  };
  DenseArray combined = run(0), g1 = run(1), g2 = run(2);
  for (std::int64_t i = 0; i < combined.size(); ++i) {
    CHECK(combined[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
  }
}

TEST_CASE("every op matches finite differences on random inputs") {
  Rng rng(1234);
  const double tol = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    DenseArray a = tu::random_array({2, 3}, rng);
    DenseArray b = tu::random_array({2, 3}, rng);
    DenseArray mvec = tu::random_array({3}, rng);
    DenseArray w = tu::random_array({4, 3}, rng);
    DenseArray pos = tu::random_array({2, 3}, rng, 0.1, 2.0);

    auto check = [&](std::vector<DenseArray> inputs,
                     std::function<Var(Tape&, const std::vector<Var>&)> build) {
      CHECK(tu::max_grad_rel_err(std::move(inputs), build) <= tol);
    };

    check({a, b}, [](Tape&, const std::vector<Var>& in) { return sum(mul(in[0], in[1])); });
    check({a, b}, [](Tape&, const std::vector<Var>& in) { return sum(square(sub(in[0], in[1]))); });
    check({a, b}, [](Tape&, const std::vector<Var>& in) { return sum(tanh(add(in[0], in[1]))); });
    check({a, w}, [](Tape&, const std::vector<Var>& in) { return sum(tanh(matmul_nt(in[0], in[1]))); });
    check({a, mvec}, [](Tape&, const std::vector<Var>& in) { return sum(add_rowvec(in[0], in[1])); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(sigmoid(in[0])); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(exp(scale(in[0], 0.5))); });
    check({pos}, [](Tape&, const std::vector<Var>& in) { return sum(log(in[0])); });
    check({pos}, [](Tape&, const std::vector<Var>& in) { return sum(sqrt(in[0])); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(abs(add_const(in[0], 0.05))); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return mean(square(in[0])); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(sqrt(add_const(row_sum(square(in[0])), 1e-3))); });
    check({a, b}, [](Tape&, const std::vector<Var>& in) { return sum(square(concat_cols(in[0], in[1]))); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(tanh(slice_cols(in[0], 1, 3))); });
    check({a}, [](Tape&, const std::vector<Var>& in) { return sum(clamp(in[0], -1.5, 1.5)); });
  }
}

TEST_CASE("matmul variants match finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    DenseArray a = tu::random_array({3, 4}, rng);
    DenseArray b = tu::random_array({4, 2}, rng);
    DenseArray bt = tu::random_array({2, 4}, rng);
    CHECK(tu::max_grad_rel_err({a, b}, [](Tape&, const std::vector<Var>& in) {
            return sum(tanh(matmul(in[0], in[1])));
          }) <= 1e-6);
    CHECK(tu::max_grad_rel_err({a, bt}, [](Tape&, const std::vector<Var>& in) {
            return sum(tanh(matmul_nt(in[0], in[1])));
          }) <= 1e-6);
  }
}

TEST_CASE("layer_norm values") {
  Tape t;
  Var gain = t.leaf(DenseArray::vec({1, 1, 1}));
  Var bias = t.leaf(DenseArray::vec({0, 0, 0}));

  Var flat = t.leaf(DenseArray::vec({1, 1, 1}));
  const DenseArray& out = layer_norm(flat, gain, bias, 1e-5).value();
  for (std::int64_t i = 0; i < 3; ++i) CHECK(out[i] == 0.0);

  Var g2 = t.leaf(DenseArray::vec({1, 1}));
  Var b2 = t.leaf(DenseArray::vec({0, 0}));
  Var pm = t.leaf(DenseArray::vec({-1, 1}));
  const DenseArray& o2 = layer_norm(pm, g2, b2, 1e-5).value();
  CHECK(std::abs(o2[0] + 1.0) < 1e-4);
  CHECK(std::abs(o2[1] - 1.0) < 1e-4);

  Rng rng(5);
  Var x = t.leaf(tu::random_array({1, 64}, rng));
  const DenseArray& o3 = layer_norm(x, t.leaf(DenseArray::full({64}, 1.0)), t.leaf(DenseArray({64})), 1e-9).value();
  double m = 0.0;
  for (std::int64_t i = 0; i < 64; ++i) m += o3[i];
  m /= 64.0;
  double var = 0.0;
  for (std::int64_t i = 0; i < 64; ++i) var += (o3[i] - m) * (o3[i] - m);
  var /= 64.0;
  CHECK(std::abs(m) < 1e-9);
  CHECK(std::abs(var - 1.0) < 1e-3);
}

TEST_CASE("layer_norm shift and positive-scale invariance (eps=0)") {
  Rng rng(17);
  DenseArray x = tu::random_array({2, 8}, rng);
  DenseArray gain = tu::random_array({8}, rng, 0.5, 1.5);
  DenseArray bias = tu::random_array({8}, rng, -0.5, 0.5);

  auto ln = [&](const DenseArray& input) {
    Tape t;
    return DenseArray(layer_norm(t.leaf(input), t.leaf(gain), t.leaf(bias), 0.0).value());
  };
  DenseArray base = ln(x);
  DenseArray shifted = x;
  for (std::int64_t i = 0; i < shifted.size(); ++i) shifted[i] += 3.7;
  DenseArray scaled = x;
  for (std::int64_t i = 0; i < scaled.size(); ++i) scaled[i] *= 2.5;
  CHECK(tu::max_abs_diff(base, ln(shifted)) < 1e-9);
  CHECK(tu::max_abs_diff(base, ln(scaled)) < 1e-9);
}

TEST_CASE("layer_norm gradient and degenerate width") {
  Rng rng(23);
  DenseArray x = tu::random_array({3, 6}, rng);
  DenseArray gain = tu::random_array({6}, rng, 0.5, 1.5);
  DenseArray bias = tu::random_array({6}, rng, -0.5, 0.5);
  CHECK(tu::max_grad_rel_err({x, gain, bias}, [](Tape&, const std::vector<Var>& in) {
          return sum(tanh(layer_norm(in[0], in[1], in[2], 1e-5)));
        }) <= 1e-6);

  Tape t;
  Var one = t.leaf(DenseArray::vec({1.0}));
  CHECK_THROWS_AS(layer_norm(one, one, one, 1e-5), std::invalid_argument);
}

TEST_CASE("dropout contract") {
  Rng rng(31);
  Tape t;
  DenseArray xv = tu::random_array({4, 5}, rng);
  Var x = t.leaf(xv);

  CHECK(tu::arrays_equal(dropout(x, 1.0, rng, true).value(), xv));   // keep=1
  CHECK(tu::arrays_equal(dropout(x, 0.4, rng, false).value(), xv));  // inference
  CHECK_THROWS_AS(dropout(x, 0.0, rng, true), std::invalid_argument);
  CHECK_THROWS_AS(dropout(x, 1.5, rng, true), std::invalid_argument);

  // law of large numbers: inverted dropout keeps the mean
  Tape t2;
  Var ones = t2.leaf(DenseArray::full({1000, 1000}, 1.0));
  Rng rng2(77);
  const DenseArray& dropped = dropout(ones, 0.8, rng2, true).value();
  double mean_v = 0.0;
  for (std::int64_t i = 0; i < dropped.size(); ++i) mean_v += dropped[i];
  mean_v /= static_cast<double>(dropped.size());
  CHECK(std::abs(mean_v - 1.0) < 0.01);
}

TEST_CASE("dropout gradient uses the sampled mask") {
  DenseArray xv = DenseArray::vec({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  auto build = [](Tape&, const std::vector<Var>& in) {
    Rng rng(123);  // same mask on every evaluation
    return sum(square(dropout(in[0], 0.5, rng, true)));
  };
  CHECK(tu::max_grad_rel_err({xv}, build) <= 1e-6);
}

TEST_CASE("seeded rng reproducibility and serialization") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  const std::string state = a.serialize();
  Rng c(0);
  c.deserialize(state);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == c.uniform());

  // rough moments
  Rng d(9);
  double m = 0.0, s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = d.normal();
    m += z;
    s += z * z;
  }
  m /= n;
  s = s / n - m * m;
  CHECK(std::abs(m) < 0.02);
  CHECK(s == doctest::Approx(1.0).epsilon(0.03));
}

}  // TEST_SUITE
