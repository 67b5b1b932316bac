// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/array.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mtvae {

namespace {
std::atomic<bool> g_checked{true};

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw std::invalid_argument("DenseArray: non-positive dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }
void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

DenseArray::DenseArray(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(shape_product(shape_)), 0.0);
}

DenseArray::DenseArray(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw std::invalid_argument("DenseArray: shape " + shape_to_string(shape_) + " does not match data length " +
                                std::to_string(data_.size()));
  }
  if (checked_mode() && !all_finite()) {
    throw std::invalid_argument("DenseArray: non-finite entry rejected in checked mode");
  }
}

DenseArray DenseArray::scalar(double v) { return DenseArray({1}, {v}); }

DenseArray DenseArray::vec(std::vector<double> v) {
  auto n = static_cast<std::int64_t>(v.size());
  return DenseArray({n}, std::move(v));
}

DenseArray DenseArray::mat(std::int64_t r, std::int64_t c, std::vector<double> v) {
  return DenseArray({r, c}, std::move(v));
}

DenseArray DenseArray::zeros_like(const DenseArray& other) { return DenseArray(other.shape_); }

DenseArray DenseArray::full(std::vector<std::int64_t> shape, double v) {
  DenseArray a(std::move(shape));
  for (auto& x : a.data_) x = v;
  return a;
}

bool DenseArray::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string DenseArray::shape_str() const { return shape_to_string(shape_); }

}  // namespace mtvae
