// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtvae {

// Global validation toggle: when on, array construction rejects NaN/Inf and
// ops perform domain checks. On by default; the trainer switches it off in
// the hot path.
bool checked_mode();
void set_checked_mode(bool on);

struct CheckedModeScope {
  explicit CheckedModeScope(bool on) : prev_(checked_mode()) { set_checked_mode(on); }
  ~CheckedModeScope() { set_checked_mode(prev_); }
  CheckedModeScope(const CheckedModeScope&) = delete;
  CheckedModeScope& operator=(const CheckedModeScope&) = delete;

 private:
  bool prev_;
};

/// Dense row-major array of 64-bit floats, rank 1 or 2.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::int64_t> shape);  // zero-filled
  DenseArray(std::vector<std::int64_t> shape, std::vector<double> data);

  static DenseArray scalar(double v);
  static DenseArray vec(std::vector<double> v);
  static DenseArray mat(std::int64_t r, std::int64_t c, std::vector<double> v);
  static DenseArray zeros_like(const DenseArray& other);
  static DenseArray full(std::vector<std::int64_t> shape, double v);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  // Row/column view: rank-1 arrays are a single row.
  std::int64_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::int64_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 1); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }

  bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const;

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace mtvae
