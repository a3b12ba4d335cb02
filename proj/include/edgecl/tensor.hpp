/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgecl/errors.hpp"

namespace edgecl {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

// Dense row-major float32 array with an optional gradient buffer of the same
// length. Dimension 0 is the batch dimension wherever a batch is implied.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, float fill = 0.0f)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw DimensionError("tensor shape " + to_string(shape_) + " holds " +
                           std::to_string(shape_size(shape_)) + " values, got " +
                           std::to_string(data_.size()));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Elements per batch row (product of all but the leading dimension).
  std::size_t row_size() const {
    return shape_.empty() ? 0 : (shape_[0] == 0 ? shape_size(Shape(shape_.begin() + 1, shape_.end()))
                                                : data_.size() / shape_[0]);
  }
  Shape row_shape() const { return shape_.empty() ? Shape{} : Shape(shape_.begin() + 1, shape_.end()); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const { return grad_.has_value(); }
  std::span<float> grad() {
    if (!grad_) throw StateError("tensor has no gradient buffer");
    return *grad_;
  }
  std::span<const float> grad() const {
    if (!grad_) throw StateError("tensor has no gradient buffer");
    return *grad_;
  }
  // Allocates (zeroed) or zeroes the gradient buffer.
  void zero_grad() {
    if (grad_) {
      std::fill(grad_->begin(), grad_->end(), 0.0f);
    } else {
      grad_.emplace(data_.size(), 0.0f);
    }
  }
  void drop_grad() { grad_.reset(); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  // Copies of batch rows [begin, begin + count).
  Tensor rows(std::size_t begin, std::size_t count) const {
    if (rank() == 0 || begin + count > shape_[0]) {
      throw DimensionError("row range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                           ") outside tensor " + to_string(shape_));
    }
    Shape s = shape_;
    s[0] = count;
    const std::size_t rs = row_size();
    return Tensor(std::move(s), std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(begin * rs),
                                                   data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * rs)));
  }

  // Gathers the listed batch rows in order.
  Tensor gather_rows(std::span<const std::size_t> index) const {
    Shape s = shape_;
    s[0] = index.size();
    const std::size_t rs = row_size();
    std::vector<float> out;
    out.reserve(index.size() * rs);
    for (std::size_t r : index) {
      if (r >= shape_[0]) throw DimensionError("row index " + std::to_string(r) + " outside " + to_string(shape_));
      out.insert(out.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * rs),
                 data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * rs));
    }
    return Tensor(std::move(s), std::move(out));
  }

  std::span<const float> row(std::size_t r) const { return std::span<const float>(data_).subspan(r * row_size(), row_size()); }
  std::span<float> row(std::size_t r) { return std::span<float>(data_).subspan(r * row_size(), row_size()); }

  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  Shape shape_;
  std::vector<float> data_;
  std::optional<std::vector<float>> grad_;
};

// Concatenation along the batch dimension. Either side may have zero rows, in
// which case only its trailing shape is checked.
inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.row_shape() != b.row_shape()) {
    throw DimensionError("cannot concatenate " + to_string(a.shape()) + " with " + to_string(b.shape()));
  }
  Shape s = a.shape();
  s[0] = a.dim(0) + b.dim(0);
  std::vector<float> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return Tensor(std::move(s), std::move(out));
}

// Stacks equally shaped row tensors (no batch dim) into [n, ...].
inline Tensor stack(std::span<const Tensor> items, const Shape& row_shape) {
  Shape s{items.size()};
  s.insert(s.end(), row_shape.begin(), row_shape.end());
  std::vector<float> out;
  out.reserve(shape_size(s));
  for (const Tensor& t : items) {
    if (t.shape() != row_shape) {
      throw DimensionError("stack expected " + to_string(row_shape) + ", got " + to_string(t.shape()));
    }
    out.insert(out.end(), t.values().begin(), t.values().end());
  }
  return Tensor(std::move(s), std::move(out));
}

inline void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}

}  // namespace edgecl
