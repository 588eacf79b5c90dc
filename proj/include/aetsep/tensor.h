// Copyright 2026 The aetsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AETSEP_TENSOR_H_
#define AETSEP_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace aetsep {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles. Rank 0 (shape {}) holds a scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Vector(std::vector<double> values);
  static Tensor Filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  int64_t dim(int axis) const { return shape_[axis]; }
  // For rank-2 tensors; rank-1 tensors are viewed as a single row.
  int64_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  int64_t cols() const { return rank() == 0 ? 1 : shape_.back(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }
  double& at(int64_t r, int64_t c) { return data_[r * cols() + c]; }
  double at(int64_t r, int64_t c) const { return data_[r * cols() + c]; }

  // Value of a one-element tensor.
  double item() const;

  bool AllFinite() const;
  bool BitwiseEqual(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Fixed linear map y = A x where every row of A is a short contiguous band of
// coefficients. Used for resampling inside differentiable graphs.
class BandedLinearMap {
 public:
  BandedLinearMap(int64_t in_size, int64_t out_size)
      : in_size_(in_size), out_size_(out_size),
        first_(out_size, 0), offsets_(out_size + 1, 0) {}

  int64_t in_size() const { return in_size_; }
  int64_t out_size() const { return out_size_; }

  // Rows must be appended in order 0, 1, ..., out_size - 1.
  void SetRow(int64_t row, int64_t first_col, std::span<const double> coeffs);

  void Apply(std::span<const double> x, std::span<double> y) const;
  // y += A^T g
  void AccumulateTranspose(std::span<const double> g, std::span<double> y) const;

  std::span<const double> row_coeffs(int64_t row) const;
  int64_t row_first(int64_t row) const { return first_[row]; }

 private:
  int64_t in_size_;
  int64_t out_size_;
  std::vector<int64_t> first_;
  std::vector<int64_t> offsets_;
  std::vector<double> coeffs_;
};

}  // namespace aetsep

#endif  // AETSEP_TENSOR_H_
