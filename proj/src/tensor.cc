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

#include "aetsep/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

#include "aetsep/error.h"

namespace aetsep {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(NumElements(shape_), 0.0) {
  for (int64_t d : shape_) {
    if (d < 0) throw Error(ErrorCode::kShapeError, "negative extent");
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (NumElements(shape_) != static_cast<int64_t>(data_.size())) {
    throw Error(ErrorCode::kShapeError,
                "shape " + ShapeToString(shape_) + " does not match " +
                    std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Vector(std::vector<double> values) {
  const auto n = static_cast<int64_t>(values.size());
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorCode::kNotScalar,
                "tensor of shape " + ShapeToString(shape_) + " is not a scalar");
  }
  return data_[0];
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::BitwiseEqual(const Tensor& other) const {
  return shape_ == other.shape_ && data_.size() == other.data_.size() &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(double)) == 0);
}

void BandedLinearMap::SetRow(int64_t row, int64_t first_col,
                             std::span<const double> coeffs) {
  if (row < 0 || row >= out_size_ ||
      static_cast<int64_t>(coeffs_.size()) != offsets_[row]) {
    throw Error(ErrorCode::kShapeError, "banded map rows must be set in order");
  }
  if (first_col < 0 ||
      first_col + static_cast<int64_t>(coeffs.size()) > in_size_) {
    throw Error(ErrorCode::kShapeError, "banded map row exceeds input size");
  }
  first_[row] = first_col;
  coeffs_.insert(coeffs_.end(), coeffs.begin(), coeffs.end());
  offsets_[row + 1] = static_cast<int64_t>(coeffs_.size());
}

std::span<const double> BandedLinearMap::row_coeffs(int64_t row) const {
  return std::span<const double>(coeffs_).subspan(
      offsets_[row], offsets_[row + 1] - offsets_[row]);
}

void BandedLinearMap::Apply(std::span<const double> x,
                            std::span<double> y) const {
  for (int64_t r = 0; r < out_size_; ++r) {
    const double* xs = x.data() + first_[r];
    double acc = 0.0;
    for (int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      acc += coeffs_[k] * xs[k - offsets_[r]];
    }
    y[r] = acc;
  }
}

void BandedLinearMap::AccumulateTranspose(std::span<const double> g,
                                          std::span<double> y) const {
  for (int64_t r = 0; r < out_size_; ++r) {
    double* ys = y.data() + first_[r];
    for (int64_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      ys[k - offsets_[r]] += coeffs_[k] * g[r];
    }
  }
}

}  // namespace aetsep
