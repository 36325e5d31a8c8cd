#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace usjepa {

// Dense row-major tensor. Shapes are small (embeddings, images), so the
// representation is a plain vector plus extents.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), T(0)) {}
  Tensor(std::vector<std::int64_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != count(shape_))
      throw std::invalid_argument("tensor: shape/value count mismatch");
  }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }
  static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape_); }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(int i) const { return shape_.at(i); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::int64_t i) { return data_[i]; }
  const T& operator[](std::int64_t i) const { return data_[i]; }

  // 2-D accessors (rows x cols); most model math lives on matrices.
  std::int64_t rows() const { return ndim() == 2 ? shape_[0] : (ndim() == 1 ? 1 : invalid2d()); }
  std::int64_t cols() const { return ndim() == 2 ? shape_[1] : (ndim() == 1 ? shape_[0] : invalid2d()); }
  T& at(std::int64_t r, std::int64_t c) { return data_[r * cols() + c]; }
  const T& at(std::int64_t r, std::int64_t c) const { return data_[r * cols() + c]; }

  bool is_scalar() const { return size() == 1; }
  T item() const {
    if (!is_scalar()) throw std::invalid_argument("tensor: item() on non-scalar");
    return data_[0];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const;

  std::string shape_str() const;

  static std::int64_t count(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (auto e : s) {
      if (e < 0) throw std::invalid_argument("tensor: negative extent");
      n *= e;
    }
    return n;
  }

 private:
  std::int64_t invalid2d() const { throw std::invalid_argument("tensor: not a matrix"); }
  std::vector<std::int64_t> shape_;
  std::vector<T> data_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

// Elementwise and matrix helpers used by both autograd and plain inference.
template <class T>
void matmul_into(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out,
                 bool transpose_a = false, bool transpose_b = false, bool accumulate = false);

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b,
                 bool transpose_a = false, bool transpose_b = false);

template <class T>
T dot(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace usjepa
