#include "core/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace usjepa {

template <class T>
bool Tensor<T>::all_finite() const {
  for (T v : data_)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <class T>
std::string Tensor<T>::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

namespace {
template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using CMap = Eigen::Map<const EMat<T>>;
template <class T>
using MMap = Eigen::Map<EMat<T>>;
}  // namespace

template <class T>
void matmul_into(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out,
                 bool transpose_a, bool transpose_b, bool accumulate) {
  if (a.ndim() != 2 || b.ndim() != 2) throw std::invalid_argument("matmul: operands must be matrices");
  const std::int64_t m = transpose_a ? a.cols() : a.rows();
  const std::int64_t k = transpose_a ? a.rows() : a.cols();
  const std::int64_t k2 = transpose_b ? b.cols() : b.rows();
  const std::int64_t n = transpose_b ? b.rows() : b.cols();
  if (k != k2)
    throw std::invalid_argument("matmul: inner dims differ " + a.shape_str() + " x " + b.shape_str());
  if (out.ndim() != 2 || out.rows() != m || out.cols() != n)
    throw std::invalid_argument("matmul: bad output shape");

  CMap<T> ma(a.data(), a.rows(), a.cols());
  CMap<T> mb(b.data(), b.rows(), b.cols());
  MMap<T> mo(out.data(), m, n);
  if (!transpose_a && !transpose_b) {
    if (accumulate) mo.noalias() += ma * mb; else mo.noalias() = ma * mb;
  } else if (transpose_a && !transpose_b) {
    if (accumulate) mo.noalias() += ma.transpose() * mb; else mo.noalias() = ma.transpose() * mb;
  } else if (!transpose_a && transpose_b) {
    if (accumulate) mo.noalias() += ma * mb.transpose(); else mo.noalias() = ma * mb.transpose();
  } else {
    if (accumulate) mo.noalias() += ma.transpose() * mb.transpose();
    else mo.noalias() = ma.transpose() * mb.transpose();
  }
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  const std::int64_t m = transpose_a ? a.cols() : a.rows();
  const std::int64_t n = transpose_b ? b.rows() : b.cols();
  Tensor<T> out({m, n});
  matmul_into(a, b, out, transpose_a, transpose_b, false);
  return out;
}

template <class T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  T s = 0;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::int64_t i = 0; i < a.size(); ++i) s += pa[i] * pb[i];
  return s;
}

template class Tensor<float>;
template class Tensor<double>;
template void matmul_into<float>(const Tensorf&, const Tensorf&, Tensorf&, bool, bool, bool);
template void matmul_into<double>(const Tensord&, const Tensord&, Tensord&, bool, bool, bool);
template Tensorf matmul<float>(const Tensorf&, const Tensorf&, bool, bool);
template Tensord matmul<double>(const Tensord&, const Tensord&, bool, bool);
template float dot<float>(const Tensorf&, const Tensorf&);
template double dot<double>(const Tensord&, const Tensord&);

}  // namespace usjepa
