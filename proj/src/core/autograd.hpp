#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "core/tensor.hpp"

namespace usjepa {

// A model weight: value plus accumulated gradient. Frozen parameters keep a
// zero gradient through any backward pass. `decay` marks participation in
// decoupled weight decay (biases, norm gains and mask tokens opt out).
template <class T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
  bool decay = true;

  Parameter() = default;
  explicit Parameter(Tensor<T> v, bool trainable_ = true, bool decay_ = true)
      : value(std::move(v)), grad(Tensor<T>(value.shape())), trainable(trainable_), decay(decay_) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <class T>
struct TapeNode {
  Tensor<T> value;
  Tensor<T> grad;
  bool needs_grad = false;
  bool grad_live = false;
  std::function<void()> backprop;  // pushes this node's grad into its parents
};

template <class T>
void ensure_grad(TapeNode<T>* n) {
  if (!n->grad_live) {
    n->grad = Tensor<T>(n->value.shape());
    n->grad_live = true;
  }
}

template <class T>
class Tape;

// Lightweight handle into a tape; valid while the tape is alive.
template <class T>
class Var {
 public:
  Var() = default;
  Var(TapeNode<T>* n, Tape<T>* t) : node_(n), tape_(t) {}
  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  TapeNode<T>* node() const { return node_; }
  Tape<T>* tape() const { return tape_; }
  bool needs_grad() const { return node_->needs_grad; }

 private:
  TapeNode<T>* node_ = nullptr;
  Tape<T>* tape_ = nullptr;
};

// Reverse-mode tape. Nodes are recorded in creation order, which is a valid
// topological order, and backward() walks it in reverse. One tape per
// recorded computation; parameters live outside and outlive the tape.
template <class T>
class Tape {
 public:
  Var<T> constant(Tensor<T> v) { return make(std::move(v), false); }

  Var<T> leaf(Parameter<T>& p) {
    Var<T> v = make(p.value, p.trainable);
    if (p.trainable) leaves_.push_back({v.node(), &p});
    return v;
  }

  // Seeds d(loss)/d(loss) = seed and accumulates into every trainable
  // parameter reached by the recorded computation.
  void backward(Var<T> loss, T seed = T(1)) {
    if (!loss.value().is_scalar())
      throw std::invalid_argument("backward: loss must be a scalar tensor");
    ensure_grad(loss.node());
    loss.node()->grad[0] += seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      TapeNode<T>* n = it->get();
      if (n->needs_grad && n->grad_live && n->backprop) n->backprop();
    }
    for (auto& [node, param] : leaves_) {
      if (!node->grad_live) continue;
      T* dst = param->grad.data();
      const T* src = node->grad.data();
      for (std::int64_t i = 0; i < param->grad.size(); ++i) dst[i] += src[i];
    }
  }

  TapeNode<T>* new_node(Tensor<T> value, bool needs_grad) {
    nodes_.push_back(std::make_unique<TapeNode<T>>());
    TapeNode<T>* n = nodes_.back().get();
    n->value = std::move(value);
    n->needs_grad = needs_grad;
    return n;
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  Var<T> make(Tensor<T> v, bool needs_grad) { return Var<T>(new_node(std::move(v), needs_grad), this); }

  std::vector<std::unique_ptr<TapeNode<T>>> nodes_;
  std::vector<std::pair<TapeNode<T>*, Parameter<T>*>> leaves_;
};

namespace detail {

template <class T>
void accumulate(TapeNode<T>* n, const Tensor<T>& delta) {
  if (!n->needs_grad) return;
  ensure_grad(n);
  T* dst = n->grad.data();
  const T* src = delta.data();
  for (std::int64_t i = 0; i < delta.size(); ++i) dst[i] += src[i];
}

template <class T, class Fn>
void accumulate_map(TapeNode<T>* n, std::int64_t count, Fn&& fn) {
  if (!n->needs_grad) return;
  ensure_grad(n);
  T* dst = n->grad.data();
  for (std::int64_t i = 0; i < count; ++i) dst[i] += fn(i);
}

template <class T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.value().shape_str() +
                                " vs " + b.value().shape_str());
}

}  // namespace detail

// ---- elementwise ----

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += pb[i];
  bool ng = a.needs_grad() || b.needs_grad();
  auto* n = a.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *na = a.node(), *nb = b.node();
    n->backprop = [n, na, nb] {
      detail::accumulate<T>(na, n->grad);
      detail::accumulate<T>(nb, n->grad);
    };
  }
  return {n, a.tape()};
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::check_same_shape(a, b, "sub");
  Tensor<T> out = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
  bool ng = a.needs_grad() || b.needs_grad();
  auto* n = a.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *na = a.node(), *nb = b.node();
    n->backprop = [n, na, nb] {
      detail::accumulate<T>(na, n->grad);
      detail::accumulate_map<T>(nb, n->grad.size(), [&](std::int64_t i) { return -n->grad[i]; });
    };
  }
  return {n, a.tape()};
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  const T* pb = b.value().data();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
  bool ng = a.needs_grad() || b.needs_grad();
  auto* n = a.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *na = a.node(), *nb = b.node();
    n->backprop = [n, na, nb] {
      detail::accumulate_map<T>(na, n->grad.size(),
                                [&](std::int64_t i) { return n->grad[i] * nb->value[i]; });
      detail::accumulate_map<T>(nb, n->grad.size(),
                                [&](std::int64_t i) { return n->grad[i] * na->value[i]; });
    };
  }
  return {n, a.tape()};
}

template <class T>
Var<T> scale(Var<T> a, T c) {
  Tensor<T> out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  auto* n = a.tape()->new_node(std::move(out), a.needs_grad());
  if (a.needs_grad()) {
    auto* na = a.node();
    n->backprop = [n, na, c] {
      detail::accumulate_map<T>(na, n->grad.size(), [&](std::int64_t i) { return c * n->grad[i]; });
    };
  }
  return {n, a.tape()};
}

// ---- matrix ----

template <class T>
Var<T> matmul(Var<T> a, Var<T> b, bool ta = false, bool tb = false) {
  if (ta && tb) throw std::invalid_argument("matmul: double transpose unsupported");
  Tensor<T> out = matmul(a.value(), b.value(), ta, tb);
  bool ng = a.needs_grad() || b.needs_grad();
  auto* n = a.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *na = a.node(), *nb = b.node();
    n->backprop = [n, na, nb, ta, tb] {
      if (na->needs_grad) {
        ensure_grad(na);
        if (!ta && !tb) matmul_into(n->grad, nb->value, na->grad, false, true, true);
        else if (!ta && tb) matmul_into(n->grad, nb->value, na->grad, false, false, true);
        else matmul_into(nb->value, n->grad, na->grad, false, true, true);  // ta && !tb
      }
      if (nb->needs_grad) {
        ensure_grad(nb);
        if (!ta && !tb) matmul_into(na->value, n->grad, nb->grad, true, false, true);
        else if (!ta && tb) matmul_into(n->grad, na->value, nb->grad, true, false, true);
        else matmul_into(na->value, n->grad, nb->grad, false, false, true);  // ta && !tb
      }
    };
  }
  return {n, a.tape()};
}

// X [N,D] + v [D] broadcast over rows.
template <class T>
Var<T> add_rowvec(Var<T> x, Var<T> v) {
  const auto N = x.value().rows(), D = x.value().cols();
  if (v.value().size() != D) throw std::invalid_argument("add_rowvec: width mismatch");
  Tensor<T> out = x.value();
  const T* pv = v.value().data();
  for (std::int64_t r = 0; r < N; ++r)
    for (std::int64_t c = 0; c < D; ++c) out[r * D + c] += pv[c];
  bool ng = x.needs_grad() || v.needs_grad();
  auto* n = x.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *nx = x.node(), *nv = v.node();
    n->backprop = [n, nx, nv, N, D] {
      detail::accumulate<T>(nx, n->grad);
      if (nv->needs_grad) {
        ensure_grad(nv);
        for (std::int64_t r = 0; r < N; ++r)
          for (std::int64_t c = 0; c < D; ++c) nv->grad[c] += n->grad[r * D + c];
      }
    };
  }
  return {n, x.tape()};
}

// v [D] replicated to [n_rows, D].
template <class T>
Var<T> broadcast_row(Var<T> v, std::int64_t n_rows) {
  const std::int64_t D = v.value().size();
  Tensor<T> out({n_rows, D});
  for (std::int64_t r = 0; r < n_rows; ++r)
    for (std::int64_t c = 0; c < D; ++c) out[r * D + c] = v.value()[c];
  auto* n = v.tape()->new_node(std::move(out), v.needs_grad());
  if (v.needs_grad()) {
    auto* nv = v.node();
    n->backprop = [n, nv, n_rows, D] {
      ensure_grad(nv);
      for (std::int64_t r = 0; r < n_rows; ++r)
        for (std::int64_t c = 0; c < D; ++c) nv->grad[c] += n->grad[r * D + c];
    };
  }
  return {n, v.tape()};
}

template <class T>
Var<T> slice_rows(Var<T> x, std::int64_t r0, std::int64_t r1) {
  const auto N = x.value().rows(), D = x.value().cols();
  if (r0 < 0 || r1 > N || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
  Tensor<T> out({r1 - r0, D});
  std::copy(x.value().data() + r0 * D, x.value().data() + r1 * D, out.data());
  auto* n = x.tape()->new_node(std::move(out), x.needs_grad());
  if (x.needs_grad()) {
    auto* nx = x.node();
    n->backprop = [n, nx, r0, D] {
      ensure_grad(nx);
      for (std::int64_t i = 0; i < n->grad.size(); ++i) nx->grad[r0 * D + i] += n->grad[i];
    };
  }
  return {n, x.tape()};
}

template <class T>
Var<T> slice_cols(Var<T> x, std::int64_t c0, std::int64_t c1) {
  const auto N = x.value().rows(), D = x.value().cols();
  if (c0 < 0 || c1 > D || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  const std::int64_t W = c1 - c0;
  Tensor<T> out({N, W});
  for (std::int64_t r = 0; r < N; ++r)
    std::copy(x.value().data() + r * D + c0, x.value().data() + r * D + c1, out.data() + r * W);
  auto* n = x.tape()->new_node(std::move(out), x.needs_grad());
  if (x.needs_grad()) {
    auto* nx = x.node();
    n->backprop = [n, nx, c0, D, W] {
      ensure_grad(nx);
      const std::int64_t N2 = n->grad.rows();
      for (std::int64_t r = 0; r < N2; ++r)
        for (std::int64_t c = 0; c < W; ++c) nx->grad[r * D + c0 + c] += n->grad[r * W + c];
    };
  }
  return {n, x.tape()};
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: empty");
  const std::int64_t D = xs[0].value().cols();
  std::int64_t N = 0;
  bool ng = false;
  for (const auto& x : xs) {
    if (x.value().cols() != D) throw std::invalid_argument("concat_rows: width mismatch");
    N += x.value().rows();
    ng = ng || x.needs_grad();
  }
  Tensor<T> out({N, D});
  std::int64_t r = 0;
  for (const auto& x : xs) {
    std::copy(x.value().data(), x.value().data() + x.value().size(), out.data() + r * D);
    r += x.value().rows();
  }
  auto* n = xs[0].tape()->new_node(std::move(out), ng);
  if (ng) {
    std::vector<TapeNode<T>*> parents;
    for (const auto& x : xs) parents.push_back(x.node());
    n->backprop = [n, parents, D] {
      std::int64_t r0 = 0;
      for (auto* p : parents) {
        const std::int64_t rows = p->value.rows();
        if (p->needs_grad) {
          ensure_grad(p);
          for (std::int64_t i = 0; i < rows * D; ++i) p->grad[i] += n->grad[r0 * D + i];
        }
        r0 += rows;
      }
    };
  }
  return {n, xs[0].tape()};
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty");
  const std::int64_t N = xs[0].value().rows();
  std::int64_t D = 0;
  bool ng = false;
  for (const auto& x : xs) {
    if (x.value().rows() != N) throw std::invalid_argument("concat_cols: height mismatch");
    D += x.value().cols();
    ng = ng || x.needs_grad();
  }
  Tensor<T> out({N, D});
  std::int64_t c0 = 0;
  for (const auto& x : xs) {
    const std::int64_t w = x.value().cols();
    for (std::int64_t r = 0; r < N; ++r)
      std::copy(x.value().data() + r * w, x.value().data() + (r + 1) * w, out.data() + r * D + c0);
    c0 += w;
  }
  auto* n = xs[0].tape()->new_node(std::move(out), ng);
  if (ng) {
    std::vector<TapeNode<T>*> parents;
    for (const auto& x : xs) parents.push_back(x.node());
    n->backprop = [n, parents, N, D] {
      std::int64_t c = 0;
      for (auto* p : parents) {
        const std::int64_t w = p->value.cols();
        if (p->needs_grad) {
          ensure_grad(p);
          for (std::int64_t r = 0; r < N; ++r)
            for (std::int64_t j = 0; j < w; ++j) p->grad[r * w + j] += n->grad[r * D + c + j];
        }
        c += w;
      }
    };
  }
  return {n, xs[0].tape()};
}

// ---- nonlinearities ----

// Exact GELU: x * Phi(x).
template <class T>
Var<T> gelu(Var<T> x) {
  Tensor<T> out = x.value();
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const double v = static_cast<double>(out[i]);
    out[i] = static_cast<T>(v * 0.5 * (1.0 + std::erf(v * 0.7071067811865475)));
  }
  auto* n = x.tape()->new_node(std::move(out), x.needs_grad());
  if (x.needs_grad()) {
    auto* nx = x.node();
    n->backprop = [n, nx] {
      detail::accumulate_map<T>(nx, n->grad.size(), [&](std::int64_t i) {
        const double v = static_cast<double>(nx->value[i]);
        const double phi = std::exp(-0.5 * v * v) * 0.3989422804014327;
        const double Phi = 0.5 * (1.0 + std::erf(v * 0.7071067811865475));
        return n->grad[i] * static_cast<T>(Phi + v * phi);
      });
    };
  }
  return {n, x.tape()};
}

template <class T>
Var<T> softmax_rows(Var<T> x) {
  const auto N = x.value().rows(), D = x.value().cols();
  Tensor<T> out = x.value();
  for (std::int64_t r = 0; r < N; ++r) {
    T* row = out.data() + r * D;
    T mx = row[0];
    for (std::int64_t c = 1; c < D; ++c) mx = std::max(mx, row[c]);
    T sum = 0;
    for (std::int64_t c = 0; c < D; ++c) {
      row[c] = static_cast<T>(std::exp(static_cast<double>(row[c] - mx)));
      sum += row[c];
    }
    for (std::int64_t c = 0; c < D; ++c) row[c] /= sum;
  }
  auto* n = x.tape()->new_node(std::move(out), x.needs_grad());
  if (x.needs_grad()) {
    auto* nx = x.node();
    n->backprop = [n, nx, N, D] {
      ensure_grad(nx);
      for (std::int64_t r = 0; r < N; ++r) {
        const T* y = n->value.data() + r * D;
        const T* dy = n->grad.data() + r * D;
        T dotv = 0;
        for (std::int64_t c = 0; c < D; ++c) dotv += dy[c] * y[c];
        T* dx = nx->grad.data() + r * D;
        for (std::int64_t c = 0; c < D; ++c) dx[c] += y[c] * (dy[c] - dotv);
      }
    };
  }
  return {n, x.tape()};
}

// Row-wise layer normalization with learned gain/bias.
template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  const auto N = x.value().rows(), D = x.value().cols();
  if (gamma.value().size() != D || beta.value().size() != D)
    throw std::invalid_argument("layer_norm: gain/bias width mismatch");
  Tensor<T> out({N, D});
  auto xhat = std::make_shared<Tensor<T>>(std::vector<std::int64_t>{N, D});
  auto inv_std = std::make_shared<Tensor<T>>(std::vector<std::int64_t>{N});
  for (std::int64_t r = 0; r < N; ++r) {
    const T* row = x.value().data() + r * D;
    T mean = 0;
    for (std::int64_t c = 0; c < D; ++c) mean += row[c];
    mean /= static_cast<T>(D);
    T var = 0;
    for (std::int64_t c = 0; c < D; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(D);
    const T istd = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = istd;
    for (std::int64_t c = 0; c < D; ++c) {
      const T xh = (row[c] - mean) * istd;
      (*xhat)[r * D + c] = xh;
      out[r * D + c] = gamma.value()[c] * xh + beta.value()[c];
    }
  }
  bool ng = x.needs_grad() || gamma.needs_grad() || beta.needs_grad();
  auto* n = x.tape()->new_node(std::move(out), ng);
  if (ng) {
    auto *nx = x.node(), *ngm = gamma.node(), *nbt = beta.node();
    n->backprop = [n, nx, ngm, nbt, xhat, inv_std, N, D] {
      for (std::int64_t r = 0; r < N; ++r) {
        const T* dy = n->grad.data() + r * D;
        const T* xh = xhat->data() + r * D;
        if (ngm->needs_grad) {
          ensure_grad(ngm);
          for (std::int64_t c = 0; c < D; ++c) ngm->grad[c] += dy[c] * xh[c];
        }
        if (nbt->needs_grad) {
          ensure_grad(nbt);
          for (std::int64_t c = 0; c < D; ++c) nbt->grad[c] += dy[c];
        }
        if (nx->needs_grad) {
          ensure_grad(nx);
          T mean_g = 0, mean_gx = 0;
          for (std::int64_t c = 0; c < D; ++c) {
            const T g = dy[c] * ngm->value[c];
            mean_g += g;
            mean_gx += g * xh[c];
          }
          mean_g /= static_cast<T>(D);
          mean_gx /= static_cast<T>(D);
          T* dx = nx->grad.data() + r * D;
          for (std::int64_t c = 0; c < D; ++c) {
            const T g = dy[c] * ngm->value[c];
            dx[c] += (g - mean_g - xh[c] * mean_gx) * (*inv_std)[r];
          }
        }
      }
    };
  }
  return {n, x.tape()};
}

// ---- reductions & losses ----

template <class T>
Var<T> sum_all(Var<T> x) {
  T s = 0;
  for (std::int64_t i = 0; i < x.value().size(); ++i) s += x.value()[i];
  auto* n = x.tape()->new_node(Tensor<T>::scalar(s), x.needs_grad());
  if (x.needs_grad()) {
    auto* nx = x.node();
    n->backprop = [n, nx] {
      detail::accumulate_map<T>(nx, nx->value.size(), [&](std::int64_t) { return n->grad[0]; });
    };
  }
  return {n, x.tape()};
}

template <class T>
Var<T> mean_all(Var<T> x) {
  return scale(sum_all(x), T(1) / static_cast<T>(x.value().size()));
}

// Elementwise-mean Smooth L1 against a constant target.
template <class T>
Var<T> smooth_l1_mean(Var<T> pred, const Tensor<T>& target, T beta) {
  if (!pred.value().same_shape(target)) throw std::invalid_argument("smooth_l1: shape mismatch");
  if (!(beta > T(0))) throw std::invalid_argument("smooth_l1: beta must be positive");
  const std::int64_t count = pred.value().size();
  T acc = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    const T d = pred.value()[i] - target[i];
    const T ad = std::abs(d);
    acc += ad < beta ? T(0.5) * d * d / beta : ad - T(0.5) * beta;
  }
  auto* n = pred.tape()->new_node(Tensor<T>::scalar(acc / static_cast<T>(count)), pred.needs_grad());
  if (pred.needs_grad()) {
    auto* np = pred.node();
    auto tgt = std::make_shared<Tensor<T>>(target);
    n->backprop = [n, np, tgt, beta, count] {
      const T g = n->grad[0] / static_cast<T>(count);
      detail::accumulate_map<T>(np, count, [&](std::int64_t i) {
        const T d = np->value[i] - (*tgt)[i];
        if (std::abs(d) < beta) return g * d / beta;
        return d > T(0) ? g : -g;
      });
    };
  }
  return {n, pred.tape()};
}

// Elementwise-mean L1 against a constant target (zero subgradient at 0).
template <class T>
Var<T> l1_mean(Var<T> pred, const Tensor<T>& target) {
  if (!pred.value().same_shape(target)) throw std::invalid_argument("l1: shape mismatch");
  const std::int64_t count = pred.value().size();
  T acc = 0;
  for (std::int64_t i = 0; i < count; ++i) acc += std::abs(pred.value()[i] - target[i]);
  auto* n = pred.tape()->new_node(Tensor<T>::scalar(acc / static_cast<T>(count)), pred.needs_grad());
  if (pred.needs_grad()) {
    auto* np = pred.node();
    auto tgt = std::make_shared<Tensor<T>>(target);
    n->backprop = [n, np, tgt, count] {
      const T g = n->grad[0] / static_cast<T>(count);
      detail::accumulate_map<T>(np, count, [&](std::int64_t i) {
        const T d = np->value[i] - (*tgt)[i];
        return d > T(0) ? g : (d < T(0) ? -g : T(0));
      });
    };
  }
  return {n, pred.tape()};
}

// Mean cross-entropy over rows of logits, labels in {0..K-1}.
template <class T>
Var<T> cross_entropy_mean(Var<T> logits, const std::vector<int>& labels) {
  const auto N = logits.value().rows(), K = logits.value().cols();
  if (static_cast<std::int64_t>(labels.size()) != N)
    throw std::invalid_argument("cross_entropy: label count mismatch");
  auto probs = std::make_shared<Tensor<T>>(std::vector<std::int64_t>{N, K});
  T acc = 0;
  for (std::int64_t r = 0; r < N; ++r) {
    const int y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= K) throw std::invalid_argument("cross_entropy: label out of range");
    const T* row = logits.value().data() + r * K;
    T mx = row[0];
    for (std::int64_t c = 1; c < K; ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (std::int64_t c = 0; c < K; ++c) sum += std::exp(static_cast<double>(row[c] - mx));
    const double lse = std::log(sum) + static_cast<double>(mx);
    acc += static_cast<T>(lse - static_cast<double>(row[y]));
    for (std::int64_t c = 0; c < K; ++c)
      (*probs)[r * K + c] = static_cast<T>(std::exp(static_cast<double>(row[c]) - lse));
  }
  auto* n = logits.tape()->new_node(Tensor<T>::scalar(acc / static_cast<T>(N)), logits.needs_grad());
  if (logits.needs_grad()) {
    auto* nl = logits.node();
    auto lab = std::make_shared<std::vector<int>>(labels);
    n->backprop = [n, nl, probs, lab, N, K] {
      ensure_grad(nl);
      const T g = n->grad[0] / static_cast<T>(N);
      for (std::int64_t r = 0; r < N; ++r)
        for (std::int64_t c = 0; c < K; ++c) {
          T p = (*probs)[r * K + c];
          if (c == (*lab)[static_cast<size_t>(r)]) p -= T(1);
          nl->grad[r * K + c] += g * p;
        }
    };
  }
  return {n, logits.tape()};
}

// x @ W + b
template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  return add_rowvec(matmul(x, w), b);
}

}  // namespace usjepa
