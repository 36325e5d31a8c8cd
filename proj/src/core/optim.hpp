#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core/autograd.hpp"

namespace usjepa {

struct OptimizerConfig {
  double base_lr = 5.0e-5;
  double start_lr = 5.0e-6;
  double final_lr = 5.0e-7;
  int warmup_epochs = 10;
  int total_epochs = 100;
  double wd_start = 0.04;
  double wd_final = 0.4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (start_lr > base_lr || final_lr > base_lr)
      throw std::invalid_argument("optimizer: start/final lr must not exceed base lr");
    if (warmup_epochs < 0 || warmup_epochs > total_epochs)
      throw std::invalid_argument("optimizer: warmup epochs out of range");
  }
};

// Linear warmup start_lr -> base_lr over the warmup span, then cosine decay
// base_lr -> final_lr. epoch_fraction covers the whole run in [0, 1].
double lr_at(const OptimizerConfig& cfg, double epoch_fraction);

// Cosine ramp wd_start -> wd_final, monotone non-decreasing.
double wd_at(const OptimizerConfig& cfg, double epoch_fraction);

// AdamW with decoupled weight decay: p -= lr*wd*p applied before the moment
// update, moments bias-corrected by the shared step count.
template <class T>
class AdamW {
 public:
  explicit AdamW(std::vector<Parameter<T>*> params, OptimizerConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  // Returns false when a non-finite value appears in any updated parameter.
  bool step(double lr, double wd) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    bool finite = true;
    for (size_t k = 0; k < params_.size(); ++k) {
      Parameter<T>* p = params_[k];
      if (!p->trainable) continue;
      T* w = p->value.data();
      const T* g = p->grad.data();
      T* m = m_[k].data();
      T* v = v_[k].data();
      const double decay = p->decay ? lr * wd : 0.0;
      for (std::int64_t i = 0; i < p->value.size(); ++i) {
        double wi = static_cast<double>(w[i]);
        wi -= decay * wi;
        const double gi = static_cast<double>(g[i]);
        const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        wi -= lr * (mi / c1) / (std::sqrt(vi / c2) + cfg_.epsilon);
        w[i] = static_cast<T>(wi);
        finite = finite && std::isfinite(wi);
      }
    }
    return finite;
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  long step_count() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter<T>*> params_;
  OptimizerConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  long t_ = 0;
};

}  // namespace usjepa
