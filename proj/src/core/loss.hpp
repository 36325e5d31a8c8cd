#pragma once

#include <string>

#include "core/autograd.hpp"

namespace usjepa {

enum class LossKind { kSmoothL1, kL1 };

inline LossKind loss_kind_from_string(const std::string& name) {
  if (name == "smooth_l1") return LossKind::kSmoothL1;
  if (name == "l1") return LossKind::kL1;
  throw std::invalid_argument("unknown loss kind: " + name);
}

inline std::string to_string(LossKind kind) {
  return kind == LossKind::kSmoothL1 ? "smooth_l1" : "l1";
}

struct LossConfig {
  LossKind kind = LossKind::kSmoothL1;
  double beta = 1.0;

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("loss config: beta must be positive");
  }
};

// Mean over the T targets of the per-target elementwise-mean distance between
// predicted and teacher embeddings.
template <class T>
Var<T> us_jepa_loss(const std::vector<Var<T>>& predictions, const std::vector<Tensor<T>>& targets,
                    const LossConfig& cfg) {
  cfg.validate();
  if (predictions.empty()) throw std::invalid_argument("us_jepa_loss: no targets (T = 0)");
  if (predictions.size() != targets.size())
    throw std::invalid_argument("us_jepa_loss: prediction/target count mismatch");
  Var<T> acc;
  for (size_t i = 0; i < predictions.size(); ++i) {
    Var<T> li = cfg.kind == LossKind::kSmoothL1
                    ? smooth_l1_mean(predictions[i], targets[i], static_cast<T>(cfg.beta))
                    : l1_mean(predictions[i], targets[i]);
    acc = i == 0 ? li : add(acc, li);
  }
  return scale(acc, T(1) / static_cast<T>(predictions.size()));
}

}  // namespace usjepa
