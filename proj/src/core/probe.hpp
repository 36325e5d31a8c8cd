#pragma once

#include <cstdint>
#include <vector>

#include "core/features.hpp"
#include "core/tensor.hpp"

namespace usjepa {

struct ProbeConfig {
  double lr = 1.0e-3;
  double weight_decay = 1.0e-4;
  int batch_size = 32;
  int max_epochs = 150;
  int patience = 15;  // early-stop epochs without validation-loss improvement
  int num_classes = 0;
};

struct LinearProbe {
  Tensorf w;  // dim x classes
  Tensorf b;  // classes
  int num_classes = 0;
  int best_epoch = -1;
  double best_val_loss = 0.0;

  std::vector<int> predict(const FeatureTable& features) const;
  double mean_loss(const FeatureTable& features, const std::vector<std::int64_t>& indices) const;
};

// Single linear layer on frozen features: AdamW, cosine-annealed lr, early
// stopping on validation loss with best-weight restore. The seed drives
// initialization and batch order. `train_indices` selects (and orders) the
// training rows; pass all rows ascending for the standard probe.
LinearProbe train_probe(const FeatureTable& train, const std::vector<std::int64_t>& train_indices,
                        const FeatureTable& val, const ProbeConfig& cfg, std::uint64_t seed);

// Unweighted mean over classes of per-class F1; a class with no predicted and
// no true positives scores 0.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes);

}  // namespace usjepa
