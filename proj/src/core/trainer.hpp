#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/loader.hpp"
#include "core/loss.hpp"
#include "core/masking.hpp"
#include "core/model.hpp"
#include "core/optim.hpp"
#include "core/sampler.hpp"

namespace usjepa {

template <class T>
struct TrainSample {
  Frame frame;
  MaskSet masks;
  std::shared_ptr<Tensor<T>> teacher;  // null: computed inside the step
};

struct TrainerOptions {
  OptimizerConfig optim;
  LossConfig loss;
  MaskSamplingConfig masking;
  int batch_size = 128;
  int workers = 1;
  std::uint64_t seed = 7;
  std::string out_dir;          // empty disables metrics/checkpoint artifacts
  bool cache_teacher = true;    // static teacher embeddings memoized per record
  std::uint64_t config_hash = 0;
  std::string extra_meta = "{}";
};

struct TrainReport {
  double val_epoch0 = 0.0;
  double best_val = 0.0;
  int best_epoch = -1;
  double final_val = 0.0;
  long fallback_masks = 0;
  long rejected_frames = 0;
  std::vector<double> step_losses;
  std::vector<double> epoch_val;
  std::string best_checkpoint;  // path, when out_dir given
};

// Owns the optimization loop around a ModelStack: weighted sampling, mask
// drawing, teacher targets, backward, AdamW, the EMA update when configured,
// per-epoch validation with frozen masks, and checkpoint selection.
template <class T>
class Trainer {
 public:
  Trainer(ModelStack<T>& stack, TrainerOptions opts);

  TrainReport run(const DatasetManifest& train_manifest, const DatasetManifest& val_manifest,
                  const FrameLoader& loader);

  // One optimization step over an assembled batch; returns the batch loss.
  // Aborts with a diagnostic when the loss turns non-finite.
  double train_step(const std::vector<TrainSample<T>>& batch, double lr, double wd,
                    double ema_momentum);

  // Mean loss over validation samples, forward only.
  double validate(const std::vector<TrainSample<T>>& val_samples);

  AdamW<T>& optimizer() { return *optimizer_; }
  const TrainerOptions& options() const { return opts_; }

 private:
  Tensor<T> teacher_targets(const TrainSample<T>& sample) const;

  ModelStack<T>& stack_;
  TrainerOptions opts_;
  std::unique_ptr<AdamW<T>> optimizer_;
};

}  // namespace usjepa
