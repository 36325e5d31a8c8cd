#pragma once

#include "core/manifest.hpp"
#include "core/rng.hpp"

namespace usjepa {

// min(|D_i|, N_t): the capped contribution of one dataset.
long effective_count(long size, long n_t);

// P(D_i) = min(|D_i|, N_t) / sum_j min(|D_j|, N_t).
std::vector<double> dataset_probs(const std::vector<long>& sizes, long n_t);

struct RecordRef {
  int dataset = 0;
  long index = 0;
};

// Two-stage draw-with-replacement sampler: dataset by capped probability,
// then a uniform record within it. Each draw consumes exactly two RNG values
// so the stream position is independent of which dataset was picked.
class WeightedSampler {
 public:
  WeightedSampler(const DatasetManifest& manifest, std::uint64_t seed);

  RecordRef next_ref();
  const FrameRecord& next_record();

  const std::vector<double>& probabilities() const { return probs_; }
  long epoch_length() const { return epoch_length_; }
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  const DatasetManifest& manifest_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  long epoch_length_ = 0;
  Rng rng_;
};

}  // namespace usjepa
