#include "core/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace usjepa {

long effective_count(long size, long n_t) {
  if (size < 0) throw std::invalid_argument("effective_count: negative size");
  return std::min(size, n_t);
}

std::vector<double> dataset_probs(const std::vector<long>& sizes, long n_t) {
  double total = 0.0;
  for (long s : sizes) total += static_cast<double>(effective_count(s, n_t));
  if (total <= 0.0) throw std::invalid_argument("dataset_probs: all sizes are zero");
  std::vector<double> probs;
  probs.reserve(sizes.size());
  for (long s : sizes) probs.push_back(static_cast<double>(effective_count(s, n_t)) / total);
  return probs;
}

WeightedSampler::WeightedSampler(const DatasetManifest& manifest, std::uint64_t seed)
    : manifest_(manifest), rng_(derive_seed(seed, "weighted-sampler")) {
  manifest.validate();
  probs_ = dataset_probs(manifest.sizes(), manifest.n_t);
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
  for (long s : manifest.sizes()) epoch_length_ += effective_count(s, manifest.n_t);
}

RecordRef WeightedSampler::next_ref() {
  const double u = uniform_double(rng_);
  int dataset = 0;
  while (dataset + 1 < static_cast<int>(cumulative_.size()) && u >= cumulative_[dataset]) ++dataset;
  const auto n = static_cast<std::uint64_t>(manifest_.entries[dataset].size());
  const long index = static_cast<long>(uniform_index(rng_, n));
  return {dataset, index};
}

const FrameRecord& WeightedSampler::next_record() {
  const RecordRef ref = next_ref();
  return manifest_.record(ref.dataset, ref.index);
}

}  // namespace usjepa
