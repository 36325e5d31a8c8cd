#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/loader.hpp"
#include "core/model.hpp"

namespace usjepa {

// Frozen-backbone features: one mean-pooled patch-token embedding per frame.
struct FeatureTable {
  std::int64_t rows = 0;
  std::int64_t dim = 0;
  std::vector<float> data;  // rows x dim
  std::vector<int> labels;
  std::string split;        // train / val / test
  std::string backbone_id;

  float* row(std::int64_t r) { return data.data() + r * dim; }
  const float* row(std::int64_t r) const { return data.data() + r * dim; }
};

// Applied between preprocessing and feature extraction (corruption hook).
using FrameTransform = std::function<Frame(const Frame&, const RegionMask&, long index)>;

Tensor<float> mean_pool_rows(const Tensor<float>& tokens);

FeatureTable extract_features(const ViTEncoder<float>& backbone, const DatasetManifest& manifest,
                              const FrameLoader& loader, int workers,
                              const std::string& split_tag = "train",
                              const FrameTransform* transform = nullptr);

}  // namespace usjepa
