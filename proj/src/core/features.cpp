#include "core/features.hpp"

#include <stdexcept>

namespace usjepa {

Tensor<float> mean_pool_rows(const Tensor<float>& tokens) {
  const auto n = tokens.rows(), d = tokens.cols();
  Tensor<float> out({d});
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < d; ++c) out[c] += tokens.at(r, c);
  const float inv = 1.0f / static_cast<float>(n);
  for (std::int64_t c = 0; c < d; ++c) out[c] *= inv;
  return out;
}

FeatureTable extract_features(const ViTEncoder<float>& backbone, const DatasetManifest& manifest,
                              const FrameLoader& loader, int workers,
                              const std::string& split_tag, const FrameTransform* transform) {
  std::vector<std::pair<int, long>> refs;
  for (size_t d = 0; d < manifest.entries.size(); ++d)
    for (long i = 0; i < manifest.entries[d].size(); ++i)
      refs.emplace_back(static_cast<int>(d), i);
  if (refs.empty()) throw std::invalid_argument("extract_features: empty manifest");

  FeatureTable table;
  table.rows = static_cast<std::int64_t>(refs.size());
  table.dim = backbone.config().embed_dim;
  table.data.assign(static_cast<size_t>(table.rows * table.dim), 0.0f);
  table.labels.assign(refs.size(), -1);
  table.split = split_tag;

  parallel_for(static_cast<long>(refs.size()), workers, [&](long i) {
    const auto [d, idx] = refs[static_cast<size_t>(i)];
    const FrameRecord& rec = manifest.record(d, idx);
    LoadedFrame lf = loader(manifest, rec);
    if (transform && *transform) lf.frame = (*transform)(lf.frame, lf.region, i);
    const Tensor<float> tokens = backbone.encode_all(lf.frame, backbone.grid_for(lf.frame));
    const Tensor<float> pooled = mean_pool_rows(tokens);
    std::copy(pooled.data(), pooled.data() + table.dim, table.row(i));
    table.labels[static_cast<size_t>(i)] = rec.label;
  });
  return table;
}

}  // namespace usjepa
