#pragma once

#include <atomic>
#include <functional>

#include "core/frame.hpp"
#include "core/manifest.hpp"
#include "core/region.hpp"

namespace usjepa {

struct LoadedFrame {
  Frame frame;
  RegionMask region;
};

using FrameLoader = std::function<LoadedFrame(const DatasetManifest&, const FrameRecord&)>;

struct PreprocessConfig {
  bool enabled = true;       // artifact inpainting + percentile rescale
  int input_size = 224;      // square resize target; 0 keeps native dims
  double percentile_lo = 2.0;
  double percentile_hi = 98.0;
  double artifact_area_limit = 0.05;
  float artifact_chroma_threshold = 0.15f;
  std::size_t min_region_pixels = 50;
  RegionExtractParams region_params;
};

struct PreprocessStats {
  std::atomic<long> inpainted{0};
  std::atomic<long> inpaint_skipped_large{0};
  std::atomic<long> rescale_skipped_small{0};
};

// Standard intake path: raster load, grayscale, colored-artifact inpainting,
// region mask (cached file or extraction), region-conditioned percentile
// rescale, resize. Pure given (record, config); safe on parallel workers.
LoadedFrame load_and_preprocess(const DatasetManifest& manifest, const FrameRecord& record,
                                const PreprocessConfig& cfg, PreprocessStats* stats = nullptr);

// Applies the post-load stages to an already-decoded frame (used by the
// synthetic path and by tests).
LoadedFrame preprocess_frame(Frame gray, const RegionMask* artifact_mask,
                             const RegionMask* cached_region, const PreprocessConfig& cfg,
                             PreprocessStats* stats = nullptr);

FrameLoader make_loader(const PreprocessConfig& cfg, PreprocessStats* stats = nullptr);

// Runs fn(i) for i in [0, n) on `workers` threads; fn must only touch
// index-disjoint state. workers <= 1 degrades to a serial loop.
void parallel_for(long n, int workers, const std::function<void(long)>& fn);

}  // namespace usjepa
