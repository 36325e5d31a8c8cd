#include "core/loader.hpp"

#include <mutex>
#include <stdexcept>
#include <thread>

#include "core/image_io.hpp"

namespace usjepa {

LoadedFrame preprocess_frame(Frame gray, const RegionMask* artifact_mask,
                             const RegionMask* cached_region, const PreprocessConfig& cfg,
                             PreprocessStats* stats) {
  if (cfg.enabled && artifact_mask && !artifact_mask->empty_mask()) {
    bool applied = false;
    gray = inpaint_artifacts(gray, *artifact_mask, cfg.artifact_area_limit, 1e-4, 20000, &applied);
    if (stats) (applied ? stats->inpainted : stats->inpaint_skipped_large)++;
  }

  RegionMask region =
      cached_region ? *cached_region : extract_region_mask(gray, cfg.region_params);
  if (region.height != gray.height || region.width != gray.width)
    throw std::runtime_error("preprocess: cached region dims differ from frame");

  if (cfg.enabled) {
    bool applied = false;
    gray = percentile_rescale(gray, region, cfg.percentile_lo, cfg.percentile_hi,
                              cfg.min_region_pixels, &applied);
    if (stats && !applied) stats->rescale_skipped_small++;
  }

  if (cfg.input_size > 0 && (gray.height != cfg.input_size || gray.width != cfg.input_size)) {
    gray = resize_bilinear(gray, cfg.input_size, cfg.input_size);
    region = resize_nearest(region, cfg.input_size, cfg.input_size);
  }
  return {std::move(gray), std::move(region)};
}

LoadedFrame load_and_preprocess(const DatasetManifest& manifest, const FrameRecord& record,
                                const PreprocessConfig& cfg, PreprocessStats* stats) {
  const RasterImage raster = load_raster(manifest.resolve(record));
  RegionMask artifacts;
  if (raster.channels == 3 && cfg.enabled)
    artifacts = detect_color_artifacts(raster, cfg.artifact_chroma_threshold);
  Frame gray = to_grayscale(raster);

  RegionMask cached;
  const RegionMask* cached_ptr = nullptr;
  const std::string mask_path = manifest.resolve_mask(record);
  if (!mask_path.empty()) {
    cached = load_pbm(mask_path);
    cached_ptr = &cached;
  }
  return preprocess_frame(std::move(gray), artifacts.bits.empty() ? nullptr : &artifacts,
                          cached_ptr, cfg, stats);
}

FrameLoader make_loader(const PreprocessConfig& cfg, PreprocessStats* stats) {
  return [cfg, stats](const DatasetManifest& manifest, const FrameRecord& record) {
    return load_and_preprocess(manifest, record, cfg, stats);
  };
}

void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  const int nthreads = static_cast<int>(std::min<long>(workers, n));
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mx;
  pool.reserve(static_cast<size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      long i;
      while ((i = next.fetch_add(1)) < n) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mx);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace usjepa
