#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image_io.hpp"

namespace usjepa {

// Single-channel image with pixel values in [0,1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Frame() = default;
  Frame(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0.0f) {}

  float& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  float at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return pixels.size(); }
  bool in_unit_range() const;
};

// Binary mask paired with a Frame of the same dimensions.
struct RegionMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  RegionMask() = default;
  RegionMask(int h, int w) : height(h), width(w), bits(static_cast<size_t>(h) * w, 0) {}

  static RegionMask full(int h, int w) {
    RegionMask m(h, w);
    std::fill(m.bits.begin(), m.bits.end(), 1);
    return m;
  }

  std::uint8_t& at(int r, int c) { return bits[static_cast<size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c]; }
  size_t count() const;
  bool empty_mask() const { return count() == 0; }
};

// Luminance conversion with ITU-R 601 weights (0.299, 0.587, 0.114).
Frame to_grayscale(const RasterImage& rgb);

// Colored-annotation detector: pixels whose channel spread exceeds the
// chroma threshold. Grayscale inputs yield an empty mask.
RegionMask detect_color_artifacts(const RasterImage& rgb, float chroma_threshold = 0.15f);

// Fills masked pixels by iterative neighbor averaging until the largest
// per-pixel change falls below `tol`. Unmasked pixels are untouched. When the
// mask covers at least `area_limit` of the frame the input is returned
// unchanged and *applied (if given) reports false.
Frame inpaint_artifacts(const Frame& frame, const RegionMask& artifact_mask,
                        double area_limit = 0.05, double tol = 1e-4, int max_iters = 20000,
                        bool* applied = nullptr);

// Sort-based percentile with linear interpolation between order statistics,
// p in [0,100]. `sorted` must be ascending and non-empty.
double percentile_sorted(const std::vector<float>& sorted, double p);

// Maps the region's p_lo/p_hi percentiles to 0/1, clips to [0,1], zeroes
// pixels outside the region. Regions under `min_region_pixels` pass the
// frame through; a degenerate percentile range zeroes the region.
Frame percentile_rescale(const Frame& frame, const RegionMask& region, double p_lo = 2.0,
                         double p_hi = 98.0, std::size_t min_region_pixels = 50,
                         bool* applied = nullptr);

Frame resize_bilinear(const Frame& frame, int out_h, int out_w);
RegionMask resize_nearest(const RegionMask& mask, int out_h, int out_w);

}  // namespace usjepa
