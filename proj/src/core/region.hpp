#pragma once

#include "core/frame.hpp"

namespace usjepa {

struct RegionExtractParams {
  float threshold = 5.0f / 255.0f;  // on the median-filtered intensity
  int median_radius = 1;            // 3x3 window
  int close_radius = 5;             // disk structuring element
};

Frame median_filter3(const Frame& frame);

RegionMask threshold_mask(const Frame& frame, float threshold);
RegionMask dilate_disk(const RegionMask& mask, int radius);
RegionMask erode_disk(const RegionMask& mask, int radius);
RegionMask morph_close(const RegionMask& mask, int radius);
RegionMask largest_component(const RegionMask& mask);
RegionMask fill_holes(const RegionMask& mask);

// Valid-signal mask for a grayscale frame: fixed threshold on the median
// filtered image, morphological close, largest 4-connected component, hole
// fill. Deterministic; throws when the result is empty.
RegionMask extract_region_mask(const Frame& frame, const RegionExtractParams& params = {});

// IoU between two same-size masks.
double mask_iou(const RegionMask& a, const RegionMask& b);

}  // namespace usjepa
