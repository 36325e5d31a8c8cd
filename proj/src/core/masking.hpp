#pragma once

#include <optional>
#include <vector>

#include "core/frame.hpp"
#include "core/rng.hpp"

namespace usjepa {

// Non-overlapping patch tiling of a frame; patch_size must divide both dims.
struct PatchGrid {
  int patch_size = 16;
  int rows = 0;
  int cols = 0;
  int frame_h = 0;
  int frame_w = 0;

  static PatchGrid make(int frame_h, int frame_w, int patch_size);
  int count() const { return rows * cols; }
  int patch_row(int index) const { return index / cols; }
  int patch_col(int index) const { return index % cols; }
};

// Scale is a fraction of total grid area; aspect is block width/height.
struct BlockConstraints {
  double scale_min = 0.075;
  double scale_max = 0.125;
  double aspect_min = 0.75;
  double aspect_max = 1.5;
  int count = 4;
  int tau = 10;          // minimum valid patches after region intersection
  int max_attempts = 20;

  void validate() const;
};

// Rectangular block in patch units.
struct Block {
  int top = 0, left = 0, height = 0, width = 0;
  int area() const { return height * width; }
  std::vector<int> patch_indices(const PatchGrid& grid) const;
};

struct MaskSet {
  std::vector<int> context;                // M_c, sorted patch indices
  std::vector<std::vector<int>> targets;   // {M_i}, each sorted
  std::vector<int> valid;                  // P_valid, sorted
  int fallbacks = 0;                       // blocks accepted via best-effort path
};

struct MaskSamplingConfig {
  BlockConstraints context{0.85, 1.0, 0.75, 1.5, 1, 10, 20};
  BlockConstraints targets{0.075, 0.125, 0.75, 1.5, 4, 10, 20};
  bool usrc = true;  // off: every patch is valid regardless of the region mask
};

// Patches whose pixel footprint contains at least one region pixel.
std::vector<int> valid_patches(const RegionMask& region, const PatchGrid& grid);

// Uniformly placed rectangle whose rounded area stays within the scale range
// and whose width/height ratio stays within the aspect range. Throws when no
// integer block satisfies both on this grid.
Block sample_block(const PatchGrid& grid, const BlockConstraints& c, Rng& rng);

// Rejection-sampled target masks M_i = B_i ∩ P_valid with |M_i| >= tau.
// After max_attempts the largest non-empty intersection is used (counted as
// a fallback); nullopt when every attempt was empty.
std::optional<std::vector<std::vector<int>>> sample_targets(const PatchGrid& grid,
                                                            const std::vector<int>& valid,
                                                            const BlockConstraints& c, Rng& rng,
                                                            int* fallbacks = nullptr);

// Context mask M_c = (B_c ∩ P_valid) \ union(targets), same rejection policy.
std::optional<std::vector<int>> sample_context(const PatchGrid& grid, const std::vector<int>& valid,
                                               const std::vector<std::vector<int>>& targets,
                                               const BlockConstraints& c, Rng& rng,
                                               int* fallbacks = nullptr);

// Full draw for one frame: targets first, then context with overlap removal.
// nullopt rejects the frame (empty valid set or unusable block draws).
std::optional<MaskSet> sample_mask_set(const PatchGrid& grid, const RegionMask* region,
                                       const MaskSamplingConfig& cfg, Rng& rng);

}  // namespace usjepa
