#pragma once

#include <cstdint>
#include <string>

#include "core/frame.hpp"

namespace usjepa {

enum class CorruptionKind { kBlur, kContrast, kSpeckle };

CorruptionKind corruption_kind_from_string(const std::string& name);
std::string to_string(CorruptionKind kind);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kBlur;
  int severity = 1;               // in {1,2,3}
  std::uint64_t seed = 0;         // speckle only

  void validate() const;
};

// Kernel side 2*floor(2*eps)+1: 5, 9, 13 for severities 1..3.
int blur_kernel_side(int severity);

// Convolution with a normalized Gaussian kernel, sigma = severity, reflect
// padding, output clipped to [0,1].
Frame gaussian_blur(const Frame& frame, int severity);

// Shrinks region intensities toward the region median:
// I' = mu_med + alpha(eps) * (I - mu_med), alpha in {0.7, 0.5, 0.3}.
// Pixels outside the region are untouched.
Frame contrast_deplete(const Frame& frame, const RegionMask& region, int severity);
double contrast_alpha(int severity);

// Multiplicative spatially correlated noise: eta ~ N(0, (0.35*eps)^2) per
// pixel, box-smoothed with side 3/5/7 by severity, I' = clip(I*(1+eta), 0, 1).
Frame speckle(const Frame& frame, int severity, std::uint64_t seed);
int speckle_kernel_side(int severity);
double speckle_sigma(int severity);

// Severity 0 returns the frame unchanged.
Frame apply_corruption(const Frame& frame, const RegionMask& region, const CorruptionSpec& spec);

}  // namespace usjepa
