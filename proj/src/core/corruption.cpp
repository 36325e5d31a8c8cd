#include "core/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "core/rng.hpp"

namespace usjepa {

CorruptionKind corruption_kind_from_string(const std::string& name) {
  if (name == "blur") return CorruptionKind::kBlur;
  if (name == "contrast") return CorruptionKind::kContrast;
  if (name == "speckle") return CorruptionKind::kSpeckle;
  throw std::invalid_argument("unknown corruption kind: " + name);
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kBlur: return "blur";
    case CorruptionKind::kContrast: return "contrast";
    case CorruptionKind::kSpeckle: return "speckle";
  }
  return "?";
}

void CorruptionSpec::validate() const {
  if (severity < 1 || severity > 3)
    throw std::invalid_argument("corruption severity must be in {1,2,3}");
}

int blur_kernel_side(int severity) {
  return 2 * static_cast<int>(std::floor(2.0 * severity)) + 1;
}

namespace {

int reflect(int i, int n) {
  // Reflect-101-style clamp into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Separable convolution with reflect padding.
std::vector<float> convolve_separable(const std::vector<float>& src, int H, int W,
                                      const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size()) / 2;
  std::vector<float> tmp(src.size()), out(src.size());
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<size_t>(k + radius)] * src[static_cast<size_t>(r) * W + reflect(c + k, W)];
      tmp[static_cast<size_t>(r) * W + c] = static_cast<float>(acc);
    }
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<size_t>(k + radius)] * tmp[static_cast<size_t>(reflect(r + k, H)) * W + c];
      out[static_cast<size_t>(r) * W + c] = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

Frame gaussian_blur(const Frame& frame, int severity) {
  CorruptionSpec{CorruptionKind::kBlur, severity, 0}.validate();
  const int side = blur_kernel_side(severity);
  const int radius = side / 2;
  const double sigma = severity;
  std::vector<double> kernel(static_cast<size_t>(side));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += kernel[static_cast<size_t>(k + radius)];
  }
  for (auto& v : kernel) v /= sum;

  Frame out(frame.height, frame.width);
  out.pixels = convolve_separable(frame.pixels, frame.height, frame.width, kernel);
  for (auto& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

double contrast_alpha(int severity) {
  switch (severity) {
    case 1: return 0.7;
    case 2: return 0.5;
    case 3: return 0.3;
  }
  throw std::invalid_argument("contrast severity must be in {1,2,3}");
}

Frame contrast_deplete(const Frame& frame, const RegionMask& region, int severity) {
  if (region.height != frame.height || region.width != frame.width)
    throw std::invalid_argument("contrast_deplete: region dims differ from frame");
  const double alpha = contrast_alpha(severity);
  std::vector<float> inside;
  inside.reserve(region.count());
  for (size_t i = 0; i < frame.pixels.size(); ++i)
    if (region.bits[i]) inside.push_back(frame.pixels[i]);
  if (inside.empty()) throw std::invalid_argument("contrast_deplete: empty region");
  std::sort(inside.begin(), inside.end());
  const double mu = percentile_sorted(inside, 50.0);

  Frame out = frame;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    if (!region.bits[i]) continue;
    const double v = mu + alpha * (static_cast<double>(frame.pixels[i]) - mu);
    out.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

int speckle_kernel_side(int severity) {
  switch (severity) {
    case 1: return 3;
    case 2: return 5;
    case 3: return 7;
  }
  throw std::invalid_argument("speckle severity must be in {1,2,3}");
}

double speckle_sigma(int severity) { return 0.35 * severity; }

Frame speckle(const Frame& frame, int severity, std::uint64_t seed) {
  CorruptionSpec{CorruptionKind::kSpeckle, severity, seed}.validate();
  const double sigma = speckle_sigma(severity);
  const int side = speckle_kernel_side(severity);
  Rng rng(derive_seed(seed, "speckle", static_cast<std::uint64_t>(severity)));
  std::vector<float> eta(frame.size());
  for (auto& v : eta) v = static_cast<float>(sigma * normal_double(rng));
  const std::vector<double> box(static_cast<size_t>(side), 1.0 / side);
  const std::vector<float> eta_corr = convolve_separable(eta, frame.height, frame.width, box);

  Frame out(frame.height, frame.width);
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = static_cast<double>(frame.pixels[i]) * (1.0 + eta_corr[i]);
    out.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

Frame apply_corruption(const Frame& frame, const RegionMask& region, const CorruptionSpec& spec) {
  if (spec.severity == 0) return frame;
  spec.validate();
  switch (spec.kind) {
    case CorruptionKind::kBlur: return gaussian_blur(frame, spec.severity);
    case CorruptionKind::kContrast: return contrast_deplete(frame, region, spec.severity);
    case CorruptionKind::kSpeckle: return speckle(frame, spec.severity, spec.seed);
  }
  throw std::invalid_argument("apply_corruption: unknown kind");
}

}  // namespace usjepa
