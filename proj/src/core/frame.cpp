#include "core/frame.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace usjepa {

bool Frame::in_unit_range() const {
  for (float v : pixels)
    if (!(v >= 0.0f && v <= 1.0f)) return false;
  return true;
}

size_t RegionMask::count() const {
  size_t n = 0;
  for (auto b : bits) n += b ? 1 : 0;
  return n;
}

Frame to_grayscale(const RasterImage& img) {
  if (img.channels == 1) {
    Frame f(img.height, img.width);
    f.pixels = img.data;
    return f;
  }
  if (img.channels != 3) throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
  Frame f(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const float y = 0.299f * img.at(r, c, 0) + 0.587f * img.at(r, c, 1) + 0.114f * img.at(r, c, 2);
      f.at(r, c) = std::clamp(y, 0.0f, 1.0f);
    }
  return f;
}

RegionMask detect_color_artifacts(const RasterImage& img, float chroma_threshold) {
  RegionMask mask(img.height, img.width);
  if (img.channels != 3) return mask;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const float mx = std::max({img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)});
      const float mn = std::min({img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)});
      mask.at(r, c) = (mx - mn) > chroma_threshold ? 1 : 0;
    }
  return mask;
}

Frame inpaint_artifacts(const Frame& frame, const RegionMask& artifact_mask, double area_limit,
                        double tol, int max_iters, bool* applied) {
  if (artifact_mask.height != frame.height || artifact_mask.width != frame.width)
    throw std::invalid_argument("inpaint: mask dims differ from frame");
  if (applied) *applied = false;
  const size_t masked = artifact_mask.count();
  if (masked == 0) return frame;
  const double area = static_cast<double>(masked) / static_cast<double>(frame.size());
  if (area >= area_limit) return frame;  // too large to inpaint; passed through

  Frame out = frame;
  std::vector<size_t> idx;
  idx.reserve(masked);
  for (size_t i = 0; i < artifact_mask.bits.size(); ++i)
    if (artifact_mask.bits[i]) idx.push_back(i);

  // Seed masked pixels with the unmasked mean for faster convergence.
  double sum = 0.0;
  size_t n_free = 0;
  for (size_t i = 0; i < out.pixels.size(); ++i)
    if (!artifact_mask.bits[i]) { sum += out.pixels[i]; ++n_free; }
  const float seed = n_free ? static_cast<float>(sum / n_free) : 0.5f;
  for (size_t i : idx) out.pixels[i] = seed;

  const int H = frame.height, W = frame.width;
  std::vector<float> next(idx.size());
  for (int iter = 0; iter < max_iters; ++iter) {
    float max_delta = 0.0f;
    for (size_t k = 0; k < idx.size(); ++k) {
      const int r = static_cast<int>(idx[k]) / W;
      const int c = static_cast<int>(idx[k]) % W;
      float acc = 0.0f;
      int cnt = 0;
      if (r > 0) { acc += out.at(r - 1, c); ++cnt; }
      if (r + 1 < H) { acc += out.at(r + 1, c); ++cnt; }
      if (c > 0) { acc += out.at(r, c - 1); ++cnt; }
      if (c + 1 < W) { acc += out.at(r, c + 1); ++cnt; }
      next[k] = cnt ? acc / cnt : out.pixels[idx[k]];
      max_delta = std::max(max_delta, std::abs(next[k] - out.pixels[idx[k]]));
    }
    for (size_t k = 0; k < idx.size(); ++k) out.pixels[idx[k]] = next[k];
    if (max_delta < tol) break;
  }
  for (size_t i : idx) out.pixels[i] = std::clamp(out.pixels[i], 0.0f, 1.0f);
  if (applied) *applied = true;
  return out;
}

double percentile_sorted(const std::vector<float>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 100.0) return sorted.back();
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

Frame percentile_rescale(const Frame& frame, const RegionMask& region, double p_lo, double p_hi,
                         std::size_t min_region_pixels, bool* applied) {
  if (region.height != frame.height || region.width != frame.width)
    throw std::invalid_argument("percentile_rescale: region dims differ from frame");
  if (applied) *applied = false;

  std::vector<float> inside;
  inside.reserve(region.count());
  for (size_t i = 0; i < frame.pixels.size(); ++i)
    if (region.bits[i]) inside.push_back(frame.pixels[i]);
  if (inside.size() < min_region_pixels) return frame;

  std::sort(inside.begin(), inside.end());
  const double lo = percentile_sorted(inside, p_lo);
  const double hi = percentile_sorted(inside, p_hi);

  Frame out(frame.height, frame.width);
  if (applied) *applied = true;
  if (hi <= lo) {
    // Degenerate dynamic range: region collapses to zero.
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (size_t i = 0; i < frame.pixels.size(); ++i) {
    if (!region.bits[i]) continue;
    const double v = (frame.pixels[i] - lo) * inv;
    out.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

Frame resize_bilinear(const Frame& frame, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: bad dims");
  if (out_h == frame.height && out_w == frame.width) return frame;
  Frame out(out_h, out_w);
  const double sr = static_cast<double>(frame.height) / out_h;
  const double sc = static_cast<double>(frame.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    const double fr = std::clamp((r + 0.5) * sr - 0.5, 0.0, static_cast<double>(frame.height - 1));
    const int r0 = static_cast<int>(fr);
    const int r1 = std::min(r0 + 1, frame.height - 1);
    const double wr = fr - r0;
    for (int c = 0; c < out_w; ++c) {
      const double fc = std::clamp((c + 0.5) * sc - 0.5, 0.0, static_cast<double>(frame.width - 1));
      const int c0 = static_cast<int>(fc);
      const int c1 = std::min(c0 + 1, frame.width - 1);
      const double wc = fc - c0;
      const double v = (1 - wr) * ((1 - wc) * frame.at(r0, c0) + wc * frame.at(r0, c1)) +
                       wr * ((1 - wc) * frame.at(r1, c0) + wc * frame.at(r1, c1));
      out.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

RegionMask resize_nearest(const RegionMask& mask, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: bad dims");
  if (out_h == mask.height && out_w == mask.width) return mask;
  RegionMask out(out_h, out_w);
  const double sr = static_cast<double>(mask.height) / out_h;
  const double sc = static_cast<double>(mask.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    const int src_r = std::min(static_cast<int>((r + 0.5) * sr), mask.height - 1);
    for (int c = 0; c < out_w; ++c) {
      const int src_c = std::min(static_cast<int>((c + 0.5) * sc), mask.width - 1);
      out.at(r, c) = mask.at(src_r, src_c);
    }
  }
  return out;
}

}  // namespace usjepa
