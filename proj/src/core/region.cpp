#include "core/region.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

namespace usjepa {

Frame median_filter3(const Frame& frame) {
  Frame out(frame.height, frame.width);
  std::array<float, 9> window;
  for (int r = 0; r < frame.height; ++r)
    for (int c = 0; c < frame.width; ++c) {
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < frame.height && cc >= 0 && cc < frame.width)
            window[n++] = frame.at(rr, cc);
        }
      std::nth_element(window.begin(), window.begin() + n / 2, window.begin() + n);
      out.at(r, c) = window[n / 2];
    }
  return out;
}

RegionMask threshold_mask(const Frame& frame, float threshold) {
  RegionMask mask(frame.height, frame.width);
  for (size_t i = 0; i < frame.pixels.size(); ++i) mask.bits[i] = frame.pixels[i] > threshold ? 1 : 0;
  return mask;
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> offs;
  for (int dr = -radius; dr <= radius; ++dr)
    for (int dc = -radius; dc <= radius; ++dc)
      if (dr * dr + dc * dc <= radius * radius) offs.emplace_back(dr, dc);
  return offs;
}

}  // namespace

RegionMask dilate_disk(const RegionMask& mask, int radius) {
  const auto offs = disk_offsets(radius);
  RegionMask out(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      for (auto [dr, dc] : offs) {
        const int rr = r + dr, cc = c + dc;
        if (rr >= 0 && rr < mask.height && cc >= 0 && cc < mask.width) out.at(rr, cc) = 1;
      }
    }
  return out;
}

RegionMask erode_disk(const RegionMask& mask, int radius) {
  const auto offs = disk_offsets(radius);
  RegionMask out(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      bool keep = true;
      for (auto [dr, dc] : offs) {
        const int rr = r + dr, cc = c + dc;
        // Out-of-bounds neighbors count as set so the frame border does not erode.
        if (rr >= 0 && rr < mask.height && cc >= 0 && cc < mask.width && !mask.at(rr, cc)) {
          keep = false;
          break;
        }
      }
      out.at(r, c) = keep && mask.at(r, c) ? 1 : 0;
    }
  return out;
}

RegionMask morph_close(const RegionMask& mask, int radius) {
  return erode_disk(dilate_disk(mask, radius), radius);
}

namespace {

// Flood fill over 4-connectivity, returns component size.
size_t flood(const RegionMask& mask, std::vector<int>& label, int start, int id) {
  const int W = mask.width, H = mask.height;
  std::vector<int> stack{start};
  label[start] = id;
  size_t n = 0;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    ++n;
    const int r = p / W, c = p % W;
    const int nb[4] = {r > 0 ? p - W : -1, r + 1 < H ? p + W : -1, c > 0 ? p - 1 : -1,
                       c + 1 < W ? p + 1 : -1};
    for (int q : nb) {
      if (q >= 0 && label[q] < 0 && mask.bits[q]) {
        label[q] = id;
        stack.push_back(q);
      }
    }
  }
  return n;
}

}  // namespace

RegionMask largest_component(const RegionMask& mask) {
  std::vector<int> label(mask.bits.size(), -1);
  int best_id = -1;
  size_t best_n = 0;
  int id = 0;
  for (size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] && label[i] < 0) {
      const size_t n = flood(mask, label, static_cast<int>(i), id);
      if (n > best_n) {
        best_n = n;
        best_id = id;
      }
      ++id;
    }
  }
  RegionMask out(mask.height, mask.width);
  if (best_id >= 0)
    for (size_t i = 0; i < mask.bits.size(); ++i) out.bits[i] = label[i] == best_id ? 1 : 0;
  return out;
}

RegionMask fill_holes(const RegionMask& mask) {
  // Background reachable from the border stays background; the rest is filled.
  RegionMask inv(mask.height, mask.width);
  for (size_t i = 0; i < mask.bits.size(); ++i) inv.bits[i] = mask.bits[i] ? 0 : 1;
  std::vector<int> label(inv.bits.size(), -1);
  const int W = mask.width, H = mask.height;
  for (int c = 0; c < W; ++c) {
    if (inv.at(0, c) && label[c] < 0) flood(inv, label, c, 0);
    const int last = (H - 1) * W + c;
    if (inv.at(H - 1, c) && label[last] < 0) flood(inv, label, last, 0);
  }
  for (int r = 0; r < H; ++r) {
    if (inv.at(r, 0) && label[r * W] < 0) flood(inv, label, r * W, 0);
    const int last = r * W + W - 1;
    if (inv.at(r, W - 1) && label[last] < 0) flood(inv, label, last, 0);
  }
  RegionMask out(mask.height, mask.width);
  for (size_t i = 0; i < mask.bits.size(); ++i)
    out.bits[i] = (mask.bits[i] || label[i] < 0) ? 1 : 0;
  return out;
}

RegionMask extract_region_mask(const Frame& frame, const RegionExtractParams& params) {
  const Frame filtered = median_filter3(frame);
  RegionMask mask = threshold_mask(filtered, params.threshold);
  if (mask.empty_mask()) throw std::runtime_error("extract_region_mask: empty mask (all-dark frame)");
  mask = morph_close(mask, params.close_radius);
  mask = largest_component(mask);
  mask = fill_holes(mask);
  if (mask.empty_mask()) throw std::runtime_error("extract_region_mask: empty mask");
  return mask;
}

double mask_iou(const RegionMask& a, const RegionMask& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("mask_iou: dims differ");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i], y = b.bits[i];
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

}  // namespace usjepa
