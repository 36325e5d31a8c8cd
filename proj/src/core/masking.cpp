#include "core/masking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace usjepa {

PatchGrid PatchGrid::make(int frame_h, int frame_w, int patch_size) {
  if (patch_size <= 0 || frame_h % patch_size != 0 || frame_w % patch_size != 0)
    throw std::invalid_argument("patch grid: patch size must divide frame dims");
  PatchGrid g;
  g.patch_size = patch_size;
  g.frame_h = frame_h;
  g.frame_w = frame_w;
  g.rows = frame_h / patch_size;
  g.cols = frame_w / patch_size;
  return g;
}

void BlockConstraints::validate() const {
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0))
    throw std::invalid_argument("block constraints: bad scale range");
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max))
    throw std::invalid_argument("block constraints: bad aspect range");
  if (tau < 1) throw std::invalid_argument("block constraints: tau must be >= 1");
  if (count < 1) throw std::invalid_argument("block constraints: count must be >= 1");
}

std::vector<int> Block::patch_indices(const PatchGrid& grid) const {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(area()));
  for (int r = top; r < top + height; ++r)
    for (int c = left; c < left + width; ++c) out.push_back(r * grid.cols + c);
  return out;
}

std::vector<int> valid_patches(const RegionMask& region, const PatchGrid& grid) {
  if (region.height != grid.frame_h || region.width != grid.frame_w)
    throw std::invalid_argument("valid_patches: region dims differ from grid frame");
  std::vector<int> out;
  for (int pr = 0; pr < grid.rows; ++pr)
    for (int pc = 0; pc < grid.cols; ++pc) {
      bool hit = false;
      for (int r = pr * grid.patch_size; !hit && r < (pr + 1) * grid.patch_size; ++r)
        for (int c = pc * grid.patch_size; c < (pc + 1) * grid.patch_size; ++c)
          if (region.at(r, c)) {
            hit = true;
            break;
          }
      if (hit) out.push_back(pr * grid.cols + pc);
    }
  return out;
}

Block sample_block(const PatchGrid& grid, const BlockConstraints& c, Rng& rng) {
  c.validate();
  const double N = static_cast<double>(grid.count());
  constexpr double kEps = 1e-9;
  const long amin = std::max<long>(1, static_cast<long>(std::ceil(c.scale_min * N - kEps)));
  const long amax = std::max(amin, static_cast<long>(std::floor(c.scale_max * N + kEps)));

  const double area = uniform_in(rng, c.scale_min * N, c.scale_max * N);
  const double ratio = uniform_in(rng, c.aspect_min, c.aspect_max);
  const int h0 = std::clamp(static_cast<int>(std::lround(std::sqrt(area / ratio))), 1, grid.rows);

  // Scan heights outward from the continuous solution and take the first one
  // admitting a width that meets both the area and the aspect bounds.
  int best_h = -1, best_w = -1;
  for (int step = 0; step < 2 * grid.rows && best_h < 0; ++step) {
    const int h = step % 2 == 0 ? h0 + step / 2 : h0 - (step + 1) / 2;
    if (h < 1 || h > grid.rows) continue;
    const long w_lo = std::max<long>(
        {1, static_cast<long>(std::ceil(c.aspect_min * h - kEps)), (amin + h - 1) / h});
    const long w_hi = std::min<long>(
        {grid.cols, static_cast<long>(std::floor(c.aspect_max * h + kEps)), amax / h});
    if (w_lo > w_hi) continue;
    const long w_pref = std::clamp(std::lround(area / h), w_lo, w_hi);
    best_h = h;
    best_w = static_cast<int>(w_pref);
  }
  if (best_h < 0)
    throw std::invalid_argument("sample_block: constraints unsatisfiable on this grid");

  Block b;
  b.height = best_h;
  b.width = best_w;
  b.top = uniform_int(rng, 0, grid.rows - best_h);
  b.left = uniform_int(rng, 0, grid.cols - best_w);
  return b;
}

namespace {

std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> difference_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

std::optional<std::vector<std::vector<int>>> sample_targets(const PatchGrid& grid,
                                                            const std::vector<int>& valid,
                                                            const BlockConstraints& c, Rng& rng,
                                                            int* fallbacks) {
  if (static_cast<int>(valid.size()) < c.tau) return std::nullopt;
  std::vector<std::vector<int>> masks;
  masks.reserve(static_cast<size_t>(c.count));
  for (int i = 0; i < c.count; ++i) {
    std::vector<int> best;
    bool accepted = false;
    for (int attempt = 0; attempt < c.max_attempts && !accepted; ++attempt) {
      const Block b = sample_block(grid, c, rng);
      std::vector<int> m = intersect_sorted(b.patch_indices(grid), valid);
      if (static_cast<int>(m.size()) >= c.tau) {
        masks.push_back(std::move(m));
        accepted = true;
      } else if (m.size() > best.size()) {
        best = std::move(m);
      }
    }
    if (!accepted) {
      if (best.empty()) return std::nullopt;
      masks.push_back(std::move(best));
      if (fallbacks) ++*fallbacks;
    }
  }
  return masks;
}

std::optional<std::vector<int>> sample_context(const PatchGrid& grid, const std::vector<int>& valid,
                                               const std::vector<std::vector<int>>& targets,
                                               const BlockConstraints& c, Rng& rng,
                                               int* fallbacks) {
  std::vector<int> target_union;
  for (const auto& t : targets) {
    std::vector<int> merged;
    std::set_union(target_union.begin(), target_union.end(), t.begin(), t.end(),
                   std::back_inserter(merged));
    target_union = std::move(merged);
  }
  std::vector<int> best;
  for (int attempt = 0; attempt < c.max_attempts; ++attempt) {
    const Block b = sample_block(grid, c, rng);
    std::vector<int> m = difference_sorted(intersect_sorted(b.patch_indices(grid), valid), target_union);
    if (static_cast<int>(m.size()) >= c.tau) return m;
    if (m.size() > best.size()) best = std::move(m);
  }
  if (best.empty()) return std::nullopt;
  if (fallbacks) ++*fallbacks;
  return best;
}

std::optional<MaskSet> sample_mask_set(const PatchGrid& grid, const RegionMask* region,
                                       const MaskSamplingConfig& cfg, Rng& rng) {
  MaskSet set;
  if (cfg.usrc && region != nullptr) {
    set.valid = valid_patches(*region, grid);
  } else {
    set.valid.resize(static_cast<size_t>(grid.count()));
    for (int i = 0; i < grid.count(); ++i) set.valid[i] = i;
  }
  if (set.valid.empty()) return std::nullopt;

  auto targets = sample_targets(grid, set.valid, cfg.targets, rng, &set.fallbacks);
  if (!targets) return std::nullopt;
  set.targets = std::move(*targets);

  auto context = sample_context(grid, set.valid, set.targets, cfg.context, rng, &set.fallbacks);
  if (!context) return std::nullopt;
  set.context = std::move(*context);
  return set;
}

}  // namespace usjepa
