#include "core/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace usjepa {

namespace {

struct Vec2 {
  double x, y;
};

// Smooth step from 1 inside the shape to 0 outside, with ~1.5px edge.
double soft_inside(double signed_dist) {
  const double t = std::clamp(0.5 - signed_dist / 1.5, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

SynthSample synth_frame(int class_id, std::uint64_t seed, const SynthConfig& cfg) {
  if (class_id < 0 || class_id >= cfg.num_classes)
    throw std::invalid_argument("synth_frame: class_id out of range");
  const int S = cfg.size;
  Rng rng(derive_seed(seed, "synth-frame"));

  // --- geometry (all draws happen before stamping and do not depend on class) ---
  const double apex_x = S * (0.5 + uniform_in(rng, -0.03, 0.03));
  const double apex_y = S * uniform_in(rng, -0.10, -0.05);
  const double half_angle = uniform_in(rng, 0.52, 0.70);  // ~30..40 degrees
  const double r_outer = S * uniform_in(rng, 1.00, 1.12);
  const double r_inner = S * uniform_in(rng, 0.06, 0.10);

  // Tissue texture: a handful of smooth echogenicity blobs over a base level.
  const double base_level = uniform_in(rng, 0.38, 0.52);
  constexpr int kBlobs = 6;
  double bx[kBlobs], by[kBlobs], bs[kBlobs], ba[kBlobs];
  for (int i = 0; i < kBlobs; ++i) {
    bx[i] = uniform_in(rng, 0.1, 0.9) * S;
    by[i] = uniform_in(rng, 0.15, 0.95) * S;
    bs[i] = uniform_in(rng, 0.10, 0.28) * S;
    ba[i] = uniform_in(rng, -0.20, 0.20);
  }

  // Inclusion parameters. The twin offset and ring width are drawn for every
  // class so the stream position stays class-independent.
  const double inc_dist = uniform_in(rng, 0.45, 0.75) * (r_outer * 0.85);
  const double inc_angle = uniform_in(rng, -0.55, 0.55) * half_angle;
  const double inc_radius = S * uniform_in(rng, 0.10, 0.13);
  const double inc_contrast = uniform_in(rng, 0.50, 0.65);
  const double twin_axis = uniform_in(rng, 0.0, 3.14159265358979323846);
  const double ring_outer_scale = uniform_in(rng, 1.30, 1.40);

  // Speckle field: one draw per pixel, later box-smoothed.
  std::vector<float> noise(static_cast<size_t>(S) * S);
  for (auto& v : noise) v = static_cast<float>(normal_double(rng));

  SynthSample out;
  out.label = class_id;
  out.frame = Frame(S, S);
  out.region = RegionMask(S, S);
  out.inclusion = RegionMask(S, S);

  const double cx = apex_x, cy = apex_y;
  const Vec2 inc_center{cx + inc_dist * std::sin(inc_angle), cy + inc_dist * std::cos(inc_angle)};
  const double ring_outer = inc_radius * ring_outer_scale;
  const double ring_inner = std::sqrt(std::max(ring_outer * ring_outer - inc_radius * inc_radius, 1e-6));
  const double twin_radius = inc_radius / std::sqrt(2.0);
  const double twin_sep = inc_radius * 1.7;
  const Vec2 twin_a{inc_center.x + twin_sep * std::cos(twin_axis), inc_center.y + twin_sep * std::sin(twin_axis)};
  const Vec2 twin_b{inc_center.x - twin_sep * std::cos(twin_axis), inc_center.y - twin_sep * std::sin(twin_axis)};

  auto inclusion_weight = [&](double px, double py) -> double {
    switch (class_id) {
      case 0: {  // solid disk
        const double d = std::hypot(px - inc_center.x, py - inc_center.y);
        return soft_inside(d - inc_radius);
      }
      case 1: {  // annulus of equal area
        const double d = std::hypot(px - inc_center.x, py - inc_center.y);
        return soft_inside(std::max(d - ring_outer, ring_inner - d));
      }
      default: {  // twin disks of equal total area
        const double da = std::hypot(px - twin_a.x, py - twin_a.y);
        const double db = std::hypot(px - twin_b.x, py - twin_b.y);
        return std::max(soft_inside(da - twin_radius), soft_inside(db - twin_radius));
      }
    }
  };

  for (int r = 0; r < S; ++r) {
    for (int c = 0; c < S; ++c) {
      const double px = c + 0.5, py = r + 0.5;
      const double dx = px - cx, dy = py - cy;
      const double dist = std::hypot(dx, dy);
      const double ang = std::atan2(dx, dy);  // 0 points straight down
      const bool in_fan = dist >= r_inner && dist <= r_outer && std::abs(ang) <= half_angle;
      if (!in_fan) continue;
      out.region.at(r, c) = 1;

      double v = base_level;
      for (int i = 0; i < kBlobs; ++i) {
        const double ddx = px - bx[i], ddy = py - by[i];
        v += ba[i] * std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * bs[i] * bs[i]));
      }
      // Mild depth attenuation toward the far field.
      v *= 1.0 - 0.20 * (dist / r_outer);

      const double w = inclusion_weight(px, py);
      if (w > 0.0) {
        out.inclusion.at(r, c) = 1;
        v *= 1.0 - inc_contrast * w;
      }

      // 3x3 box-smoothed multiplicative speckle.
      double n_sum = 0.0;
      int n_cnt = 0;
      for (int dr2 = -1; dr2 <= 1; ++dr2)
        for (int dc2 = -1; dc2 <= 1; ++dc2) {
          const int rr = r + dr2, cc = c + dc2;
          if (rr >= 0 && rr < S && cc >= 0 && cc < S) {
            n_sum += noise[static_cast<size_t>(rr) * S + cc];
            ++n_cnt;
          }
        }
      v *= 1.0 + 0.22 * (n_sum / n_cnt);
      out.frame.at(r, c) = static_cast<float>(std::clamp(v, 0.03, 1.0));
    }
  }
  return out;
}

}  // namespace usjepa
