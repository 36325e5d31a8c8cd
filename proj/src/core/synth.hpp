#pragma once

#include <cstdint>

#include "core/frame.hpp"

namespace usjepa {

struct SynthConfig {
  int size = 64;        // square frames
  int num_classes = 3;  // inclusion shapes: disk, ring, twin disks
};

struct SynthSample {
  Frame frame;
  RegionMask region;     // ground-truth fan mask
  RegionMask inclusion;  // footprint of the embedded inclusion (test/debug aid)
  int label = 0;
};

// Fan-shaped bright region over black borders with multiplicative speckle
// texture and a class-dependent embedded inclusion. All randomness derives
// from `seed` alone; class_id only selects the inclusion shape, so frames of
// different classes under the same seed differ only inside the inclusion
// footprints. Inclusion shapes share total area and contrast, which keeps
// first-order intensity statistics matched across classes.
SynthSample synth_frame(int class_id, std::uint64_t seed, const SynthConfig& cfg = {});

}  // namespace usjepa
