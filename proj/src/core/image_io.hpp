#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace usjepa {

struct Frame;
struct RegionMask;

// 8-bit raster loaded from disk, values rescaled to [0,1].
// channels is 1 (PGM) or 3 (PPM).
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;  // row-major, interleaved channels

  float at(int r, int c, int ch) const { return data[(static_cast<size_t>(r) * width + c) * channels + ch]; }
};

RasterImage load_raster(const std::string& path);

void save_pgm(const std::string& path, const Frame& frame);
Frame load_pgm(const std::string& path);

// rgb is row-major interleaved, values in [0,1].
void save_ppm(const std::string& path, int height, int width, const std::vector<float>& rgb);

// PBM stores one bit per pixel; a set bit marks an in-region pixel.
void save_pbm(const std::string& path, const RegionMask& mask);
RegionMask load_pbm(const std::string& path);

}  // namespace usjepa
