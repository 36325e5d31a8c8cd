#include "core/image_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/frame.hpp"

namespace usjepa {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw IoError("raster io: " + path + ": " + why);
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(in.get()));
      return tok;
    }
  }
  return tok;
}

int parse_int(std::istream& in, const std::string& path) {
  const std::string tok = next_token(in);
  if (tok.empty()) fail(path, "truncated header");
  return std::stoi(tok);
}

std::uint8_t quantize(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

}  // namespace

RasterImage load_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const std::string magic = next_token(in);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else fail(path, "unsupported magic '" + magic + "' (expect P5/P6)");

  RasterImage img;
  img.channels = channels;
  img.width = parse_int(in, path);
  img.height = parse_int(in, path);
  const int maxval = parse_int(in, path);
  if (maxval <= 0 || maxval > 255) fail(path, "unsupported maxval");
  in.get();  // single whitespace after maxval

  const size_t n = static_cast<size_t>(img.width) * img.height * channels;
  std::vector<std::uint8_t> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) fail(path, "truncated pixel data");
  img.data.resize(n);
  const float inv = 1.0f / static_cast<float>(maxval);
  for (size_t i = 0; i < n; ++i) img.data[i] = raw[i] * inv;
  return img;
}

void save_pgm(const std::string& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for write");
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<std::uint8_t> raw(frame.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(frame.pixels[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

Frame load_pgm(const std::string& path) {
  const RasterImage img = load_raster(path);
  if (img.channels != 1) fail(path, "expected grayscale");
  Frame f(img.height, img.width);
  f.pixels = img.data;
  return f;
}

void save_ppm(const std::string& path, int height, int width, const std::vector<float>& rgb) {
  if (rgb.size() != static_cast<size_t>(height) * width * 3)
    fail(path, "rgb buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for write");
  out << "P6\n" << width << " " << height << "\n255\n";
  std::vector<std::uint8_t> raw(rgb.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(rgb[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

void save_pbm(const std::string& path, const RegionMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for write");
  out << "P4\n" << mask.width << " " << mask.height << "\n";
  const int stride = (mask.width + 7) / 8;
  std::vector<std::uint8_t> raw(static_cast<size_t>(stride) * mask.height, 0);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c)) raw[static_cast<size_t>(r) * stride + c / 8] |= static_cast<std::uint8_t>(0x80u >> (c % 8));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

RegionMask load_pbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  if (next_token(in) != "P4") fail(path, "expected P4 bitmap");
  const int width = parse_int(in, path);
  const int height = parse_int(in, path);
  in.get();
  const int stride = (width + 7) / 8;
  std::vector<std::uint8_t> raw(static_cast<size_t>(stride) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size()) fail(path, "truncated bitmap");
  RegionMask mask(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      mask.at(r, c) = (raw[static_cast<size_t>(r) * stride + c / 8] >> (7 - c % 8)) & 1u;
  return mask;
}

}  // namespace usjepa
