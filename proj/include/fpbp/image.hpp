#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fpbp {

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;
  bool operator==(const Rgb& o) const { return r == o.r && g == o.g && b == o.b; }
  bool operator!=(const Rgb& o) const { return !(*this == o); }
};

// Parses "#RRGGBB" (leading '#' optional).
Rgb rgb_from_hex(const std::string& hex);
std::string rgb_to_hex(const Rgb& c);

// Row-major 8-bit RGB image, origin at the top-left (image coordinates).
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  ImageRgb() = default;
  ImageRgb(int w, int h, Rgb fill = {255, 255, 255})
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

  Rgb& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// 8-bit RGB/RGBA/gray/palette PNGs are accepted and expanded to RGB; alpha is
// dropped. Anything else (16-bit, interlaced) is rejected.
ImageRgb read_png(const std::string& path);
void write_png(const std::string& path, const ImageRgb& img);

}  // namespace fpbp
