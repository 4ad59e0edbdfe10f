#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "probe_bench/types.hpp"

namespace probe_bench {

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t r(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x)]; }
  std::uint8_t g(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x) + 1]; }
  std::uint8_t b(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x) + 2]; }
};

/// Reads PNG (any bit depth / color type, converted to 8-bit RGB) or binary
/// PPM (P6, maxval 255). The format is chosen by file signature.
RgbImage load_image(const std::filesystem::path& path);

void write_ppm(const RgbImage& image, const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace probe_bench
