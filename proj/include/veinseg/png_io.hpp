#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace veinseg {

// 8-bit raster, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, int c) : width(w), height(h), channels(c), pixels(std::size_t(w) * h * c) {}
  std::uint8_t& at(int x, int y, int c = 0) { return pixels[(std::size_t(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(std::size_t(y) * width + x) * channels + c];
  }
  friend bool operator==(const Image8&, const Image8&) = default;
};

// 16-bit grayscale raster.
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
  friend bool operator==(const Image16&, const Image16&) = default;
};

void save_png(const Image8& image, const std::filesystem::path& path);

// Gray files load with 1 channel, anything with color as 3-channel RGB.
Image8 load_png(const std::filesystem::path& path);

void save_png16(const Image16& image, const std::filesystem::path& path);
Image16 load_png16(const std::filesystem::path& path);

}  // namespace veinseg
