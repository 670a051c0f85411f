#include "veinseg/png_io.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "veinseg/errors.hpp"

namespace veinseg {

namespace {

struct ImageGuard {
  png_image image;
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
};

[[noreturn]] void fail(const char* what, const std::filesystem::path& path, const png_image& img) {
  throw IoError(std::string(what) + " '" + path.string() + "': " + img.message);
}

}  // namespace

void save_png(const Image8& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw ArgumentError("save_png: only 1 or 3 channels supported");
  }
  if (image.pixels.size() != std::size_t(image.width) * image.height * image.channels) {
    throw ArgumentError("save_png: pixel buffer size does not match dimensions");
  }
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(image.width);
  g.image.height = static_cast<png_uint_32>(image.height);
  g.image.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&g.image, path.string().c_str(), 0, image.pixels.data(), 0,
                               nullptr)) {
    fail("cannot write PNG", path, g.image);
  }
}

Image8 load_png(const std::filesystem::path& path) {
  ImageGuard g;
  if (!png_image_begin_read_from_file(&g.image, path.string().c_str())) {
    fail("cannot read PNG", path, g.image);
  }
  const bool color = (g.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  g.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (g.image.width == 0 || g.image.height == 0) throw IoError("empty PNG '" + path.string() + "'");
  Image8 out(static_cast<int>(g.image.width), static_cast<int>(g.image.height), color ? 3 : 1);
  if (!png_image_finish_read(&g.image, nullptr, out.pixels.data(), 0, nullptr)) {
    fail("cannot decode PNG", path, g.image);
  }
  return out;
}

void save_png16(const Image16& image, const std::filesystem::path& path) {
  if (image.pixels.size() != std::size_t(image.width) * image.height) {
    throw ArgumentError("save_png16: pixel buffer size does not match dimensions");
  }
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(image.width);
  g.image.height = static_cast<png_uint_32>(image.height);
  g.image.format = PNG_FORMAT_LINEAR_Y;
  if (!png_image_write_to_file(&g.image, path.string().c_str(), 0, image.pixels.data(), 0,
                               nullptr)) {
    fail("cannot write PNG", path, g.image);
  }
}

Image16 load_png16(const std::filesystem::path& path) {
  ImageGuard g;
  if (!png_image_begin_read_from_file(&g.image, path.string().c_str())) {
    fail("cannot read PNG", path, g.image);
  }
  g.image.format = PNG_FORMAT_LINEAR_Y;
  Image16 out{static_cast<int>(g.image.width), static_cast<int>(g.image.height), {}};
  out.pixels.resize(std::size_t(out.width) * out.height);
  if (!png_image_finish_read(&g.image, nullptr, out.pixels.data(), 0, nullptr)) {
    fail("cannot decode PNG", path, g.image);
  }
  return out;
}

}  // namespace veinseg
