#include "veinseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "veinseg/rng.hpp"

namespace veinseg {

namespace fs = std::filesystem;

std::string to_string(Split s) { return s == Split::train ? "train" : "heldout"; }

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "heldout") return Split::heldout;
  throw ArgumentError("unknown split '" + text + "' (expected train or heldout)");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (tags[k] == s) out.push_back(k);
  }
  return out;
}

Tensor4<float> from_gray8(const Image8& img) {
  if (img.channels != 1) throw ArgumentError("from_gray8: expected a grayscale image");
  if (img.width < 1 || img.height < 1) throw ArgumentError("from_gray8: empty image");
  Tensor4<float> t(1, 1, img.height, img.width);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    t.data()[static_cast<Index>(k)] = static_cast<float>(img.pixels[k]) / 255.0f;
  }
  return t;
}

Image8 to_gray8(const Tensor4<float>& t) {
  if (t.n() != 1 || t.c() != 1) throw ShapeError("to_gray8: expected 1x1xHxW, got " + t.shape().str());
  Image8 img(static_cast<int>(t.w()), static_cast<int>(t.h()), 1);
  for (Index k = 0; k < t.size(); ++k) {
    const float v = std::clamp(t.data()[k], 0.0f, 1.0f);
    img.pixels[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return img;
}

template <typename Scalar>
Tensor4<Scalar> resize_bilinear(const Tensor4<Scalar>& img, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dims must be positive");
  const Index in_h = img.h(), in_w = img.w();
  auto coord = [](Index i, Index in, Index out, Index& i0, Index& i1, double& frac) {
    double src = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<Index>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    frac = src - static_cast<double>(i0);
  };
  Tensor4<Scalar> out;
  out.reset(Shape4{img.n(), img.c(), out_h, out_w});
  for (Index y = 0; y < out_h; ++y) {
    Index y0, y1;
    double fy;
    coord(y, in_h, out_h, y0, y1, fy);
    for (Index x = 0; x < out_w; ++x) {
      Index x0, x1;
      double fx;
      coord(x, in_w, out_w, x0, x1, fx);
      for (Index i = 0; i < img.n(); ++i) {
        for (Index j = 0; j < img.c(); ++j) {
          const double top = (1.0 - fx) * img(i, j, y0, x0) + fx * img(i, j, y0, x1);
          const double bottom = (1.0 - fx) * img(i, j, y1, x0) + fx * img(i, j, y1, x1);
          out(i, j, y, x) = static_cast<Scalar>((1.0 - fy) * top + fy * bottom);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> resize_nearest(const Tensor4<Scalar>& img, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_nearest: output dims must be positive");
  auto src = [](Index i, Index in, Index out) {
    const auto s = static_cast<Index>(std::floor((static_cast<double>(i) + 0.5) *
                                                 static_cast<double>(in) / static_cast<double>(out)));
    return std::min(s, in - 1);
  };
  Tensor4<Scalar> out;
  out.reset(Shape4{img.n(), img.c(), out_h, out_w});
  for (Index i = 0; i < img.n(); ++i) {
    for (Index j = 0; j < img.c(); ++j) {
      for (Index y = 0; y < out_h; ++y) {
        const Index sy = src(y, img.h(), out_h);
        for (Index x = 0; x < out_w; ++x) out(i, j, y, x) = img(i, j, sy, src(x, img.w(), out_w));
      }
    }
  }
  return out;
}

template Tensor4<float> resize_bilinear<float>(const Tensor4<float>&, Index, Index);
template Tensor4<double> resize_bilinear<double>(const Tensor4<double>&, Index, Index);
template Tensor4<float> resize_nearest<float>(const Tensor4<float>&, Index, Index);
template Tensor4<double> resize_nearest<double>(const Tensor4<double>&, Index, Index);

namespace {

std::vector<std::string> scan_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest '" + path.string() + "'");
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

}  // namespace

Dataset load_dataset(const fs::path& image_dir, const fs::path& mask_dir, Index target_h,
                     Index target_w, const std::optional<fs::path>& manifest) {
  if (target_h < 1 || target_w < 1) throw ArgumentError("load_dataset: target dims must be positive");
  const auto names = (manifest && fs::exists(*manifest)) ? read_manifest(*manifest)
                                                         : scan_pngs(image_dir);
  Dataset d;
  for (const auto& name : names) {
    const fs::path image_path = image_dir / name;
    const fs::path mask_path = mask_dir / name;
    if (!fs::exists(mask_path)) {
      throw IoError("missing mask '" + mask_path.string() + "' for image '" + image_path.string() + "'");
    }
    const Image8 img = load_png(image_path);
    const Image8 msk = load_png(mask_path);
    if (img.channels != 1 || msk.channels != 1) {
      throw IoError("expected 8-bit grayscale PNGs for '" + name + "'");
    }
    Sample s;
    s.id = fs::path(name).stem().string();
    s.image = resize_bilinear(from_gray8(img), target_h, target_w);
    s.mask = resize_nearest(from_gray8(msk), target_h, target_w);
    for (Index k = 0; k < s.mask.size(); ++k) {
      s.mask.data()[k] = s.mask.data()[k] > 0.5f ? 1.0f : 0.0f;
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset split_dataset(Dataset d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("split_dataset: train fraction must lie in (0, 1)");
  }
  const std::size_t n = d.samples.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) {
    throw ArgumentError("split_dataset: degenerate split of " + std::to_string(n) + " samples");
  }
  SplitMix64 rng(seed);
  const auto order = permutation(n, rng);
  d.tags.assign(n, Split::heldout);
  for (std::size_t k = 0; k < n_train; ++k) d.tags[order[k]] = Split::train;
  return d;
}

Sample synth_phantom(std::uint64_t seed, Index h, Index w) {
  if (h < 32 || w < 32 || h % 4 != 0 || w % 4 != 0) {
    throw ArgumentError("synth_phantom: dims must be >= 32 and divisible by 4, got " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  SplitMix64 rng(seed);
  const double m = static_cast<double>(std::min(h, w));
  const double a = rng.uniform(0.15, 0.40) * m;
  const double b = rng.uniform(0.15, 0.40) * m;
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double t = rng.uniform(0.05, 0.15) * 2.0 * std::max(a, b);
  const double reach = std::max(a, b) + 1.0;
  const double cx = rng.uniform(reach, static_cast<double>(w) - reach);
  const double cy = rng.uniform(reach, static_cast<double>(h) - reach);
  const double background = rng.uniform(0.10, 0.25);
  const double wall = rng.uniform(0.65, 0.95);
  const double lumen = rng.uniform(0.00, 0.08);
  const double decay = rng.uniform(0.3, 1.0);
  const double speckle = std::sqrt(0.1);

  const double ct = std::cos(theta), st = std::sin(theta);
  auto inside = [&](double px, double py, double sa, double sb) {
    const double dx = px - cx, dy = py - cy;
    const double u = (ct * dx + st * dy) / sa;
    const double v = (-st * dx + ct * dy) / sb;
    return u * u + v * v <= 1.0;
  };

  Sample s;
  s.id = "phantom_" + std::to_string(seed);
  s.image = Tensor4<float>(1, 1, h, w);
  s.mask = Tensor4<float>(1, 1, h, w);
  for (Index y = 0; y < h; ++y) {
    const double attenuation = std::exp(-decay * static_cast<double>(y) / static_cast<double>(h));
    for (Index x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      const bool outer = inside(px, py, a, b);
      const bool lumen_px = inside(px, py, a - t, b - t);
      const bool wall_px = outer && !lumen_px;
      const double level = wall_px ? wall : (lumen_px ? lumen : background);
      const double noisy = level * attenuation * (1.0 + speckle * rng.normal());
      s.image(0, 0, y, x) = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
      s.mask(0, 0, y, x) = wall_px ? 1.0f : 0.0f;
    }
  }
  return s;
}

void write_phantom_corpus(const fs::path& dir, std::size_t count, Index h, Index w,
                          std::uint64_t seed) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  for (std::size_t k = 0; k < count; ++k) {
    const Sample s = synth_phantom(seed + k, h, w);
    char name[48];
    std::snprintf(name, sizeof name, "phantom_%04zu.png", k);
    save_png(to_gray8(s.image), dir / "images" / name);
    save_png(to_gray8(s.mask), dir / "masks" / name);
  }
}

Tensor4<float> mask_boundary(const Tensor4<float>& mask) {
  Tensor4<float> out = zeros_like(mask);
  auto on = [&](Index i, Index j, Index y, Index x) {
    return y >= 0 && y < mask.h() && x >= 0 && x < mask.w() && mask(i, j, y, x) > 0.5f;
  };
  for (Index i = 0; i < mask.n(); ++i) {
    for (Index j = 0; j < mask.c(); ++j) {
      for (Index y = 0; y < mask.h(); ++y) {
        for (Index x = 0; x < mask.w(); ++x) {
          if (!on(i, j, y, x)) continue;
          const bool interior = on(i, j, y - 1, x) && on(i, j, y + 1, x) && on(i, j, y, x - 1) &&
                                on(i, j, y, x + 1);
          out(i, j, y, x) = interior ? 0.0f : 1.0f;
        }
      }
    }
  }
  return out;
}

Image8 boundary_overlay(const Tensor4<float>& image, const Tensor4<float>& mask) {
  require_same_shape(image.shape(), mask.shape(), "boundary_overlay");
  const Image8 gray = to_gray8(image);
  const Tensor4<float> edge = mask_boundary(mask);
  Image8 rgb(gray.width, gray.height, 3);
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      const bool red = edge(0, 0, y, x) > 0.5f;
      const std::uint8_t v = gray.at(x, y);
      rgb.at(x, y, 0) = red ? 255 : v;
      rgb.at(x, y, 1) = red ? 0 : v;
      rgb.at(x, y, 2) = red ? 0 : v;
    }
  }
  return rgb;
}

}  // namespace veinseg
