#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "veinseg/png_io.hpp"
#include "veinseg/tensor.hpp"

namespace veinseg {

// One scan: image in [0, 1], mask in {0, 1}, both (1, 1, h, w).
struct Sample {
  Tensor4<float> image;
  Tensor4<float> mask;
  std::string id;
};

enum class Split { train, heldout };

std::string to_string(Split s);
Split parse_split(const std::string& text);

struct Dataset {
  std::vector<Sample> samples;
  std::vector<Split> tags;  // empty until split_dataset

  std::vector<std::size_t> indices(Split s) const;
};

/// Reads every `*.png` in image_dir (lexicographic by filename) together with
/// the same-named file in mask_dir. When `manifest` names an existing file,
/// its non-empty lines (paths relative to both directories) replace the
/// directory scan. Images scale to value/255 and are resized bilinearly;
/// masks are resized nearest-neighbour and binarized at 0.5.
Dataset load_dataset(const std::filesystem::path& image_dir, const std::filesystem::path& mask_dir,
                     Index target_h, Index target_w,
                     const std::optional<std::filesystem::path>& manifest = std::nullopt);

// Half-pixel-centre bilinear sampling: src = (i + 0.5) * in/out - 0.5,
// clamped to [0, in - 1].
template <typename Scalar>
Tensor4<Scalar> resize_bilinear(const Tensor4<Scalar>& img, Index out_h, Index out_w);

// Nearest-neighbour counterpart: src = floor((i + 0.5) * in/out).
template <typename Scalar>
Tensor4<Scalar> resize_nearest(const Tensor4<Scalar>& img, Index out_h, Index out_w);

// floor(n * train_fraction) samples, chosen as the first entries of a
// SplitMix64(seed) permutation, are tagged train; the rest heldout.
Dataset split_dataset(Dataset d, double train_fraction, std::uint64_t seed);

/// Synthetic cross-section of a vein, drawn from SplitMix64(seed) in this
/// order:
///   a, b        outer semi-axes, uniform in [0.15, 0.40] * min(h, w)
///   theta       rotation, uniform in [0, pi)
///   frac        wall thickness t = frac * 2 * max(a, b), frac in [0.05, 0.15];
///               inner (lumen) semi-axes are a - t and b - t
///   cx, cy      centre, uniform so the outer ellipse stays inside the frame
///   background  tissue level, uniform in [0.10, 0.25]
///   wall        wall level, uniform in [0.65, 0.95]
///   lumen       lumen level, uniform in [0.00, 0.08]
///   decay       depth attenuation exp(-decay * y / h), decay in [0.3, 1.0]
/// then one normal draw per pixel in row-major order for speckle: the clean
/// level is multiplied by 1 + sqrt(0.1) * N(0, 1) and clamped to [0, 1].
/// The mask marks pixel centres between the two ellipses.
Sample synth_phantom(std::uint64_t seed, Index h, Index w);

// Writes count phantoms (seed + k for the k-th) as images/phantom_NNNN.png and
// masks/phantom_NNNN.png under dir.
void write_phantom_corpus(const std::filesystem::path& dir, std::size_t count, Index h, Index w,
                          std::uint64_t seed);

// mask AND NOT erode4(mask), pixels outside the frame counted as 0.
Tensor4<float> mask_boundary(const Tensor4<float>& mask);

// Grayscale replication of the image with boundary pixels painted (255, 0, 0).
Image8 boundary_overlay(const Tensor4<float>& image, const Tensor4<float>& mask);

// round(clamp(v, 0, 1) * 255) of a (1, 1, h, w) tensor.
Image8 to_gray8(const Tensor4<float>& t);
Tensor4<float> from_gray8(const Image8& img);

}  // namespace veinseg
