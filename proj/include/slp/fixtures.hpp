#pragma once

#include <cstdint>
#include <vector>

#include "slp/imaging.hpp"

namespace slp {

/// Deterministic smooth texture: a sum of random isotropic Gaussian blobs,
/// rescaled to [0.05, 0.95]. Rich in corner-like structure at the 2-5 pixel
/// scale, which is what 9x9 patches see.
Image make_texture(int width, int height, std::uint64_t seed, int blobs = 0);

/// Dead-leaves texture: opaque disks of uniform random gray in [0.1, 0.9],
/// radii drawn with density ~ r^-3, painted back to front, then Gaussian
/// blurred. Scale-invariant statistics and occlusion junctions, close to
/// what a corner detector finds in natural images.
Image make_dead_leaves(int width, int height, std::uint64_t seed, double blur_sigma = 1.0);

struct Checkerboard {
  Image image;
  /// Subpixel positions of interior junctions (pixel-corner locations).
  std::vector<Point> junctions;
};

/// Squares of `square` pixels, values 0.2 / 0.8, with `border` pixels of flat
/// gray around the pattern.
Checkerboard make_checkerboard(int squares_x, int squares_y, int square, int border);

}  // namespace slp
