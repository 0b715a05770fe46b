#include "slp/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "slp/warp.hpp"

namespace slp {

Image make_texture(int width, int height, std::uint64_t seed, int blobs) {
  if (blobs <= 0) blobs = std::max(1, width * height / 160);
  std::mt19937_64 rng(seed);
  Image::Storage s = Image::Storage::Zero(height, width);
  for (int i = 0; i < blobs; ++i) {
    const double cx = uniform01(rng) * width;
    const double cy = uniform01(rng) * height;
    const double sigma = 1.5 + 3.0 * uniform01(rng);
    const double amp = uniform01(rng) * 2.0 - 1.0;
    const int r = static_cast<int>(std::ceil(3.5 * sigma));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = std::max(0, int(cy) - r); y < std::min(height, int(cy) + r + 1); ++y)
      for (int x = std::max(0, int(cx) - r); x < std::min(width, int(cx) + r + 1); ++x)
        s(y, x) += amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) * inv);
  }
  const double lo = s.minCoeff(), hi = s.maxCoeff();
  const double scale = hi > lo ? 0.9 / (hi - lo) : 0.0;
  s = ((s.array() - lo) * scale + 0.05).matrix();
  return Image(std::move(s));
}

Image make_dead_leaves(int width, int height, std::uint64_t seed, double blur_sigma) {
  std::mt19937_64 rng(seed);
  constexpr double r_min = 3.0, r_max = 40.0;
  Image::Storage s = Image::Storage::Constant(height, width, 0.5);
  const int disks = std::max(1, width * height / 40);
  for (int i = 0; i < disks; ++i) {
    const double cx = uniform01(rng) * width;
    const double cy = uniform01(rng) * height;
    // Radius density proportional to r^-3 on [r_min, r_max], by inversion.
    const double a = 1.0 / (r_min * r_min), b = 1.0 / (r_max * r_max);
    const double r = 1.0 / std::sqrt(a - uniform01(rng) * (a - b));
    const double gray = 0.1 + 0.8 * uniform01(rng);
    const int ri = static_cast<int>(std::ceil(r));
    for (int y = std::max(0, int(cy) - ri); y < std::min(height, int(cy) + ri + 1); ++y)
      for (int x = std::max(0, int(cx) - ri); x < std::min(width, int(cx) + ri + 1); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) s(y, x) = gray;
  }
  if (blur_sigma > 0) {
    const int k = static_cast<int>(std::ceil(3.0 * blur_sigma));
    Eigen::VectorXd w(2 * k + 1);
    for (int i = -k; i <= k; ++i) w(i + k) = std::exp(-0.5 * i * i / (blur_sigma * blur_sigma));
    w /= w.sum();
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    Image::Storage t(height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int i = -k; i <= k; ++i) acc += w(i + k) * s(y, clampi(x + i, width));
        t(y, x) = acc;
      }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int i = -k; i <= k; ++i) acc += w(i + k) * t(clampi(y + i, height), x);
        s(y, x) = acc;
      }
  }
  return Image(std::move(s));
}

Checkerboard make_checkerboard(int squares_x, int squares_y, int square, int border) {
  const int w = squares_x * square + 2 * border;
  const int h = squares_y * square + 2 * border;
  Checkerboard cb;
  cb.image = Image::from_function(w, h, [&](int x, int y) {
    const int px = x - border, py = y - border;
    if (px < 0 || py < 0 || px >= squares_x * square || py >= squares_y * square) return 0.5;
    return ((px / square + py / square) % 2 == 0) ? 0.8 : 0.2;
  });
  for (int j = 1; j < squares_y; ++j)
    for (int i = 1; i < squares_x; ++i)
      cb.junctions.emplace_back(border + i * square - 0.5, border + j * square - 0.5);
  return cb;
}

}  // namespace slp
