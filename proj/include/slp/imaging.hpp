#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "slp/errors.hpp"

namespace slp {

using Pixel = Eigen::Vector2i;
using Point = Eigen::Vector2d;

/// Grayscale image, intensities in [0, 1], row-major.
class Image {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Image() = default;
  Image(int width, int height, double fill = 0.0);
  /// Throws std::invalid_argument if a value is non-finite or outside [0, 1].
  explicit Image(Storage data);

  template <typename F>
  static Image from_function(int width, int height, F&& f) {
    Storage s(height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) s(y, x) = f(x, y);
    return Image(std::move(s));
  }

  int width() const { return static_cast<int>(data_.cols()); }
  int height() const { return static_cast<int>(data_.rows()); }
  bool empty() const { return data_.size() == 0; }

  double operator()(int x, int y) const { return data_(y, x); }
  double at(int x, int y) const;
  void set(int x, int y, double v);

  bool contains(int x, int y, int margin = 0) const {
    return x >= margin && y >= margin && x < width() - margin && y < height() - margin;
  }

  const Storage& data() const { return data_; }

 private:
  Storage data_;
};

/// Nonzero bilinear taps of a subpixel location. Taps are ordered
/// (x0,y0), (x0+1,y0), (x0,y0+1), (x0+1,y0+1); a tap whose weight is exactly
/// zero is omitted, so an integral location yields a single tap of weight 1.
struct BilinearStencil {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;

  explicit BilinearStencil(const Point& pos)
      : x0(static_cast<int>(std::floor(pos.x()))),
        y0(static_cast<int>(std::floor(pos.y()))),
        fx(pos.x() - std::floor(pos.x())),
        fy(pos.y() - std::floor(pos.y())) {}

  int max_x() const { return fx > 0.0 ? x0 + 1 : x0; }
  int max_y() const { return fy > 0.0 ? y0 + 1 : y0; }

  template <typename F>
  void for_each(F&& f) const {
    const double gx = 1.0 - fx, gy = 1.0 - fy;
    f(x0, y0, gx * gy);
    if (fx > 0.0) f(x0 + 1, y0, fx * gy);
    if (fy > 0.0) {
      f(x0, y0 + 1, gx * fy);
      if (fx > 0.0) f(x0 + 1, y0 + 1, fx * fy);
    }
  }
};

/// Square patch geometry around a keypoint. stride == 1 is the dense grid;
/// stride k keeps every k-th row and column starting at the top-left corner.
struct PatchSpec {
  int side = 9;
  int stride = 1;

  int half() const { return side / 2; }
  bool dense() const { return stride == 1; }
  int count() const;
  /// Throws std::invalid_argument unless side >= 3 is odd and count() >= 7.
  void validate() const;
  /// 2 x n pixel offsets relative to the center, row-major order.
  Eigen::Matrix2Xi offsets() const;

  bool operator==(const PatchSpec&) const = default;
};

/// Integer half-extents around a patch center.
struct BoundingBox {
  int left = 0;
  int right = 0;
  int top = 0;
  int bottom = 0;

  int width() const { return left + right + 1; }
  int height() const { return top + bottom + 1; }
  int count() const { return width() * height(); }
  bool contains(int dx, int dy) const { return dx >= -left && dx <= right && dy >= -top && dy <= bottom; }
  /// Row-major index of an offset inside the box.
  int index(int dx, int dy) const { return (dy + top) * width() + (dx + left); }

  bool operator==(const BoundingBox&) const = default;
};

/// Throws OutOfBounds unless pos lies in [0, w-1] x [0, h-1].
double bilinear_sample(const Image& img, const Point& pos);

/// Samples at center + offset for every pattern pixel.
Eigen::VectorXd extract_template(const Image& img, const Pixel& center, const PatchSpec& spec);

/// Row-major samples of the bounding box around center.
Eigen::VectorXd extract_bbox(const Image& img, const Pixel& center, const BoundingBox& bbox);

/// Central differences. Throws OutOfBounds within 1 pixel of the border.
Eigen::Vector2d gradient(const Image& img, const Pixel& x);

/// Bilinear interpolation of the central-difference gradients of the
/// surrounding pixels.
Eigen::Vector2d gradient_at(const Image& img, const Point& pos);

/// Harris corners with 3x3 non-maximum suppression, sorted by descending
/// score (ties in raster order). Only pixels at least border_margin away from
/// every border are reported.
std::vector<Pixel> detect_corners(const Image& img, int max_count, double min_score, int border_margin);

/// Harris response at every pixel (zero within 2 pixels of the border).
Image::Storage harris_response(const Image& img, double k = 0.04);

/// Binary PGM (P5). 16-bit samples are big-endian.
Image load_pgm(const std::filesystem::path& path);
void save_pgm(const Image& img, const std::filesystem::path& path, int maxval = 255);

}  // namespace slp
