#include "slp/imaging.hpp"

#include <stdexcept>
#include <string>

namespace slp {

Image::Image(int width, int height, double fill) : data_(Storage::Constant(height, width, fill)) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
  if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("intensity outside [0, 1]");
}

Image::Image(Storage data) : data_(std::move(data)) {
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const double v = data_.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("intensity outside [0, 1]");
  }
}

double Image::at(int x, int y) const {
  if (!contains(x, y)) {
    throw OutOfBounds("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside image");
  }
  return data_(y, x);
}

void Image::set(int x, int y, double v) {
  if (!contains(x, y)) throw OutOfBounds("pixel outside image");
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("intensity outside [0, 1]");
  data_(y, x) = v;
}

int PatchSpec::count() const {
  if (stride < 1 || side < 1) return 0;
  const int per_axis = (side - 1) / stride + 1;
  return per_axis * per_axis;
}

void PatchSpec::validate() const {
  if (side < 3 || side % 2 == 0) throw std::invalid_argument("patch side must be odd and >= 3");
  if (stride < 1) throw std::invalid_argument("patch stride must be >= 1");
  if (count() < 7) throw std::invalid_argument("patch pattern selects fewer than 7 pixels");
}

Eigen::Matrix2Xi PatchSpec::offsets() const {
  const int h = half();
  const int per_axis = (side - 1) / stride + 1;
  Eigen::Matrix2Xi out(2, per_axis * per_axis);
  int b = 0;
  for (int j = 0; j < per_axis; ++j) {
    for (int i = 0; i < per_axis; ++i, ++b) {
      out(0, b) = -h + i * stride;
      out(1, b) = -h + j * stride;
    }
  }
  return out;
}

namespace {

bool inside_sampling_domain(const Image& img, const Point& pos) {
  return pos.x() >= 0.0 && pos.y() >= 0.0 && pos.x() <= img.width() - 1 && pos.y() <= img.height() - 1;
}

}  // namespace

double bilinear_sample(const Image& img, const Point& pos) {
  if (!inside_sampling_domain(img, pos)) throw OutOfBounds("bilinear sample outside image");
  const BilinearStencil s(pos);
  double v = 0.0;
  s.for_each([&](int x, int y, double w) { v += w * img(x, y); });
  return v;
}

Eigen::VectorXd extract_template(const Image& img, const Pixel& center, const PatchSpec& spec) {
  const int h = spec.half();
  if (!img.contains(center.x() - h, center.y() - h) || !img.contains(center.x() + h, center.y() + h)) {
    throw OutOfBounds("template footprint outside image");
  }
  const Eigen::Matrix2Xi off = spec.offsets();
  Eigen::VectorXd t(off.cols());
  for (Eigen::Index b = 0; b < off.cols(); ++b) t(b) = img(center.x() + off(0, b), center.y() + off(1, b));
  return t;
}

Eigen::VectorXd extract_bbox(const Image& img, const Pixel& center, const BoundingBox& bbox) {
  if (!img.contains(center.x() - bbox.left, center.y() - bbox.top) ||
      !img.contains(center.x() + bbox.right, center.y() + bbox.bottom)) {
    throw OutOfBounds("bounding box footprint outside image");
  }
  Eigen::VectorXd u(bbox.count());
  int d = 0;
  for (int dy = -bbox.top; dy <= bbox.bottom; ++dy)
    for (int dx = -bbox.left; dx <= bbox.right; ++dx) u(d++) = img(center.x() + dx, center.y() + dy);
  return u;
}

Eigen::Vector2d gradient(const Image& img, const Pixel& x) {
  if (!img.contains(x.x(), x.y(), 1)) throw OutOfBounds("gradient needs a 1-pixel margin");
  return {0.5 * (img(x.x() + 1, x.y()) - img(x.x() - 1, x.y())),
          0.5 * (img(x.x(), x.y() + 1) - img(x.x(), x.y() - 1))};
}

Eigen::Vector2d gradient_at(const Image& img, const Point& pos) {
  if (!(pos.x() >= 1.0 && pos.y() >= 1.0 && pos.x() <= img.width() - 2 && pos.y() <= img.height() - 2)) {
    throw OutOfBounds("subpixel gradient needs a 1-pixel margin");
  }
  const BilinearStencil s(pos);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  s.for_each([&](int x, int y, double w) {
    g.x() += w * 0.5 * (img(x + 1, y) - img(x - 1, y));
    g.y() += w * 0.5 * (img(x, y + 1) - img(x, y - 1));
  });
  return g;
}

}  // namespace slp
