#include <algorithm>
#include <numeric>

#include "slp/imaging.hpp"

namespace slp {

Image::Storage harris_response(const Image& img, double k) {
  const int w = img.width(), h = img.height();
  Image::Storage xx = Image::Storage::Zero(h, w), yy = xx, xy = xx;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = 0.5 * (img(x + 1, y) - img(x - 1, y));
      const double gy = 0.5 * (img(x, y + 1) - img(x, y - 1));
      xx(y, x) = gx * gx;
      yy(y, x) = gy * gy;
      xy(y, x) = gx * gy;
    }
  }
  // [1 2 1] / 4 binomial window in both directions.
  auto smooth = [&](const Image::Storage& s) {
    Image::Storage t = Image::Storage::Zero(h, w), out = Image::Storage::Zero(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 1; x + 1 < w; ++x) t(y, x) = 0.25 * (s(y, x - 1) + 2.0 * s(y, x) + s(y, x + 1));
    for (int y = 1; y + 1 < h; ++y)
      for (int x = 0; x < w; ++x) out(y, x) = 0.25 * (t(y - 1, x) + 2.0 * t(y, x) + t(y + 1, x));
    return out;
  };
  const Image::Storage sxx = smooth(xx), syy = smooth(yy), sxy = smooth(xy);
  Image::Storage r = Image::Storage::Zero(h, w);
  for (int y = 2; y + 2 < h; ++y) {
    for (int x = 2; x + 2 < w; ++x) {
      const double tr = sxx(y, x) + syy(y, x);
      r(y, x) = sxx(y, x) * syy(y, x) - sxy(y, x) * sxy(y, x) - k * tr * tr;
    }
  }
  return r;
}

std::vector<Pixel> detect_corners(const Image& img, int max_count, double min_score, int border_margin) {
  std::vector<Pixel> out;
  if (max_count <= 0 || img.width() <= 2 * border_margin || img.height() <= 2 * border_margin) return out;
  const Image::Storage r = harris_response(img);
  const int w = img.width(), h = img.height();
  const int lo = std::max(border_margin, 2);

  struct Candidate {
    double score;
    int index;
  };
  std::vector<Candidate> cand;
  for (int y = lo; y < h - lo; ++y) {
    for (int x = lo; x < w - lo; ++x) {
      const double s = r(y, x);
      if (!(s > 0.0) || s < min_score) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = r(y + dy, x + dx);
          // Plateaus keep their first pixel in raster order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? n >= s : n > s) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) cand.push_back({s, y * w + x});
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  const std::size_t keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(max_count));
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.emplace_back(cand[i].index % w, cand[i].index / w);
  return out;
}

}  // namespace slp
