#include "slp/energy.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace slp {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Relative eigenvalue floor below which J^T J is treated as rank deficient.
constexpr double kRankTolerance = 1e-12;

void require_full_rank(const Matrix6d& H) {
  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(H, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || eig.eigenvalues().minCoeff() <= kRankTolerance * hi) {
    throw SingularWarp("normal equations are rank deficient");
  }
}

AffineParamsd solve_normal(const Matrix6d& H, const AffineParamsd& rhs) {
  require_full_rank(H);
  return H.llt().solve(rhs);
}

Eigen::Matrix2Xd as_double(const Eigen::Matrix2Xi& off) { return off.cast<double>(); }

// Image gradients at the warped pattern locations, in image coordinates.
Eigen::Matrix2Xd warped_gradients(const Image& img, const Point& center, const Eigen::Matrix2Xd& offsets,
                                  const AffineParamsd& p) {
  const AffineMatrixd M = to_matrix(p);
  Eigen::Matrix2Xd g(2, offsets.cols());
  for (Eigen::Index b = 0; b < offsets.cols(); ++b) g.col(b) = gradient_at(img, center + apply(M, offsets.col(b)));
  return g;
}

// Exact derivative of the bilinear interpolant at pos. On a cell edge the
// cell to the right (below) is used, matching a forward difference.
Eigen::Vector2d interpolant_gradient(const Image& img, const Point& pos) {
  bilinear_sample(img, pos);  // bounds check
  const int x0 = std::min(static_cast<int>(std::floor(pos.x())), img.width() - 2);
  const int y0 = std::min(static_cast<int>(std::floor(pos.y())), img.height() - 2);
  const double fx = pos.x() - x0, fy = pos.y() - y0;
  const double i00 = img(x0, y0), i10 = img(x0 + 1, y0), i01 = img(x0, y0 + 1), i11 = img(x0 + 1, y0 + 1);
  return {(1 - fy) * (i10 - i00) + fy * (i11 - i01), (1 - fx) * (i01 - i00) + fx * (i11 - i10)};
}

bool small_step(const AffineParamsd& dp, double tol) { return dp.cwiseAbs().maxCoeff() < tol; }

}  // namespace

SteepestDescentImage steepest_descent(const Eigen::Matrix2Xd& gradients, const Eigen::Matrix2Xd& offsets) {
  SteepestDescentImage J(offsets.cols(), 6);
  for (Eigen::Index b = 0; b < offsets.cols(); ++b) {
    const double gx = gradients(0, b), gy = gradients(1, b);
    const double x = offsets(0, b), y = offsets(1, b);
    J.row(b) << gx * x, gx * y, gx, gy * x, gy * y, gy;
  }
  return J;
}

Eigen::VectorXd sample_warped(const Image& img, const Point& center, const Eigen::Matrix2Xd& offsets,
                              const AffineParamsd& p) {
  const AffineMatrixd M = to_matrix(p);
  Eigen::VectorXd v(offsets.cols());
  const Point shift = center + M.col(2);
  if (M.leftCols<2>().isIdentity(0.0) && shift.array().floor().matrix() == shift && offsets.cols() > 0 &&
      (offsets.array() == offsets.array().floor()).all()) {
    // Integer shift: every sample is a pixel read.
    const Eigen::Vector2d lo = shift + offsets.rowwise().minCoeff(), hi = shift + offsets.rowwise().maxCoeff();
    if (img.contains(static_cast<int>(lo.x()), static_cast<int>(lo.y())) &&
        img.contains(static_cast<int>(hi.x()), static_cast<int>(hi.y()))) {
      for (Eigen::Index b = 0; b < offsets.cols(); ++b)
        v(b) = img(static_cast<int>(shift.x() + offsets(0, b)), static_cast<int>(shift.y() + offsets(1, b)));
      return v;
    }
  }
  for (Eigen::Index b = 0; b < offsets.cols(); ++b) v(b) = bilinear_sample(img, center + apply(M, offsets.col(b)));
  return v;
}

TemplateJacobian template_jacobian(const Image& src, const Pixel& center, const PatchSpec& spec) {
  spec.validate();
  TemplateJacobian t;
  t.spec = spec;
  const Eigen::Matrix2Xi off = spec.offsets();
  t.offsets = as_double(off);
  t.values = extract_template(src, center, spec);
  Eigen::Matrix2Xd g(2, off.cols());
  for (Eigen::Index b = 0; b < off.cols(); ++b) g.col(b) = gradient(src, center + off.col(b));
  t.J = steepest_descent(g, t.offsets);
  return t;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> pseudo_inverse(const SteepestDescentImage& J) {
  const Matrix6d H = J.transpose() * J;
  require_full_rank(H);
  return H.llt().solve(J.transpose());
}

IclkPrecomp iclk_precompute(const Image& src, const Pixel& center, const PatchSpec& spec) {
  IclkPrecomp pre{template_jacobian(src, center, spec), {}};
  pre.pinv = pseudo_inverse(pre.tmpl.J);
  return pre;
}

AlignResult lk_refine(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img, const Point& center,
                      const AffineParamsd& p0, const RefineOptions& opts) {
  const Eigen::Matrix2Xd offsets = as_double(spec.offsets());
  if (templ.size() != offsets.cols()) throw DimensionMismatch("template length does not match patch spec");
  AlignResult res;
  res.p = p0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::VectorXd r = sample_warped(img, center, offsets, res.p) - templ;
    res.residual = r.squaredNorm();
    if (opts.record_history) res.history.push_back(res.residual);
    const SteepestDescentImage J = steepest_descent(warped_gradients(img, center, offsets, res.p), offsets);
    const AffineParamsd dp = -solve_normal(J.transpose() * J, J.transpose() * r);
    res.p += dp;
    res.iterations = it + 1;
    if (small_step(dp, opts.tol)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

AlignResult iclk_refine(const IclkPrecomp& pre, const Image& img, const Point& center, const AffineParamsd& p0,
                        const RefineOptions& opts) {
  AlignResult res;
  res.p = p0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::VectorXd r = sample_warped(img, center, pre.tmpl.offsets, res.p) - pre.tmpl.values;
    res.residual = r.squaredNorm();
    if (opts.record_history) res.history.push_back(res.residual);
    const AffineParamsd dp = pre.pinv * r;
    res.p = compose(res.p, invert(dp));
    res.iterations = it + 1;
    if (small_step(dp, opts.tol)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

AlignResult esm_refine(const TemplateJacobian& tmpl, const Image& img, const Point& center, const AffineParamsd& p0,
                       const RefineOptions& opts) {
  AlignResult res;
  res.p = p0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Eigen::VectorXd r = sample_warped(img, center, tmpl.offsets, res.p) - tmpl.values;
    res.residual = r.squaredNorm();
    if (opts.record_history) res.history.push_back(res.residual);
    // Gradient of the re-warped image I(p) in template coordinates.
    const Eigen::Matrix2d lin = to_matrix(res.p).leftCols<2>();
    const Eigen::Matrix2Xd g = lin.transpose() * warped_gradients(img, center, tmpl.offsets, res.p);
    const SteepestDescentImage Jesm = 0.5 * (tmpl.J + steepest_descent(g, tmpl.offsets));
    const AffineParamsd dp = -solve_normal(Jesm.transpose() * Jesm, Jesm.transpose() * r);
    res.p = compose(res.p, dp);
    res.iterations = it + 1;
    if (small_step(dp, opts.tol)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double ssd(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img, const Point& center,
           const AffineParamsd& p) {
  return (sample_warped(img, center, as_double(spec.offsets()), p) - templ).squaredNorm();
}

AffineParamsd ssd_gradient(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img,
                           const Point& center, const AffineParamsd& p) {
  const Eigen::Matrix2Xd offsets = as_double(spec.offsets());
  const Eigen::VectorXd r = sample_warped(img, center, offsets, p) - templ;
  const AffineMatrixd M = to_matrix(p);
  Eigen::Matrix2Xd g(2, offsets.cols());
  for (Eigen::Index b = 0; b < offsets.cols(); ++b) {
    g.col(b) = interpolant_gradient(img, center + apply(M, offsets.col(b)));
  }
  return 2.0 * steepest_descent(g, offsets).transpose() * r;
}

}  // namespace slp
