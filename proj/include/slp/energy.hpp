#pragma once

#include <vector>

#include <Eigen/Core>

#include "slp/imaging.hpp"
#include "slp/warp.hpp"

namespace slp {

struct RefineOptions {
  int max_iters = 10;
  /// Stop once ||dp||_inf < tol. tol = 0 runs exactly max_iters iterations.
  double tol = 1e-4;
  bool record_history = false;
};

struct AlignResult {
  AffineParamsd p = AffineParamsd::Zero();
  int iterations = 0;
  /// SSD at the last point where the residual was evaluated.
  double residual = 0.0;
  bool converged = false;
  /// SSD per iteration, filled when RefineOptions::record_history is set.
  std::vector<double> history;
};

/// n x 6 matrix; row b is grad(x_b)^T * dW/dp(x_b).
using SteepestDescentImage = Eigen::Matrix<double, Eigen::Dynamic, 6>;

/// Rows [gx*x, gx*y, gx, gy*x, gy*y, gy] for 2 x n gradients and offsets.
SteepestDescentImage steepest_descent(const Eigen::Matrix2Xd& gradients, const Eigen::Matrix2Xd& offsets);

/// Samples img at center + M(p) * offset for every column of offsets.
Eigen::VectorXd sample_warped(const Image& img, const Point& center, const Eigen::Matrix2Xd& offsets,
                              const AffineParamsd& p);

/// Template samples T(0) and their steepest descent image.
struct TemplateJacobian {
  PatchSpec spec;
  Eigen::Matrix2Xd offsets;
  Eigen::VectorXd values;
  SteepestDescentImage J;
};

/// Throws OutOfBounds unless the patch plus a 1-pixel margin is inside src.
TemplateJacobian template_jacobian(const Image& src, const Pixel& center, const PatchSpec& spec);

struct IclkPrecomp {
  TemplateJacobian tmpl;
  /// (J^T J)^-1 J^T, 6 x n.
  Eigen::Matrix<double, 6, Eigen::Dynamic> pinv;
};

/// Least-squares pseudo-inverse of an n x 6 matrix through the normal
/// equations. Throws SingularWarp when J^T J is rank deficient.
Eigen::Matrix<double, 6, Eigen::Dynamic> pseudo_inverse(const SteepestDescentImage& J);

IclkPrecomp iclk_precompute(const Image& src, const Pixel& center, const PatchSpec& spec);

/// Forward-additive Lucas-Kanade, p <- p + dp. Reference implementation.
AlignResult lk_refine(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img, const Point& center,
                      const AffineParamsd& p0, const RefineOptions& opts = {});

/// Inverse compositional: dp = J_T^+ (I(p) - T(0)), p <- p o dp^-1.
AlignResult iclk_refine(const IclkPrecomp& pre, const Image& img, const Point& center, const AffineParamsd& p0,
                        const RefineOptions& opts = {});

/// ESM with the averaged Jacobian 1/2 (J_T + J_I(p)), p <- p o dp.
AlignResult esm_refine(const TemplateJacobian& tmpl, const Image& img, const Point& center, const AffineParamsd& p0,
                       const RefineOptions& opts = {});

/// Sum of squared differences between the warped image and the template.
double ssd(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img, const Point& center,
           const AffineParamsd& p);

/// Analytic gradient of ssd() with respect to p (additive parametrization),
/// using the exact derivative of the bilinear interpolant.
AffineParamsd ssd_gradient(const Eigen::VectorXd& templ, const PatchSpec& spec, const Image& img,
                           const Point& center, const AffineParamsd& p);

}  // namespace slp
