#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "slp/errors.hpp"

namespace slp {

/// Affine warp parameters (p0..p5). The warp matrix is
///
///     [ 1 + p0   p1     p2 ]
///     [ p3       1 + p4 p5 ]
///
/// and always acts on coordinates relative to the patch center, so p2 and p5
/// are translations of the center in pixels.
template <typename Scalar>
using AffineParams = Eigen::Matrix<Scalar, 6, 1>;

/// Row-major 2x3 warp matrix.
template <typename Scalar>
using AffineMatrix = Eigen::Matrix<Scalar, 2, 3, Eigen::RowMajor>;

/// Column c holds the c-th warp update.
template <typename Scalar>
using WarpMatrix = Eigen::Matrix<Scalar, 6, Eigen::Dynamic>;

using AffineParamsd = AffineParams<double>;
using AffineMatrixd = AffineMatrix<double>;
using WarpMatrixd = WarpMatrix<double>;

template <typename Scalar>
AffineParams<Scalar> identity_params() {
  return AffineParams<Scalar>::Zero();
}

template <typename Scalar>
AffineParams<Scalar> translation(Scalar tx, Scalar ty) {
  AffineParams<Scalar> p = AffineParams<Scalar>::Zero();
  p(2) = tx;
  p(5) = ty;
  return p;
}

template <typename Derived>
AffineMatrix<typename Derived::Scalar> to_matrix(const Eigen::MatrixBase<Derived>& p) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  using Scalar = typename Derived::Scalar;
  AffineMatrix<Scalar> m;
  m << Scalar(1) + p(0), p(1), p(2),
       p(3), Scalar(1) + p(4), p(5);
  return m;
}

template <typename Derived>
AffineParams<typename Derived::Scalar> from_matrix(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  AffineParams<Scalar> p;
  p << m(0, 0) - Scalar(1), m(0, 1), m(0, 2),
       m(1, 0), m(1, 1) - Scalar(1), m(1, 2);
  return p;
}

template <typename DerivedM, typename DerivedX>
Eigen::Matrix<typename DerivedM::Scalar, 2, 1> apply(const Eigen::MatrixBase<DerivedM>& m,
                                                    const Eigen::MatrixBase<DerivedX>& x) {
  return m.template leftCols<2>() * x + m.col(2);
}

/// Warp such that apply(compose(outer, inner), x) == apply(outer, apply(inner, x)).
template <typename Scalar>
AffineParams<Scalar> compose(const AffineParams<Scalar>& outer, const AffineParams<Scalar>& inner) {
  const AffineMatrix<Scalar> a = to_matrix(outer);
  const AffineMatrix<Scalar> b = to_matrix(inner);
  AffineMatrix<Scalar> ab;
  ab.template leftCols<2>() = a.template leftCols<2>() * b.template leftCols<2>();
  ab.col(2) = a.template leftCols<2>() * b.col(2) + a.col(2);
  return from_matrix(ab);
}

inline constexpr double kSingularWarpDeterminant = 1e-12;

template <typename Scalar>
Scalar linear_determinant(const AffineParams<Scalar>& p) {
  return (Scalar(1) + p(0)) * (Scalar(1) + p(4)) - p(1) * p(3);
}

/// Throws SingularWarp when |det| of the linear part is below 1e-12.
template <typename Scalar>
AffineParams<Scalar> invert(const AffineParams<Scalar>& p) {
  const Scalar det = linear_determinant(p);
  if (!(std::abs(det) >= Scalar(kSingularWarpDeterminant))) {
    throw SingularWarp("affine warp has a singular linear part");
  }
  const AffineMatrix<Scalar> m = to_matrix(p);
  Eigen::Matrix<Scalar, 2, 2> inv;
  inv << m(1, 1), -m(0, 1),
        -m(1, 0), m(0, 0);
  inv /= det;
  AffineMatrix<Scalar> r;
  r.template leftCols<2>() = inv;
  r.col(2) = -inv * m.col(2);
  return from_matrix(r);
}

/// Closed per-parameter sampling intervals.
template <typename Scalar>
struct WarpRanges {
  AffineParams<Scalar> lo = AffineParams<Scalar>::Zero();
  AffineParams<Scalar> hi = AffineParams<Scalar>::Zero();

  /// Translations in [-translation, translation], all other parameters in
  /// [-deformation, deformation].
  static WarpRanges symmetric(Scalar translation, Scalar deformation) {
    WarpRanges r;
    for (int i = 0; i < 6; ++i) {
      const Scalar h = (i == 2 || i == 5) ? translation : deformation;
      r.lo(i) = -h;
      r.hi(i) = h;
    }
    return r;
  }

  /// lo <= hi, finite, and the identity is inside.
  bool valid() const {
    return lo.allFinite() && hi.allFinite() && (lo.array() <= hi.array()).all() &&
           (lo.array() <= Scalar(0)).all() && (hi.array() >= Scalar(0)).all();
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }

  bool contains_ranges(const WarpRanges& other) const {
    return (other.lo.array() >= lo.array()).all() && (other.hi.array() <= hi.array()).all();
  }

  bool operator==(const WarpRanges&) const = default;
};

using WarpRangesd = WarpRanges<double>;

/// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 output.
/// std::mt19937_64 is fully specified by the standard, so together with this
/// conversion the seed -> sample mapping is identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// m warps, each parameter drawn independently and uniformly from its
/// interval. Draw order is column by column, p0 first.
template <typename Scalar>
WarpMatrix<Scalar> sample_warps(const WarpRanges<Scalar>& ranges, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WarpMatrix<Scalar> P(6, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (int i = 0; i < 6; ++i) {
      const double u = uniform01(rng);
      P(i, c) = ranges.lo(i) + Scalar(u) * (ranges.hi(i) - ranges.lo(i));
    }
  }
  return P;
}

}  // namespace slp
