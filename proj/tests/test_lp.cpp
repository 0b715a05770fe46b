#include "support.hpp"

#include <Eigen/QR>

#include "slp/bench.hpp"
#include "slp/errors.hpp"
#include "slp/fixtures.hpp"
#include "slp/lp.hpp"

using namespace slp;
using test::max_abs_diff;
using test::random_matrix;

namespace {

double residual(const PredictorMatrix& A, const ErrorMatrix& E, const WarpMatrixd& P) {
  return (A * E - P).squaredNorm();
}

struct Instance {
  WarpMatrixd P;
  ErrorMatrix E;
};

Instance random_instance(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {random_matrix(6, m, rng), random_matrix(n, m, rng)};
}

// Patch-derived instance on a random image.
Instance patch_instance(int side, Eigen::Index m, std::uint64_t seed) {
  static const Image img = test::noise_image(64, 64, 4);
  const WarpMatrixd P = sample_warps(WarpRangesd::symmetric(1.0, 0.2), m, seed);
  return {P, build_error_matrix(img, Pixel(32, 30), PatchSpec{side, 1}, P)};
}

}  // namespace

TEST_CASE("build_error_matrix examples") {
  const Image img = make_texture(40, 40, 1);
  const PatchSpec spec{5, 1};
  CHECK(build_error_matrix(img, Pixel(20, 20), spec, WarpMatrixd::Zero(6, 4)).isZero(0.0));

  const WarpMatrixd P = sample_warps(WarpRangesd::symmetric(1.0, 0.2), 30, 2);
  CHECK(build_error_matrix(Image(40, 40, 0.7), Pixel(20, 20), spec, P).cwiseAbs().maxCoeff() < 1e-15);

  // Pixel b = (1, 0) under a pure translation by (0.25, 0.5).
  Image small(9, 9, 0.0);
  small.set(5, 4, 0.4);  // T(0) at b
  small.set(6, 4, 0.8);
  small.set(5, 5, 0.2);
  small.set(6, 5, 0.9);
  WarpMatrixd one = WarpMatrixd::Zero(6, 1);
  one(2, 0) = 0.25;
  one(5, 0) = 0.5;
  const ErrorMatrix E = build_error_matrix(small, Pixel(4, 4), PatchSpec{3, 1}, one);
  const double expect = 0.75 * 0.5 * 0.4 + 0.25 * 0.5 * 0.8 + 0.75 * 0.5 * 0.2 + 0.25 * 0.5 * 0.9 - 0.4;
  CHECK(E(5, 0) == doctest::Approx(expect).epsilon(1e-15));

  WarpMatrixd far = WarpMatrixd::Zero(6, 1);
  far(2, 0) = 30.0;
  CHECK_THROWS_AS(build_error_matrix(img, Pixel(20, 20), spec, far), OutOfBounds);
}

TEST_CASE("property: identity warp columns are exactly zero") {
  const Image img = make_texture(40, 40, 2);
  WarpMatrixd P = sample_warps(WarpRangesd::symmetric(1.0, 0.2), 20, 3);
  P.col(7).setZero();
  P.col(13).setZero();
  const ErrorMatrix E = build_error_matrix(img, Pixel(20, 20), PatchSpec{9, 1}, P);
  CHECK(E.col(7).isZero(0.0));
  CHECK(E.col(13).isZero(0.0));
  CHECK(!E.col(8).isZero(0.0));
}

TEST_CASE("learn_jd examples") {
  // Orthogonal rows: the predictor selects the first six rows.
  const Eigen::Index n = 12, m = 40;
  std::mt19937_64 rng(4);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(m, n, rng));
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) norms(i) = 0.5 + i;
  const ErrorMatrix E = norms.asDiagonal() * Q.transpose();
  const WarpMatrixd P = E.topRows(6);
  const LinearPredictor lp = learn_jd(P, E, 0.0);
  Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(6, n);
  selector.leftCols(6).setIdentity();
  CHECK(max_abs_diff(lp.A, selector) < 1e-12);
  CHECK(lp.learner == Learner::jd);
  CHECK(lp.samples == m);

  const Instance r = random_instance(20, 200, 5);
  CHECK(learn_jd(r.P, r.E, 1e12).A.norm() < 1e-9);

  // Independent dense least-squares oracle.
  const LinearPredictor a = learn_jd(r.P, r.E, 0.0);
  const Eigen::MatrixXd At = r.E.transpose().colPivHouseholderQr().solve(r.P.transpose());
  const double rel_ours = std::sqrt(residual(a.A, r.E, r.P)) / r.P.norm();
  const double rel_oracle = std::sqrt(residual(At.transpose(), r.E, r.P)) / r.P.norm();
  CHECK(std::abs(rel_ours - rel_oracle) < 1e-8);
  CHECK(max_abs_diff(a.A, At.transpose()) < 1e-8);
}

TEST_CASE("learn_jd rejects a singular Gram matrix") {
  const Instance r = random_instance(20, 200, 6);
  CHECK_THROWS_AS(learn_jd(r.P, ErrorMatrix::Zero(20, 200), 0.0), SingularSystem);
  CHECK_THROWS_AS(learn_jd(r.P, ErrorMatrix::Zero(20, 199)), DimensionMismatch);
  // Default ridge is scale aware, so a flat patch still fails loudly.
  CHECK_THROWS_AS(learn_jd(r.P, ErrorMatrix::Zero(20, 200)), SingularSystem);
}

TEST_CASE("property: learn_jd is a local minimizer") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance r = random_instance(15, 120, 100 + seed);
    const LinearPredictor lp = learn_jd(r.P, r.E, 0.0);
    const double base = residual(lp.A, r.E, r.P);
    std::mt19937_64 rng(seed);
    for (int probe = 0; probe < 40; ++probe) {
      const auto a = static_cast<Eigen::Index>(rng() % 6);
      const auto b = static_cast<Eigen::Index>(rng() % 15);
      for (double d : {1e-3, -1e-3}) {
        PredictorMatrix A = lp.A;
        A(a, b) += d;
        CHECK(residual(A, r.E, r.P) >= base);
      }
    }
  }
}

TEST_CASE("dct mapping examples") {
  const Eigen::MatrixXd C2 = dct_matrix(2);
  Eigen::Matrix2d expect;
  expect << 0.7071, 0.7071, 0.7071, -0.7071;
  CHECK(max_abs_diff(C2, expect) < 1e-4);

  const DctMapping full = build_dct_mapping(5, 25);
  CHECK(full.Wr.rows() == 25);
  Eigen::MatrixXd permuted(25, 25);
  for (int r = 0; r < 25; ++r) permuted.row(r) = full.W.row(full.rows[r]);
  CHECK(full.Wr == permuted);

  const DctMapping map = build_dct_mapping(9, 10);
  const Eigen::VectorXd coeffs = map.W * Eigen::VectorXd::Constant(81, 0.3);
  CHECK(coeffs(0) == doctest::Approx(0.3 * 9));
  CHECK(coeffs.tail(80).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS(build_dct_mapping(3, 0));
  CHECK_THROWS(build_dct_mapping(3, 10));
}

TEST_CASE("dct retains low frequencies first") {
  const DctMapping map = build_dct_mapping(4, 16);
  const std::vector<int> expect = {0, 1, 4, 2, 5, 8, 3, 6, 9, 12, 7, 10, 13, 11, 14, 15};
  // (i, j) -> i * h + j; ascending i + j, ties by ascending i.
  std::vector<int> by_i;
  for (int s = 0; s <= 6; ++s)
    for (int i = 0; i <= 3; ++i)
      if (s - i >= 0 && s - i <= 3) by_i.push_back(i * 4 + (s - i));
  CHECK(map.rows == by_i);
  CHECK(build_dct_mapping(4, 3).rows == std::vector<int>{0, 1, 4});
}

TEST_CASE("property: DCT matrices are orthonormal") {
  for (int h = 1; h <= 15; ++h) {
    const Eigen::MatrixXd C = dct_matrix(h);
    CHECK(max_abs_diff(C * C.transpose(), Eigen::MatrixXd::Identity(h, h)) < 1e-10);
  }
  for (int h : {3, 5, 9}) {
    const DctMapping map = build_dct_mapping(h, h * h);
    CHECK(max_abs_diff(map.W * map.W.transpose(), Eigen::MatrixXd::Identity(h * h, h * h)) < 1e-10);
  }
}

TEST_CASE("learn_dct examples") {
  const Instance r = patch_instance(5, 600, 7);
  const DctMapping full = build_dct_mapping(5, 25);
  CHECK(max_abs_diff(learn_dct(r.P, r.E, full, 0.0).A, learn_jd(r.P, r.E, 0.0).A) < 1e-8);
  CHECK(max_abs_diff(learn_dct(r.P, r.E, full).A, learn_jd(r.P, r.E).A) < 1e-8);

  const DctMapping map = build_dct_mapping(5, 9);
  const ErrorMatrix zero = ErrorMatrix::Zero(25, 600);
  CHECK_THROWS_AS(learn_dct(r.P, zero, map, 0.0), SingularSystem);
  CHECK(learn_dct(r.P, zero, map, 1e-3).A.isZero(0.0));

  const LinearPredictor lp = learn_dct(r.P, r.E, map);
  CHECK(lp.learner == Learner::dct);
  CHECK(lp.retained == 9);
  CHECK(learner_name(lp.learner, lp.retained) == "dct-9");

  const Instance strided{r.P, ErrorMatrix::Random(9, 600)};
  CHECK_THROWS_AS(learn_dct(strided.P, strided.E, map), DimensionMismatch);
}

TEST_CASE("learn_hp examples") {
  const Eigen::Index n = 30, m = 300;
  std::mt19937_64 rng(9);
  const WarpMatrixd P = random_matrix(6, m, rng);
  const Eigen::MatrixXd G = random_matrix(6, n, rng);
  const ErrorMatrix E = G.transpose() * P;
  const LinearPredictor lp = learn_hp(P, E, 0.0);
  CHECK(max_abs_diff(lp.A * E, P) < 1e-8);
  CHECK_THROWS_AS(learn_hp(P, ErrorMatrix::Zero(n, m)), SingularSystem);
  CHECK_THROWS_AS(learn_hp(WarpMatrixd::Zero(6, m), E), SingularSystem);
}

TEST_CASE("learn_hpdct examples") {
  const Instance r = patch_instance(5, 600, 8);
  const DctMapping full = build_dct_mapping(5, 25);
  CHECK(max_abs_diff(learn_hpdct(r.P, r.E, full, 0.0).A, learn_hp(r.P, r.E, 0.0).A) < 1e-8);
  CHECK(max_abs_diff(learn_hpdct(r.P, r.E, full).A, learn_hp(r.P, r.E).A) < 1e-8);

  const DctMapping map = build_dct_mapping(5, 9);
  CHECK_THROWS_AS(learn_hpdct(r.P, ErrorMatrix::Zero(25, 600), map), SingularSystem);
  const LinearPredictor lp = learn_hpdct(r.P, r.E, map);
  CHECK(lp.A.rows() == 6);
  CHECK(lp.A.cols() == 25);
  CHECK(lp.A.allFinite());
}

TEST_CASE("predict examples") {
  const Image img = make_texture(64, 64, 4);
  const Pixel c(32, 30);
  const PatchSpec spec{9, 1};
  const WarpRangesd ranges = WarpRangesd::symmetric(1.0, 0.2);
  const WarpMatrixd P = sample_warps(ranges, 3000, 10);
  const LinearPredictor lp = learn_jd(P, build_error_matrix(img, c, spec, P));
  const Eigen::VectorXd ref = extract_template(img, c, spec);

  CHECK(predict(lp, ref, spec, img, c.cast<double>(), AffineParamsd::Zero()).p == AffineParamsd::Zero());

  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    AffineParamsd g = test::random_params(rng, 0.1);
    g(2) = 0.6 * (2 * uniform01(rng) - 1);
    g(5) = 0.6 * (2 * uniform01(rng) - 1);
    const int radius = 14;
    const Image obs = render_observation(img, c, g, radius);
    const AlignResult r = predict(lp, ref, spec, obs, Point(radius, radius), AffineParamsd::Zero());
    CHECK((r.p - g).cwiseAbs().maxCoeff() < 0.1);
    CHECK(r.iterations == 1);
  }
}

TEST_CASE("property: predict on training observations reproduces A E") {
  const Image img = make_texture(48, 48, 6);
  const Pixel c(24, 24);
  const PatchSpec spec{7, 1};
  const WarpMatrixd P = sample_warps(WarpRangesd::symmetric(1.0, 0.2), 200, 12);
  const ErrorMatrix E = build_error_matrix(img, c, spec, P);
  const LinearPredictor lp = learn_jd(P, E);
  const Eigen::VectorXd ref = extract_template(img, c, spec);
  const Eigen::Matrix2Xi off = spec.offsets();
  const Eigen::MatrixXd AE = lp.A * E;
  for (Eigen::Index k = 0; k < P.cols(); ++k) {
    // Observation whose patch pixels hold the training-warped samples.
    Image obs = img;
    for (Eigen::Index b = 0; b < off.cols(); ++b) obs.set(c.x() + off(0, b), c.y() + off(1, b), ref(b) + E(b, k));
    const AlignResult r = predict(lp, ref, spec, obs, c.cast<double>(), AffineParamsd::Zero());
    CHECK((invert(r.p) - AE.col(k)).cwiseAbs().maxCoeff() < 1e-10);
  }
}
