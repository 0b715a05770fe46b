#include "support.hpp"

#include <algorithm>

#include "slp/errors.hpp"
#include "slp/fixtures.hpp"
#include "slp/lp.hpp"
#include "slp/quality.hpp"

using namespace slp;

namespace {

double dense_residual(const PredictorMatrix& A, const ErrorMatrix& E, const WarpMatrixd& P) {
  const Eigen::MatrixXd R = A * E - P;
  return (R * R.transpose()).trace();
}

QualityReport report(double e2, std::size_t id) {
  QualityReport r;
  r.id = id;
  r.expected_sq_error = e2;
  return r;
}

std::vector<std::size_t> ids(const std::vector<QualityReport>& rs) {
  std::vector<std::size_t> out;
  for (const auto& r : rs) out.push_back(r.id);
  return out;
}

}  // namespace

TEST_CASE("trace_ppt examples") {
  CHECK(trace_ppt(WarpMatrixd::Zero(6, 10)) == 0.0);
  CHECK(trace_ppt(WarpMatrixd::Identity(6, 6)) == 6.0);
  std::mt19937_64 rng(1);
  const WarpMatrixd P = test::random_matrix(6, 77, rng);
  double s = 0.0;
  for (Eigen::Index c = 0; c < P.cols(); ++c)
    for (int a = 0; a < 6; ++a) s += P(a, c) * P(a, c);
  CHECK(trace_ppt(P) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("expected_sq_error examples") {
  std::mt19937_64 rng(2);
  const WarpMatrixd P = test::random_matrix(6, 200, rng);
  const Eigen::MatrixXd G = test::random_matrix(6, 20, rng);
  const ErrorMatrix E = G.transpose() * P;
  const LinearPredictor exact = learn_hp(P, E, 0.0);
  const QualityReport q = expected_sq_error(exact, P * E.transpose(), trace_ppt(P), 4);
  CHECK(std::abs(q.expected_sq_error) < 1e-8);
  CHECK(q.id == 4);
  CHECK(!q.suspicious);

  LinearPredictor zero = exact;
  zero.A.setZero();
  const QualityReport z = expected_sq_error(zero, P * E.transpose(), trace_ppt(P));
  CHECK(z.expected_sq_error == trace_ppt(P));
  CHECK(z.tr_a_lin == 0.0);
  CHECK(z.tr_ppt == trace_ppt(P));

  CHECK_THROWS_AS(expected_sq_error(exact, PredictorMatrix::Zero(6, 19), 1.0), DimensionMismatch);

  // Mismatched inputs are flagged, not clamped.
  const QualityReport bad = expected_sq_error(exact, 10.0 * P * E.transpose(), trace_ppt(P));
  CHECK(bad.suspicious);
  CHECK(bad.expected_sq_error < 0.0);
}

TEST_CASE("property: predicted error equals the dense residual trace") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(100 + s);
    const WarpMatrixd P = test::random_matrix(6, 150, rng);
    const ErrorMatrix E = test::random_matrix(25, 150, rng);
    const LinearPredictor lp = learn_jd(P, E, 0.0);
    const QualityReport q = expected_sq_error(lp, P * E.transpose(), trace_ppt(P));
    const double dense = dense_residual(lp.A, E, P);
    CHECK(std::abs(q.expected_sq_error - dense) <= 1e-8 * dense);
    CHECK(q.expected_sq_error >= -1e-8);
    CHECK(q.expected_sq_error == q.tr_ppt - q.tr_a_lin);
  }
}

TEST_CASE("rank_keypoints examples") {
  CHECK(rank_keypoints({}, 5).empty());
  CHECK(ids(rank_keypoints({report(0.1, 7), report(0.1, 2), report(0.1, 5)}, 3)) ==
        std::vector<std::size_t>{2, 5, 7});
  CHECK(ids(rank_keypoints({report(0.5, 3), report(0.2, 1), report(0.9, 2)}, 2)) == std::vector<std::size_t>{1, 3});
  CHECK(rank_keypoints({report(0.5, 3)}, 0).empty());
}

// Independent sensor noise on every warped training observation.
TEST_CASE("property: median predicted error grows with observation noise") {
  const Image img = make_texture(64, 64, 3);
  const PatchSpec spec{9, 1};
  const WarpMatrixd P = sample_warps(WarpRangesd::symmetric(1.0, 0.2), 600, 4);
  const ErrorMatrix clean = build_error_matrix(img, Pixel(32, 32), spec, P);
  const double tr = trace_ppt(P);
  double previous = -1.0;
  for (const double sigma : {0.0, 0.003, 0.01, 0.03, 0.1}) {
    std::vector<double> e2;
    for (std::uint64_t t = 0; t < 50; ++t) {
      std::mt19937_64 rng(1000 + t);
      std::normal_distribution<double> noise(0.0, 1.0);
      const ErrorMatrix E = clean + sigma * ErrorMatrix::NullaryExpr(clean.rows(), clean.cols(), [&] { return noise(rng); });
      const LinearPredictor lp = learn_jd(P, E);
      e2.push_back(expected_sq_error(lp, P * E.transpose(), tr).expected_sq_error);
    }
    std::nth_element(e2.begin(), e2.begin() + 25, e2.end());
    const double median = e2[25];
    CHECK(median >= previous);
    previous = median;
  }
}
