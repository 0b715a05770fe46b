#include "slp/lp.hpp"

#include <Eigen/Cholesky>

namespace slp {

namespace {

// Reciprocal condition estimate below which a regularized Gram matrix is
// treated as singular.
constexpr double kMinRcond = 1e-15;

using Matrix6d = Eigen::Matrix<double, 6, 6>;

void require_dense(const DctMapping& map, Eigen::Index n) {
  if (map.side * map.side != n) throw DimensionMismatch("DCT mapping requires the dense patch grid");
}

// (P P^T)^-1 P as a 6 x m matrix; throws if the warps do not span 6 dimensions.
Eigen::Matrix<double, 6, Eigen::Dynamic> warp_pinv_t(const WarpMatrixd& P) {
  const Matrix6d ppt = P * P.transpose();
  const Eigen::LLT<Matrix6d> llt(ppt);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
    throw SingularSystem("warp samples do not span all 6 parameters");
  }
  return llt.solve(P);
}

// A = (D^T D + ridge I)^-1 D^T for an n x 6 D.
PredictorMatrix solve_reformulated(const Eigen::Matrix<double, Eigen::Dynamic, 6>& D, std::optional<double> ridge) {
  Matrix6d dtd = D.transpose() * D;
  const double lambda = ridge.value_or(1e-8 * dtd.trace() / 6.0);
  dtd.diagonal().array() += lambda;
  const Eigen::LLT<Matrix6d> llt(dtd);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond)) {
    throw SingularSystem("D^T D is singular");
  }
  return llt.solve(D.transpose());
}

void check_shapes(const WarpMatrixd& P, const ErrorMatrix& E) {
  if (P.cols() != E.cols()) throw DimensionMismatch("P and E have different sample counts");
}

}  // namespace

std::string learner_name(Learner learner, int retained) {
  switch (learner) {
    case Learner::jd: return "jd";
    case Learner::dct: return "dct-" + std::to_string(retained);
    case Learner::hp: return "hp";
    case Learner::hpdct: return "hpdct-" + std::to_string(retained);
    case Learner::sym: return "sym";
    case Learner::symdct: return "symdct-" + std::to_string(retained);
  }
  return "?";
}

ErrorMatrix build_error_matrix(const Image& img, const Pixel& center, const PatchSpec& spec, const WarpMatrixd& P) {
  const Eigen::VectorXd t0 = extract_template(img, center, spec);
  const Eigen::Matrix2Xd off = spec.offsets().cast<double>();
  const Point c = center.cast<double>();
  ErrorMatrix E(off.cols(), P.cols());
  for (Eigen::Index k = 0; k < P.cols(); ++k) {
    const AffineMatrixd M = to_matrix(P.col(k));
    for (Eigen::Index b = 0; b < off.cols(); ++b) E(b, k) = bilinear_sample(img, c + apply(M, off.col(b))) - t0(b);
  }
  return E;
}

double default_ridge(const Eigen::MatrixXd& gram) {
  return gram.rows() == 0 ? 0.0 : 1e-8 * gram.trace() / static_cast<double>(gram.rows());
}

PredictorMatrix solve_predictor(const PredictorMatrix& lin, const Eigen::MatrixXd& gram, double ridge) {
  if (gram.rows() != gram.cols() || gram.rows() != lin.cols()) throw DimensionMismatch("Gram matrix shape");
  Eigen::MatrixXd M = gram;
  M.diagonal().array() += ridge;
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond)) {
    throw SingularSystem("regularized Gram matrix is not positive definite");
  }
  // M is symmetric, so lin M^-1 = (M^-1 lin^T)^T.
  return llt.solve(lin.transpose()).transpose();
}

LinearPredictor learn_jd(const WarpMatrixd& P, const ErrorMatrix& E, std::optional<double> ridge) {
  check_shapes(P, E);
  const Eigen::MatrixXd gram = E * E.transpose();
  const PredictorMatrix lin = P * E.transpose();
  return {solve_predictor(lin, gram, ridge.value_or(default_ridge(gram))), Learner::jd, 0, P.cols()};
}

LinearPredictor learn_dct(const WarpMatrixd& P, const ErrorMatrix& E, const DctMapping& map,
                          std::optional<double> ridge) {
  check_shapes(P, E);
  require_dense(map, E.rows());
  const Eigen::MatrixXd Er = map.Wr * E;
  const Eigen::MatrixXd gram = Er * Er.transpose();
  const PredictorMatrix lin = P * Er.transpose();
  const PredictorMatrix reduced = solve_predictor(lin, gram, ridge.value_or(default_ridge(gram)));
  return {reduced * map.Wr, Learner::dct, map.retained, P.cols()};
}

LinearPredictor learn_hp(const WarpMatrixd& P, const ErrorMatrix& E, std::optional<double> ridge) {
  check_shapes(P, E);
  const Eigen::Matrix<double, Eigen::Dynamic, 6> D = E * warp_pinv_t(P).transpose();
  return {solve_reformulated(D, ridge), Learner::hp, 0, P.cols()};
}

LinearPredictor learn_hpdct(const WarpMatrixd& P, const ErrorMatrix& E, const DctMapping& map,
                            std::optional<double> ridge) {
  check_shapes(P, E);
  require_dense(map, E.rows());
  const Eigen::MatrixXd Er = map.Wr * E;
  const Eigen::Matrix<double, Eigen::Dynamic, 6> D = map.Wr.transpose() * (Er * warp_pinv_t(P).transpose());
  return {solve_reformulated(D, ridge), Learner::hpdct, map.retained, P.cols()};
}

AlignResult predict(const LinearPredictor& lp, const Eigen::VectorXd& reference, const Eigen::Matrix2Xd& offsets,
                    const Image& img, const Point& center, const AffineParamsd& p0, int iterations) {
  if (reference.size() != offsets.cols() || lp.A.cols() != offsets.cols()) {
    throw DimensionMismatch("predictor, reference and patch spec disagree on n");
  }
  AlignResult res;
  res.p = p0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd r = sample_warped(img, center, offsets, res.p) - reference;
    res.residual = r.squaredNorm();
    const AffineParamsd dp = lp.A * r;
    res.p = compose(res.p, invert(dp));
    res.iterations = it + 1;
  }
  res.converged = true;
  return res;
}

AlignResult predict(const LinearPredictor& lp, const Eigen::VectorXd& reference, const PatchSpec& spec,
                    const Image& img, const Point& center, const AffineParamsd& p0, int iterations) {
  return predict(lp, reference, Eigen::Matrix2Xd(spec.offsets().cast<double>()), img, center, p0, iterations);
}

}  // namespace slp
