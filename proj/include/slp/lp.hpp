#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slp/energy.hpp"
#include "slp/imaging.hpp"
#include "slp/warp.hpp"

namespace slp {

enum class Learner { jd, dct, hp, hpdct, sym, symdct };

std::string learner_name(Learner learner, int retained = 0);

/// n x m; column c holds the intensity change caused by warp c.
using ErrorMatrix = Eigen::MatrixXd;

using PredictorMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Maps an n-vector of intensity residuals to a warp update.
struct LinearPredictor {
  PredictorMatrix A;
  Learner learner = Learner::jd;
  /// Retained DCT coefficients for the dct / hpdct / symdct learners.
  int retained = 0;
  /// Number of training warps.
  Eigen::Index samples = 0;
};

/// E(b, c) = I(center + M(P_c) x_b) - I(center + x_b).
ErrorMatrix build_error_matrix(const Image& img, const Pixel& center, const PatchSpec& spec, const WarpMatrixd& P);

/// Orthonormal DCT-II basis change for dense h x h patches.
struct DctMapping {
  int side = 0;
  int retained = 0;
  /// h x h DCT matrix.
  Eigen::MatrixXd C;
  /// n x n; row (i*h + j) is frequency (i, j), column is the raster pixel.
  Eigen::MatrixXd W;
  /// The `retained` lowest-frequency rows of W.
  Eigen::MatrixXd Wr;
  /// Row of W used for each row of Wr.
  std::vector<int> rows;
};

/// C(i, j) = sqrt(alpha_i / h) cos(pi (2j + 1) i / (2h)), alpha_0 = 1, else 2.
Eigen::MatrixXd dct_matrix(int h);

/// Frequencies are kept in ascending i + j, ties by ascending i.
DctMapping build_dct_mapping(int side, int retained);

/// 1e-8 * trace(gram) / rows(gram).
double default_ridge(const Eigen::MatrixXd& gram);

/// lin * (gram + ridge I)^-1. Throws SingularSystem when the regularized
/// Gram matrix is not numerically positive definite.
PredictorMatrix solve_predictor(const PredictorMatrix& lin, const Eigen::MatrixXd& gram, double ridge);

/// A = P E^T (E E^T + ridge I)^-1. ridge defaults to default_ridge(E E^T).
LinearPredictor learn_jd(const WarpMatrixd& P, const ErrorMatrix& E, std::optional<double> ridge = std::nullopt);

/// A = P Er^T (Er Er^T + ridge I)^-1 Wr with Er = Wr E.
LinearPredictor learn_dct(const WarpMatrixd& P, const ErrorMatrix& E, const DctMapping& map,
                          std::optional<double> ridge = std::nullopt);

/// D = E P^T (P P^T)^-1, A = (D^T D + ridge I)^-1 D^T.
LinearPredictor learn_hp(const WarpMatrixd& P, const ErrorMatrix& E, std::optional<double> ridge = std::nullopt);

/// As learn_hp with D = Wr^T Er P^T (P P^T)^-1.
LinearPredictor learn_hpdct(const WarpMatrixd& P, const ErrorMatrix& E, const DctMapping& map,
                            std::optional<double> ridge = std::nullopt);

/// Runs `iterations` steps of dp = A (I(p) - T(0)), p <- p o dp^-1.
AlignResult predict(const LinearPredictor& lp, const Eigen::VectorXd& reference, const PatchSpec& spec,
                    const Image& img, const Point& center, const AffineParamsd& p0, int iterations = 1);
/// As above with the pattern offsets precomputed.
AlignResult predict(const LinearPredictor& lp, const Eigen::VectorXd& reference, const Eigen::Matrix2Xd& offsets,
                    const Image& img, const Point& center, const AffineParamsd& p0, int iterations = 1);

}  // namespace slp
