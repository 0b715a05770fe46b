#pragma once

#include <cstddef>
#include <vector>

#include "slp/lp.hpp"

namespace slp {

/// Predicted training residual of a linear predictor,
/// e2 = Tr(P P^T) - Tr(A (P E^T)^T).
struct QualityReport {
  std::size_t id = 0;
  double expected_sq_error = 0.0;
  double tr_ppt = 0.0;
  double tr_a_lin = 0.0;
  /// Set when e2 < -1e-6 tr_ppt, which points at mismatched inputs.
  bool suspicious = false;
};

/// Sum of squares of all entries of P.
double trace_ppt(const WarpMatrixd& P);

/// `lin` is P E^T for the same warps and patch that produced A.
QualityReport expected_sq_error(const LinearPredictor& lp, const PredictorMatrix& lin, double tr_ppt,
                                std::size_t id = 0);

/// Ascending e2, ties by id, at most k reports.
std::vector<QualityReport> rank_keypoints(std::vector<QualityReport> reports, std::size_t k);

}  // namespace slp
