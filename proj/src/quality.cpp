#include "slp/quality.hpp"

#include <algorithm>
#include <string>

#include "slp/log.hpp"

namespace slp {

double trace_ppt(const WarpMatrixd& P) { return P.squaredNorm(); }

QualityReport expected_sq_error(const LinearPredictor& lp, const PredictorMatrix& lin, double tr_ppt,
                                std::size_t id) {
  if (lin.cols() != lp.A.cols()) throw DimensionMismatch("predictor and linear term disagree on n");
  QualityReport q;
  q.id = id;
  q.tr_ppt = tr_ppt;
  for (int a = 0; a < 6; ++a) q.tr_a_lin += lp.A.row(a).dot(lin.row(a));
  q.expected_sq_error = tr_ppt - q.tr_a_lin;
  if (q.expected_sq_error < -1e-6 * tr_ppt) {
    q.suspicious = true;
    warn("negative expected squared error for keypoint " + std::to_string(id) +
         "; predictor and P E^T probably come from different inputs");
  }
  return q;
}

std::vector<QualityReport> rank_keypoints(std::vector<QualityReport> reports, std::size_t k) {
  std::sort(reports.begin(), reports.end(), [](const QualityReport& a, const QualityReport& b) {
    if (a.expected_sq_error != b.expected_sq_error) return a.expected_sq_error < b.expected_sq_error;
    return a.id < b.id;
  });
  if (reports.size() > k) reports.resize(k);
  return reports;
}

}  // namespace slp
