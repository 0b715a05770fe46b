#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "slp/imaging.hpp"
#include "slp/lp.hpp"
#include "slp/warp.hpp"

namespace slp {

/// n x l; row b holds the bilinear weights of the warped location of patch
/// pixel b over the bounding-box pixels.
using WarpCoefficientMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Smallest box holding every bilinear tap reachable by a warp inside
/// `ranges`, obtained by interval arithmetic over the patch corners. A
/// coordinate that can move is padded to floor(max) + 1 (resp. ceil(min) - 1);
/// a coordinate pinned to an integer keeps its value.
BoundingBox compute_bbox(const PatchSpec& spec, const WarpRangesd& ranges);

/// Throws OutOfBounds if a warped tap falls outside bbox.
WarpCoefficientMatrix build_wcm(const PatchSpec& spec, const AffineParamsd& dp, const BoundingBox& bbox);

/// Intensity-independent tensor Y(b, c, d) = WCM(P_c)(b, d) - WCM(0)(b, d).
/// Each (b, c) fiber has at most 5 nonzeros.
struct SymbolicY {
  struct Tap {
    std::uint32_t d;
    double v;
  };
  struct Fiber {
    std::uint8_t size = 0;
    std::array<Tap, 5> taps{};
  };

  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index l = 0;
  /// b-major: fibers[b * m + c].
  std::vector<Fiber> fibers;

  const Fiber& fiber(Eigen::Index b, Eigen::Index c) const { return fibers[static_cast<std::size_t>(b * m + c)]; }
  /// Slice c applied to a bounding-box vector: the c-th error-matrix column.
  Eigen::VectorXd apply(Eigen::Index c, const Eigen::VectorXd& u) const;
};

/// L(a, b, d) = sum_c P(a, c) Y(b, c, d), sparse, sorted by (d, b, a).
struct LinearTensor {
  struct Entry {
    std::uint8_t a;
    std::uint16_t b;
    std::uint32_t d;
    double v;
  };
  Eigen::Index n = 0;
  Eigen::Index l = 0;
  std::vector<Entry> entries;
};

/// Q(b1, b2, e{d1, d2}) = sum_c Y(b1, c, d1) Y(b2, c, d2) folded over the
/// unordered pair {d1, d2}; only b1 <= b2 is stored. Sorted by (e, b1, b2).
struct QuadraticTensor {
  struct Entry {
    std::uint16_t b1;
    std::uint16_t b2;
    std::uint32_t d1;  // d1 <= d2
    std::uint32_t d2;
    double v;
  };
  Eigen::Index n = 0;
  Eigen::Index l = 0;
  std::vector<Entry> entries;

  /// Upper-triangular row-major index of the pair d1 <= d2.
  static std::uint64_t pair_index(std::uint64_t d1, std::uint64_t d2, std::uint64_t l) {
    return d1 * l - (d1 == 0 ? 0 : d1 * (d1 - 1) / 2) + (d2 - d1);
  }
  /// Inverse of pair_index.
  static std::pair<std::uint32_t, std::uint32_t> pair_from_index(std::uint64_t e, std::uint64_t l);
  /// l (l + 1) / 2.
  std::uint64_t pair_count() const { return static_cast<std::uint64_t>(l) * (l + 1) / 2; }
};

/// Contraction entries with |value| below this are dropped.
inline constexpr double kTensorDropTolerance = 1e-14;

/// threads <= 0 uses every hardware thread; the result does not depend on it.
SymbolicY build_Y(const PatchSpec& spec, const WarpMatrixd& P, const BoundingBox& bbox, int threads = 0);
LinearTensor build_L(const WarpMatrixd& P, const SymbolicY& Y, int threads = 0);
QuadraticTensor build_Q(const SymbolicY& Y, int threads = 0);

/// (P E^T)(a, b) = sum_d L(a, b, d) u_d. Throws DimensionMismatch.
PredictorMatrix instantiate_linear(const LinearTensor& L, const Eigen::VectorXd& u);
/// (E E^T)(b1, b2) = sum over stored pairs of Q u_d1 u_d2, mirrored.
Eigen::MatrixXd instantiate_quadratic(const QuadraticTensor& Q, const Eigen::VectorXd& u);

/// Everything needed to learn a patch-specific predictor from bounding-box
/// intensities alone.
struct SymbolicModel {
  PatchSpec spec;
  WarpRangesd ranges;
  BoundingBox bbox;
  Eigen::Index samples = 0;
  std::uint64_t seed = 0;
  /// Tr(P P^T) of the training warps.
  double tr_ppt = 0.0;
  /// DCT coefficients kept by learn_symbolic_dct; 0 disables it.
  int retained = 0;
  LinearTensor L;
  QuadraticTensor Q;
  std::optional<DctMapping> dct;

  Eigen::Index n() const { return L.n; }
  Eigen::Index l() const { return L.l; }
};

/// Samples m warps with sample_warps(ranges, m, seed) and builds L and Q.
SymbolicModel build_symbolic_model(const PatchSpec& spec, const WarpRangesd& ranges, Eigen::Index m,
                                   std::uint64_t seed, int retained = 0, int threads = 0);

/// P E^T and E E^T for one patch.
struct SymbolicTerms {
  PredictorMatrix lin;
  Eigen::MatrixXd gram;
};

/// Instantiates both terms from bounding-box intensities. The mean intensity
/// is removed first: every Y fiber sums to zero, so the terms are unchanged
/// while the cancellation inside the quadratic sum shrinks.
SymbolicTerms instantiate_terms(const SymbolicModel& model, const Eigen::VectorXd& u);

/// T(0) read out of a bounding-box vector.
Eigen::VectorXd reference_from_bbox(const SymbolicModel& model, const Eigen::VectorXd& u);

/// Same predictor as learn_jd on this patch, without building E.
LinearPredictor learn_symbolic(const SymbolicModel& model, const Eigen::VectorXd& u,
                               std::optional<double> ridge = std::nullopt);
LinearPredictor learn_symbolic(const SymbolicTerms& terms, Eigen::Index samples,
                               std::optional<double> ridge = std::nullopt);

/// Same predictor as learn_dct on this patch. Requires model.dct.
LinearPredictor learn_symbolic_dct(const SymbolicModel& model, const Eigen::VectorXd& u,
                                   std::optional<double> ridge = std::nullopt);
LinearPredictor learn_symbolic_dct(const SymbolicTerms& terms, Eigen::Index samples, const DctMapping& map,
                                   std::optional<double> ridge = std::nullopt);

/// Little-endian "SYLP" v1 container, CRC32 trailer.
void save_model(const SymbolicModel& model, const std::filesystem::path& path);
SymbolicModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const SymbolicModel& model);
SymbolicModel deserialize_model(const std::vector<std::uint8_t>& bytes);

}  // namespace slp
