#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slp/imaging.hpp"
#include "slp/symbolic.hpp"
#include "slp/warp.hpp"

namespace slp {

/// A refinement method of the benchmark: an energy aligner or a learner.
struct MethodSpec {
  enum class Kind { iclk, esm, jd, dct, hp, hpdct, sym, symdct };
  Kind kind = Kind::sym;
  int retained = 0;

  /// "iclk", "esm", "jd", "dct-25", "hp", "hpdct-25", "sym", "symdct-25".
  static MethodSpec parse(const std::string& tag);
  std::string name() const;
  bool learned() const { return kind != Kind::iclk && kind != Kind::esm; }
  bool symbolic() const { return kind == Kind::sym || kind == Kind::symdct; }
  bool uses_dct() const { return kind == Kind::dct || kind == Kind::hpdct || kind == Kind::symdct; }
  bool operator==(const MethodSpec&) const = default;
};

struct BenchConfig {
  /// PGM path, or "@leaves" / "@texture" for a built-in 480x360 fixture.
  std::string image = "@leaves";
  std::uint64_t texture_seed = 7;
  int side = 9;
  int stride = 1;
  Eigen::Index m = 5000;
  int test_warps = 100;
  double train_translation = 1.0;
  double train_deformation = 0.2;
  double test_translation = 1.0;
  double test_deformation = 0.2;
  std::vector<MethodSpec> methods;
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  int energy_iterations = 10;
  double energy_tol = 1e-4;
  int lp_iterations = 1;
  int max_corners = 50;
  double min_score = 1e-5;
  double noise_sigma = 0.0;
  int threads = 0;
  int timing_repeats = 5;
  std::string output;

  BenchConfig();
  WarpRangesd train_ranges() const { return WarpRangesd::symmetric(train_translation, train_deformation); }
  WarpRangesd test_ranges() const { return WarpRangesd::symmetric(test_translation, test_deformation); }
  /// Throws ConfigError.
  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Every key a config file or CLI flag may set.
const std::vector<std::string>& config_keys();

/// Flat UTF-8 "key = value" text; '#' starts a comment. Throws ConfigError.
ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

/// Applies the map over the defaults. Unknown keys and bad values throw ConfigError.
BenchConfig config_from_map(const ConfigMap& map);

struct MethodResult {
  std::string method;
  std::size_t keypoints = 0;
  std::size_t cells = 0;
  std::size_t skipped = 0;
  double rmse = 0.0;
  /// Mean over keypoints of the median per-keypoint training time.
  double train_ms = 0.0;
  /// Mean over keypoints of the median per-test-warp refinement time.
  double refine_ms = 0.0;
};

struct SyntheticReport {
  std::vector<MethodResult> methods;
  std::vector<Pixel> corners;
  /// Once-off symbolic tensor construction, kept apart from per-patch cost.
  std::optional<double> model_build_ms;
  std::size_t test_warps = 0;
};

/// Observation window of side 2 * radius + 1 with
/// obs(radius + y) = src(center + M(g)^-1 y), so aligning the source template
/// at `center` against the window centre recovers g.
Image render_observation(const Image& src, const Pixel& center, const AffineParamsd& g, int radius);

/// Loads config.image (or renders the built-in texture).
Image load_bench_image(const BenchConfig& config);

/// Corners usable by every configured method.
std::vector<Pixel> bench_corners(const Image& img, const BenchConfig& config);

SyntheticReport run_synthetic(const BenchConfig& config, const Image& img);
SyntheticReport run_synthetic(const BenchConfig& config);
void write_synthetic_csv(const SyntheticReport& report, std::ostream& os);

enum class SweepAxis { m, side, var };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepRow {
  double value = 0.0;
  MethodResult result;
};

/// One run_synthetic per value. `var` sets train and test translation range.
std::vector<SweepRow> run_sweep(const BenchConfig& config, SweepAxis axis, const std::vector<double>& values);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

struct ErrorPredictionRow {
  std::size_t keypoint = 0;
  Pixel position = Pixel::Zero();
  /// e2 over the m training warps.
  double predicted_e2 = 0.0;
  /// e2 / (6 m), comparable with measured_mse.
  double predicted_mse = 0.0;
  /// Mean squared parameter error of the sym predictor over the test warps.
  double measured_mse = 0.0;
  std::size_t skipped = 0;
};

struct ErrorPredictionReport {
  std::vector<ErrorPredictionRow> rows;
  double spearman = 0.0;
};

ErrorPredictionReport run_error_prediction(const BenchConfig& config, const Image& img);
ErrorPredictionReport run_error_prediction(const BenchConfig& config);
void write_error_prediction_csv(const ErrorPredictionReport& report, std::ostream& os);

/// Spearman rank correlation with average ranks for ties. NaN (and a
/// warning) when either side has no rank variance.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace slp
