#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "slp/bench.hpp"
#include "slp/energy.hpp"
#include "slp/errors.hpp"
#include "slp/fixtures.hpp"
#include "slp/log.hpp"
#include "slp/lp.hpp"
#include "slp/parallel.hpp"
#include "slp/quality.hpp"

namespace slp {

namespace {

using Clock = std::chrono::steady_clock;
using Kind = MethodSpec::Kind;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int reach(const BoundingBox& b) { return std::max({b.left, b.right, b.top, b.bottom}); }

// Half-width of the observation window: the test-warped patch footprint plus
// a full patch of slack, so that a diverging aligner is scored on its error
// instead of running off the window.
int observation_radius(const BenchConfig& c) {
  const PatchSpec spec{c.side, c.stride};
  return reach(compute_bbox(spec, c.test_ranges())) + spec.side + 2;
}

// Bound on |M(g)^-1 y|_inf over the test ranges and |y|_inf <= radius.
int observation_footprint(const BenchConfig& c) {
  const WarpRangesd r = c.test_ranges();
  auto amax = [&](int i) { return std::max(std::abs(r.lo(i)), std::abs(r.hi(i))); };
  const double det_min = (1.0 - amax(0)) * (1.0 - amax(4)) - amax(1) * amax(3);
  if (det_min < 0.05) throw ConfigError("test deformation range allows near-singular warps");
  const double inv_norm = std::max(1.0 + amax(4) + amax(1), 1.0 + amax(0) + amax(3)) / det_min;
  const double t = std::max(amax(2), amax(5));
  return static_cast<int>(std::ceil(inv_norm * (observation_radius(c) + t)));
}

struct Trained {
  std::optional<IclkPrecomp> iclk;
  std::optional<TemplateJacobian> esm;
  std::optional<LinearPredictor> lp;
  Eigen::VectorXd reference;
  Eigen::Matrix2Xd offsets;
};

struct Context {
  const BenchConfig& cfg;
  const Image& img;
  PatchSpec spec;
  WarpMatrixd P;
  std::optional<SymbolicModel> model;
  std::map<int, DctMapping> dct;
  int radius = 0;
  RefineOptions energy;

  Context(const BenchConfig& c, const Image& i) : cfg(c), img(i), spec{c.side, c.stride} {
    energy.max_iters = c.energy_iterations;
    energy.tol = c.energy_tol;
    radius = observation_radius(c);
  }

  const DctMapping& mapping(int r) const { return dct.at(r); }
};

Trained train(const Context& ctx, const MethodSpec& ms, const Pixel& c) {
  Trained t;
  t.offsets = ctx.spec.offsets().cast<double>();
  switch (ms.kind) {
    case Kind::iclk:
      t.iclk = iclk_precompute(ctx.img, c, ctx.spec);
      return t;
    case Kind::esm:
      t.esm = template_jacobian(ctx.img, c, ctx.spec);
      return t;
    case Kind::sym:
    case Kind::symdct: {
      const Eigen::VectorXd u = extract_bbox(ctx.img, c, ctx.model->bbox);
      const SymbolicTerms terms = instantiate_terms(*ctx.model, u);
      t.lp = ms.kind == Kind::sym ? learn_symbolic(terms, ctx.model->samples)
                                  : learn_symbolic_dct(terms, ctx.model->samples, ctx.mapping(ms.retained));
      t.reference = reference_from_bbox(*ctx.model, u);
      return t;
    }
    default:
      break;
  }
  const ErrorMatrix E = build_error_matrix(ctx.img, c, ctx.spec, ctx.P);
  switch (ms.kind) {
    case Kind::jd: t.lp = learn_jd(ctx.P, E); break;
    case Kind::dct: t.lp = learn_dct(ctx.P, E, ctx.mapping(ms.retained)); break;
    case Kind::hp: t.lp = learn_hp(ctx.P, E); break;
    case Kind::hpdct: t.lp = learn_hpdct(ctx.P, E, ctx.mapping(ms.retained)); break;
    default: break;
  }
  t.reference = extract_template(ctx.img, c, ctx.spec);
  return t;
}

AffineParamsd refine(const Context& ctx, const Trained& t, const Image& obs) {
  const Point oc(ctx.radius, ctx.radius);
  const AffineParamsd p0 = AffineParamsd::Zero();
  if (t.iclk) return iclk_refine(*t.iclk, obs, oc, p0, ctx.energy).p;
  if (t.esm) return esm_refine(*t.esm, obs, oc, p0, ctx.energy).p;
  return predict(*t.lp, t.reference, t.offsets, obs, oc, p0, ctx.cfg.lp_iterations).p;
}

struct Cell {
  double sum_sq = 0.0;
  std::size_t cells = 0;
  std::size_t skipped = 0;
  double train_ms = 0.0;
  double refine_ms = 0.0;
  bool trained = false;
};

struct KeypointOutcome {
  std::vector<Cell> methods;
  std::vector<std::string> notes;
};

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<Image> observations(const Context& ctx, const Pixel& c, const WarpMatrixd& G, std::size_t k) {
  std::vector<Image> obs;
  obs.reserve(static_cast<std::size_t>(G.cols()));
  std::mt19937_64 noise_rng((ctx.cfg.test_seed ^ k) ^ 0x5a5a5a5a5a5a5a5aULL);
  for (Eigen::Index j = 0; j < G.cols(); ++j) {
    Image o = render_observation(ctx.img, c, G.col(j), ctx.radius);
    if (ctx.cfg.noise_sigma > 0) {
      for (int y = 0; y < o.height(); ++y)
        for (int x = 0; x < o.width(); ++x)
          o.set(x, y, std::clamp(o(x, y) + ctx.cfg.noise_sigma * gaussian(noise_rng), 0.0, 1.0));
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

KeypointOutcome evaluate_keypoint(const Context& ctx, const std::vector<MethodSpec>& methods, const Pixel& c,
                                  std::size_t k) {
  KeypointOutcome out;
  out.methods.resize(methods.size());
  const WarpMatrixd G = sample_warps(ctx.cfg.test_ranges(), ctx.cfg.test_warps, ctx.cfg.test_seed ^ k);
  const std::vector<Image> obs = observations(ctx, c, G, k);
  const std::size_t T = obs.size();
  const int repeats = ctx.cfg.timing_repeats;

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const MethodSpec& ms = methods[mi];
    Cell& cell = out.methods[mi];
    std::optional<Trained> trained;
    std::vector<double> times;
    try {
      for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        Trained t = train(ctx, ms, c);
        times.push_back(elapsed_ms(t0));
        if (!trained) trained = std::move(t);
      }
    } catch (const Error& e) {
      cell.skipped = T;
      out.notes.push_back(ms.name() + ": training failed, " + std::to_string(T) + " cells skipped (" + e.what() + ")");
      continue;
    }
    cell.trained = true;
    cell.train_ms = median(times);

    std::vector<char> ok(T, 0);
    std::string first_error;
    times.clear();
    for (int r = 0; r < repeats; ++r) {
      std::size_t done = 0;
      const auto t0 = Clock::now();
      for (std::size_t j = 0; j < T; ++j) {
        if (r > 0 && !ok[j]) continue;
        try {
          const AffineParamsd p = refine(ctx, *trained, obs[j]);
          if (r == 0) {
            ok[j] = 1;
            cell.sum_sq += (p - G.col(static_cast<Eigen::Index>(j))).squaredNorm();
          }
          ++done;
        } catch (const Error& e) {
          if (first_error.empty()) first_error = e.what();
        }
      }
      const double ms_total = elapsed_ms(t0);
      if (done > 0) times.push_back(ms_total / static_cast<double>(done));
    }
    cell.cells = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    cell.skipped = T - cell.cells;
    cell.refine_ms = median(times);
    if (cell.skipped > 0) {
      out.notes.push_back(ms.name() + ": " + std::to_string(cell.skipped) + " of " + std::to_string(T) +
                          " test warps skipped (" + first_error + ")");
    }
  }
  return out;
}

void prepare_context(Context& ctx, const std::vector<MethodSpec>& methods, std::optional<double>* build_ms) {
  const BenchConfig& c = ctx.cfg;
  ctx.P = sample_warps(c.train_ranges(), c.m, c.train_seed);
  bool need_model = false;
  for (const MethodSpec& ms : methods) {
    if (ms.uses_dct() && !ctx.dct.count(ms.retained)) ctx.dct.emplace(ms.retained, build_dct_mapping(c.side, ms.retained));
    need_model = need_model || ms.symbolic();
  }
  if (need_model) {
    const auto t0 = Clock::now();
    ctx.model = build_symbolic_model(ctx.spec, c.train_ranges(), c.m, c.train_seed, 0, c.threads);
    if (build_ms) *build_ms = elapsed_ms(t0);
  }
}

std::vector<KeypointOutcome> evaluate_all(const Context& ctx, const std::vector<MethodSpec>& methods,
                                          const std::vector<Pixel>& corners) {
  std::vector<KeypointOutcome> outcomes(corners.size());
  parallel_for(corners.size(), ctx.cfg.threads,
               [&](std::size_t k) { outcomes[k] = evaluate_keypoint(ctx, methods, corners[k], k); });
  for (std::size_t k = 0; k < corners.size(); ++k) {
    for (const std::string& note : outcomes[k].notes) {
      warn("keypoint " + std::to_string(k) + " (" + std::to_string(corners[k].x()) + "," +
           std::to_string(corners[k].y()) + ") " + note);
    }
  }
  return outcomes;
}

int bench_margin(const BenchConfig& c) {
  const PatchSpec spec{c.side, c.stride};
  const int train_reach = reach(compute_bbox(spec, c.train_ranges()));
  return std::max({observation_footprint(c), train_reach, spec.half() + 1}) + 2;
}

std::vector<Pixel> detect_for(const Image& img, const BenchConfig& c, int margin) {
  std::vector<Pixel> corners = detect_corners(img, c.max_corners, c.min_score, margin);
  if (corners.empty()) throw Error("no corner survives the border margin of " + std::to_string(margin) + " px");
  return corners;
}

SyntheticReport synthetic_on(const BenchConfig& config, const Image& img, const std::vector<Pixel>& corners) {
  Context ctx(config, img);
  SyntheticReport report;
  report.corners = corners;
  report.test_warps = static_cast<std::size_t>(config.test_warps);
  prepare_context(ctx, config.methods, &report.model_build_ms);
  const std::vector<KeypointOutcome> outcomes = evaluate_all(ctx, config.methods, corners);

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodResult res;
    res.method = config.methods[mi].name();
    double sum_sq = 0.0;
    std::size_t trained = 0;
    for (const KeypointOutcome& o : outcomes) {
      const Cell& cell = o.methods[mi];
      sum_sq += cell.sum_sq;
      res.cells += cell.cells;
      res.skipped += cell.skipped;
      if (cell.trained) {
        ++trained;
        res.train_ms += cell.train_ms;
        res.refine_ms += cell.refine_ms;
      }
    }
    res.keypoints = trained;
    if (trained > 0) {
      res.train_ms /= static_cast<double>(trained);
      res.refine_ms /= static_cast<double>(trained);
    }
    res.rmse = res.cells > 0 ? std::sqrt(sum_sq / (6.0 * static_cast<double>(res.cells)))
                             : std::numeric_limits<double>::quiet_NaN();
    report.methods.push_back(res);
  }
  return report;
}

}  // namespace

Image render_observation(const Image& src, const Pixel& center, const AffineParamsd& g, int radius) {
  const AffineMatrixd Minv = to_matrix(invert(g));
  const Point c = center.cast<double>();
  return Image::from_function(2 * radius + 1, 2 * radius + 1, [&](int x, int y) {
    const Eigen::Vector2d off(x - radius, y - radius);
    return bilinear_sample(src, c + Minv.leftCols<2>() * off + Minv.col(2));
  });
}

Image load_bench_image(const BenchConfig& config) {
  if (config.image == "@texture") return make_texture(480, 360, config.texture_seed);
  if (config.image == "@leaves") return make_dead_leaves(480, 360, config.texture_seed);
  return load_pgm(config.image);
}

std::vector<Pixel> bench_corners(const Image& img, const BenchConfig& config) {
  return detect_for(img, config, bench_margin(config));
}

SyntheticReport run_synthetic(const BenchConfig& config, const Image& img) {
  config.validate();
  return synthetic_on(config, img, bench_corners(img, config));
}

SyntheticReport run_synthetic(const BenchConfig& config) {
  config.validate();
  return run_synthetic(config, load_bench_image(config));
}

void write_synthetic_csv(const SyntheticReport& report, std::ostream& os) {
  os << "method,keypoints,cells,skipped,rmse,train_ms,refine_ms\n";
  std::size_t cells = 0, skipped = 0;
  for (const MethodResult& r : report.methods) {
    os << r.method << ',' << r.keypoints << ',' << r.cells << ',' << r.skipped << ',' << fixed(r.rmse, 6) << ','
       << fixed(r.train_ms, 4) << ',' << fixed(r.refine_ms, 5) << '\n';
    cells += r.cells;
    skipped += r.skipped;
  }
  if (report.model_build_ms) os << "sym-model-build,,,,," << fixed(*report.model_build_ms, 4) << ",\n";
  os << "total," << report.corners.size() << ',' << cells << ',' << skipped << ",,,\n";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "m") return SweepAxis::m;
  if (name == "side") return SweepAxis::side;
  if (name == "var") return SweepAxis::var;
  throw ConfigError("unknown sweep axis '" + name + "' (expected m, side or var)");
}

std::vector<SweepRow> run_sweep(const BenchConfig& config, SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<BenchConfig> configs;
  for (double v : values) {
    BenchConfig c = config;
    switch (axis) {
      case SweepAxis::m:
        if (v != std::floor(v)) throw ConfigError("m values must be integers");
        c.m = static_cast<Eigen::Index>(v);
        break;
      case SweepAxis::side:
        if (v != std::floor(v)) throw ConfigError("side values must be integers");
        c.side = static_cast<int>(v);
        break;
      case SweepAxis::var:
        c.train_translation = v;
        c.test_translation = v;
        break;
    }
    c.validate();
    configs.push_back(c);
  }
  // One corner set for the whole sweep, filtered by the widest margin.
  int margin = 0;
  for (const BenchConfig& c : configs) margin = std::max(margin, bench_margin(c));
  const Image img = load_bench_image(config);
  const std::vector<Pixel> corners = detect_for(img, config, margin);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const SyntheticReport rep = synthetic_on(configs[i], img, corners);
    for (const MethodResult& r : rep.methods) rows.push_back({values[i], r});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "axis_value,method,rmse,train_ms,refine_ms\n";
  for (const SweepRow& r : rows) {
    std::ostringstream v;
    v << r.value;
    os << v.str() << ',' << r.result.method << ',' << fixed(r.result.rmse, 6) << ',' << fixed(r.result.train_ms, 4)
       << ',' << fixed(r.result.refine_ms, 5) << '\n';
  }
}

ErrorPredictionReport run_error_prediction(const BenchConfig& config, const Image& img) {
  config.validate();
  BenchConfig c = config;
  c.methods = {MethodSpec{Kind::sym, 0}};
  c.timing_repeats = 1;
  const std::vector<Pixel> corners = bench_corners(img, c);
  Context ctx(c, img);
  prepare_context(ctx, c.methods, nullptr);
  const std::vector<KeypointOutcome> outcomes = evaluate_all(ctx, c.methods, corners);

  ErrorPredictionReport report;
  std::vector<double> predicted, measured;
  for (std::size_t k = 0; k < corners.size(); ++k) {
    const Cell& cell = outcomes[k].methods.front();
    if (!cell.trained || cell.cells == 0) continue;
    const Eigen::VectorXd u = extract_bbox(img, corners[k], ctx.model->bbox);
    const SymbolicTerms terms = instantiate_terms(*ctx.model, u);
    const LinearPredictor lp = learn_symbolic(terms, ctx.model->samples);
    const QualityReport q = expected_sq_error(lp, terms.lin, ctx.model->tr_ppt, k);
    ErrorPredictionRow row;
    row.keypoint = k;
    row.position = corners[k];
    row.predicted_e2 = q.expected_sq_error;
    row.predicted_mse = q.expected_sq_error / (6.0 * static_cast<double>(ctx.model->samples));
    row.measured_mse = cell.sum_sq / (6.0 * static_cast<double>(cell.cells));
    row.skipped = cell.skipped;
    predicted.push_back(row.predicted_e2);
    measured.push_back(row.measured_mse);
    report.rows.push_back(row);
  }
  report.spearman = spearman(predicted, measured);
  return report;
}

ErrorPredictionReport run_error_prediction(const BenchConfig& config) {
  config.validate();
  return run_error_prediction(config, load_bench_image(config));
}

void write_error_prediction_csv(const ErrorPredictionReport& report, std::ostream& os) {
  os << "keypoint,x,y,predicted_e2,predicted_mse,measured_mse\n";
  char buf[64];
  for (const ErrorPredictionRow& r : report.rows) {
    os << r.keypoint << ',' << r.position.x() << ',' << r.position.y() << ',';
    std::snprintf(buf, sizeof buf, "%.9e", r.predicted_e2);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.9e", r.predicted_mse);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.9e", r.measured_mse);
    os << buf << '\n';
  }
  os << "spearman,,,,," << fixed(report.spearman, 6) << '\n';
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("spearman: sequences differ in length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() < 2) {
    warn("rank correlation undefined for fewer than two keypoints");
    return nan;
  }
  const Eigen::VectorXd rx = Eigen::Map<const Eigen::VectorXd>(average_ranks(x).data(), Eigen::Index(x.size()));
  const std::vector<double> ry_v = average_ranks(y);
  const Eigen::VectorXd ry = Eigen::Map<const Eigen::VectorXd>(ry_v.data(), Eigen::Index(y.size()));
  const Eigen::VectorXd dx = rx.array() - rx.mean();
  const Eigen::VectorXd dy = ry.array() - ry.mean();
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) {
    warn("rank correlation undefined: all values tied");
    return nan;
  }
  return dx.dot(dy) / std::sqrt(sxx * syy);
}

}  // namespace slp
