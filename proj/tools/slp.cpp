// slp: benchmark and utility front end.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slp/bench.hpp"
#include "slp/energy.hpp"
#include "slp/errors.hpp"
#include "slp/lp.hpp"
#include "slp/symbolic.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct BenchFlags {
  std::string config_file;
  slp::ConfigMap overrides;
};

// Registers --<key> for every config key; values land in flags.overrides.
void add_config_flags(CLI::App* app, BenchFlags& flags) {
  app->add_option("--config", flags.config_file, "key = value config file");
  for (const std::string& key : slp::config_keys()) {
    app->add_option_function<std::string>(
        "--" + key, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, "overrides '" + key + "'");
  }
}

slp::BenchConfig resolve_config(const BenchFlags& flags) {
  slp::ConfigMap map;
  if (!flags.config_file.empty()) map = slp::parse_config_file(flags.config_file);
  for (const auto& [k, v] : flags.overrides) map[k] = v;
  return slp::config_from_map(map);
}

template <typename Writer>
void emit(const slp::BenchConfig& config, Writer&& write) {
  if (config.output.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(config.output, std::ios::binary);
  if (!out) throw slp::IoError("cannot write " + config.output);
  write(out);
  if (!out) throw slp::IoError("write failed: " + config.output);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw slp::ConfigError("bad sweep value '" + tok + "'");
    }
  }
  return values;
}

slp::AffineParamsd parse_params(const std::string& text) {
  const std::vector<double> v = parse_values(text);
  if (v.size() != 6) throw slp::ConfigError("a warp needs 6 comma-separated parameters");
  return Eigen::Map<const slp::AffineParamsd>(v.data());
}

void print_params(const slp::AffineParamsd& p) {
  for (int i = 0; i < 6; ++i) std::printf(i ? " %.9f" : "%.9f", p(i));
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subpixel patch alignment with energy aligners and linear predictors"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Synthetic alignment benchmarks (CSV output)");
  bench->require_subcommand(1);

  BenchFlags syn_flags;
  auto* synthetic = bench->add_subcommand("synthetic", "RMSE and timing per method");
  add_config_flags(synthetic, syn_flags);

  BenchFlags sweep_flags;
  std::string axis = "m";
  std::string values_text;
  auto* sweep = bench->add_subcommand("sweep", "One synthetic run per axis value");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "m, side or var")->check(CLI::IsMember({"m", "side", "var"}));
  sweep->add_option("--values", values_text, "comma-separated axis values")->required();

  BenchFlags err_flags;
  auto* errpred = bench->add_subcommand("errpred", "Predicted vs measured alignment error per keypoint");
  add_config_flags(errpred, err_flags);

  auto* model = app.add_subcommand("model", "Symbolic model files");
  model->require_subcommand(1);
  std::string model_out;
  int model_side = 9, model_stride = 1, model_retained = 0, model_threads = 0;
  long long model_m = 5000;
  std::uint64_t model_seed = 1;
  double model_trans = 1.0, model_deform = 0.2;
  auto* build = model->add_subcommand("build", "Precompute L and Q for a patch geometry");
  build->add_option("--out", model_out, "output file")->required();
  build->add_option("--side", model_side, "patch side");
  build->add_option("--stride", model_stride, "sampling stride");
  build->add_option("--m", model_m, "training warps");
  build->add_option("--seed", model_seed, "warp sampling seed");
  build->add_option("--translation", model_trans, "translation range +-t");
  build->add_option("--deformation", model_deform, "range +-d of the other parameters");
  build->add_option("--retained", model_retained, "DCT coefficients for symdct (0: none)");
  build->add_option("--threads", model_threads, "worker threads (0: all cores)");

  std::string inspect_path;
  auto* inspect = model->add_subcommand("inspect", "Print a model file header");
  inspect->add_option("file", inspect_path, "model file")->required();

  std::string ref_target, ref_method = "sym", ref_model, ref_warp;
  int ref_x = -1, ref_y = -1;
  BenchFlags ref_flags;
  auto* refine = app.add_subcommand("refine", "Align one keypoint with one method and print the 6 parameters");
  refine->add_option("--x", ref_x, "keypoint x")->required();
  refine->add_option("--y", ref_y, "keypoint y")->required();
  refine->add_option("--method", ref_method, "iclk, esm, jd, dct-r, hp, hpdct-r, sym, symdct-r");
  refine->add_option("--target", ref_target, "PGM to align against (default: a synthetic observation)");
  refine->add_option("--warp", ref_warp, "ground-truth warp p0,..,p5 for the synthetic observation");
  refine->add_option("--model", ref_model, "prebuilt model file for sym/symdct");
  add_config_flags(refine, ref_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synthetic->parsed()) {
      const slp::BenchConfig config = resolve_config(syn_flags);
      const slp::SyntheticReport report = slp::run_synthetic(config);
      emit(config, [&](std::ostream& os) { slp::write_synthetic_csv(report, os); });
    } else if (sweep->parsed()) {
      const slp::BenchConfig config = resolve_config(sweep_flags);
      const auto rows = slp::run_sweep(config, slp::parse_sweep_axis(axis), parse_values(values_text));
      emit(config, [&](std::ostream& os) { slp::write_sweep_csv(rows, os); });
    } else if (errpred->parsed()) {
      const slp::BenchConfig config = resolve_config(err_flags);
      const slp::ErrorPredictionReport report = slp::run_error_prediction(config);
      emit(config, [&](std::ostream& os) { slp::write_error_prediction_csv(report, os); });
    } else if (build->parsed()) {
      const slp::PatchSpec spec{model_side, model_stride};
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw slp::ConfigError(e.what());
      }
      const auto ranges = slp::WarpRangesd::symmetric(model_trans, model_deform);
      if (!ranges.valid() || model_m < 7) throw slp::ConfigError("bad ranges or m");
      const slp::SymbolicModel mdl =
          slp::build_symbolic_model(spec, ranges, model_m, model_seed, model_retained, model_threads);
      slp::save_model(mdl, model_out);
      std::printf("wrote %s: n=%lld l=%lld L=%zu Q=%zu\n", model_out.c_str(), static_cast<long long>(mdl.n()),
                  static_cast<long long>(mdl.l()), mdl.L.entries.size(), mdl.Q.entries.size());
    } else if (inspect->parsed()) {
      const slp::SymbolicModel mdl = slp::load_model(inspect_path);
      std::printf("side %d stride %d n %lld m %lld seed %llu\n", mdl.spec.side, mdl.spec.stride,
                  static_cast<long long>(mdl.n()), static_cast<long long>(mdl.samples),
                  static_cast<unsigned long long>(mdl.seed));
      std::printf("bbox left %d right %d top %d bottom %d (l = %lld)\n", mdl.bbox.left, mdl.bbox.right,
                  mdl.bbox.top, mdl.bbox.bottom, static_cast<long long>(mdl.l()));
      for (int i = 0; i < 6; ++i) std::printf("p%d [%g, %g]\n", i, mdl.ranges.lo(i), mdl.ranges.hi(i));
      std::printf("retained %d tr_ppt %.6f\n", mdl.retained, mdl.tr_ppt);
      std::printf("L entries %zu, Q entries %zu\n", mdl.L.entries.size(), mdl.Q.entries.size());
    } else if (refine->parsed()) {
      slp::ConfigMap overrides = ref_flags.overrides;
      overrides["methods"] = ref_method;
      BenchFlags flags{ref_flags.config_file, overrides};
      const slp::BenchConfig config = resolve_config(flags);
      const slp::MethodSpec ms = config.methods.front();
      const slp::Image src = slp::load_bench_image(config);
      const slp::PatchSpec spec{config.side, config.stride};
      const slp::Pixel c(ref_x, ref_y);

      slp::Image target;
      slp::Point tc = c.cast<double>();
      if (!ref_target.empty()) {
        target = slp::load_pgm(ref_target);
      } else {
        const slp::AffineParamsd g = ref_warp.empty() ? slp::AffineParamsd::Zero() : parse_params(ref_warp);
        const int radius = slp::compute_bbox(spec, config.test_ranges()).width() + spec.side;
        target = slp::render_observation(src, c, g, radius);
        tc = slp::Point(radius, radius);
      }

      const slp::AffineParamsd p0 = slp::AffineParamsd::Zero();
      slp::RefineOptions opts;
      opts.max_iters = config.energy_iterations;
      opts.tol = config.energy_tol;
      slp::AlignResult res;
      using K = slp::MethodSpec::Kind;
      if (ms.kind == K::iclk) {
        res = slp::iclk_refine(slp::iclk_precompute(src, c, spec), target, tc, p0, opts);
      } else if (ms.kind == K::esm) {
        res = slp::esm_refine(slp::template_jacobian(src, c, spec), target, tc, p0, opts);
      } else {
        std::optional<slp::DctMapping> map;
        if (ms.uses_dct()) map = slp::build_dct_mapping(config.side, ms.retained);
        slp::LinearPredictor lp;
        Eigen::VectorXd reference = slp::extract_template(src, c, spec);
        if (ms.symbolic()) {
          const slp::SymbolicModel mdl =
              ref_model.empty()
                  ? slp::build_symbolic_model(spec, config.train_ranges(), config.m, config.train_seed, 0, config.threads)
                  : slp::load_model(ref_model);
          if (!(mdl.spec == spec)) throw slp::ConfigError("model patch geometry differs from --side/--stride");
          const Eigen::VectorXd u = slp::extract_bbox(src, c, mdl.bbox);
          const slp::SymbolicTerms terms = slp::instantiate_terms(mdl, u);
          lp = ms.kind == K::sym ? slp::learn_symbolic(terms, mdl.samples)
                                 : slp::learn_symbolic_dct(terms, mdl.samples, *map);
        } else {
          const slp::WarpMatrixd P = slp::sample_warps(config.train_ranges(), config.m, config.train_seed);
          const slp::ErrorMatrix E = slp::build_error_matrix(src, c, spec, P);
          switch (ms.kind) {
            case K::jd: lp = slp::learn_jd(P, E); break;
            case K::dct: lp = slp::learn_dct(P, E, *map); break;
            case K::hp: lp = slp::learn_hp(P, E); break;
            default: lp = slp::learn_hpdct(P, E, *map); break;
          }
        }
        res = slp::predict(lp, reference, spec, target, tc, p0, config.lp_iterations);
      }
      print_params(res.p);
    }
  } catch (const slp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
