#include "slp/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "slp/parallel.hpp"

namespace slp {

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval scaled(double lo, double hi, double s) { return {std::min(lo * s, hi * s), std::max(lo * s, hi * s)}; }

int upper_extent(const Interval& v) {
  if (v.lo == v.hi && std::floor(v.hi) == v.hi) return static_cast<int>(v.hi);
  return static_cast<int>(std::floor(v.hi)) + 1;
}

int lower_extent(const Interval& v) {
  if (v.lo == v.hi && std::floor(v.lo) == v.lo) return static_cast<int>(v.lo);
  return static_cast<int>(std::ceil(v.lo)) - 1;
}

// Box index of each patch pixel (the identity warp's single tap).
std::vector<std::uint32_t> identity_taps(const PatchSpec& spec, const BoundingBox& bbox) {
  const Eigen::Matrix2Xi off = spec.offsets();
  std::vector<std::uint32_t> d0(static_cast<std::size_t>(off.cols()));
  for (Eigen::Index b = 0; b < off.cols(); ++b) {
    if (!bbox.contains(off(0, b), off(1, b))) throw OutOfBounds("patch pixel outside bounding box");
    d0[static_cast<std::size_t>(b)] = static_cast<std::uint32_t>(bbox.index(off(0, b), off(1, b)));
  }
  return d0;
}

template <typename F>
void for_each_box_tap(const BoundingBox& bbox, const Point& pos, F&& f) {
  const BilinearStencil s(pos);
  s.for_each([&](int x, int y, double w) {
    if (!bbox.contains(x, y)) throw OutOfBounds("warped tap outside bounding box");
    f(static_cast<std::uint32_t>(bbox.index(x, y)), w);
  });
}

}  // namespace

BoundingBox compute_bbox(const PatchSpec& spec, const WarpRangesd& ranges) {
  spec.validate();
  if (!ranges.lo.allFinite() || !ranges.hi.allFinite()) throw std::invalid_argument("warp ranges must be finite");
  const Eigen::Matrix2Xi off = spec.offsets();
  const int xmin = off.row(0).minCoeff(), xmax = off.row(0).maxCoeff();
  const int ymin = off.row(1).minCoeff(), ymax = off.row(1).maxCoeff();
  const auto& lo = ranges.lo;
  const auto& hi = ranges.hi;

  BoundingBox box;
  bool first = true;
  for (const int x : {xmin, xmax}) {
    for (const int y : {ymin, ymax}) {
      const Interval a = scaled(lo(0), hi(0), x), b = scaled(lo(1), hi(1), y);
      const Interval c = scaled(lo(3), hi(3), x), d = scaled(lo(4), hi(4), y);
      const Interval wx{x + a.lo + b.lo + lo(2), x + a.hi + b.hi + hi(2)};
      const Interval wy{y + c.lo + d.lo + lo(5), y + c.hi + d.hi + hi(5)};
      const int l = -lower_extent(wx), r = upper_extent(wx);
      const int t = -lower_extent(wy), btm = upper_extent(wy);
      if (first) {
        box = {l, r, t, btm};
        first = false;
      } else {
        box = {std::max(box.left, l), std::max(box.right, r), std::max(box.top, t), std::max(box.bottom, btm)};
      }
    }
  }
  return box;
}

WarpCoefficientMatrix build_wcm(const PatchSpec& spec, const AffineParamsd& dp, const BoundingBox& bbox) {
  const Eigen::Matrix2Xd off = spec.offsets().cast<double>();
  const AffineMatrixd M = to_matrix(dp);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(off.cols()) * 4);
  for (Eigen::Index b = 0; b < off.cols(); ++b) {
    for_each_box_tap(bbox, apply(M, off.col(b)), [&](std::uint32_t d, double w) {
      trips.emplace_back(static_cast<int>(b), static_cast<int>(d), w);
    });
  }
  WarpCoefficientMatrix wcm(off.cols(), bbox.count());
  wcm.setFromTriplets(trips.begin(), trips.end());
  return wcm;
}

Eigen::VectorXd SymbolicY::apply(Eigen::Index c, const Eigen::VectorXd& u) const {
  if (u.size() != l) throw DimensionMismatch("bounding-box vector length");
  Eigen::VectorXd out(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Fiber& f = fiber(b, c);
    double s = 0.0;
    for (int t = 0; t < f.size; ++t) s += f.taps[t].v * u(f.taps[t].d);
    out(b) = s;
  }
  return out;
}

SymbolicY build_Y(const PatchSpec& spec, const WarpMatrixd& P, const BoundingBox& bbox, int threads) {
  spec.validate();
  const Eigen::Matrix2Xd off = spec.offsets().cast<double>();
  const std::vector<std::uint32_t> d0 = identity_taps(spec, bbox);
  SymbolicY Y;
  Y.n = off.cols();
  Y.m = P.cols();
  Y.l = bbox.count();
  Y.fibers.resize(static_cast<std::size_t>(Y.n * Y.m));

  parallel_for(static_cast<std::size_t>(Y.m), threads, [&](std::size_t ci) {
    const auto c = static_cast<Eigen::Index>(ci);
    const AffineMatrixd M = to_matrix(P.col(c));
    for (Eigen::Index b = 0; b < Y.n; ++b) {
      SymbolicY::Fiber& f = Y.fibers[static_cast<std::size_t>(b * Y.m + c)];
      const std::uint32_t id = d0[static_cast<std::size_t>(b)];
      bool merged = false;
      f.size = 0;
      for_each_box_tap(bbox, apply(M, off.col(b)), [&](std::uint32_t d, double w) {
        double v = w;
        if (d == id) {
          v -= 1.0;
          merged = true;
        }
        if (v != 0.0) f.taps[f.size++] = {d, v};
      });
      if (!merged) f.taps[f.size++] = {id, -1.0};
    }
  });
  return Y;
}

LinearTensor build_L(const WarpMatrixd& P, const SymbolicY& Y, int threads) {
  if (P.cols() != Y.m) throw DimensionMismatch("P and Y have different sample counts");
  LinearTensor L;
  L.n = Y.n;
  L.l = Y.l;
  std::vector<std::vector<LinearTensor::Entry>> per_b(static_cast<std::size_t>(Y.n));

  parallel_for(static_cast<std::size_t>(Y.n), threads, [&](std::size_t bi) {
    const auto b = static_cast<Eigen::Index>(bi);
    Eigen::Matrix<double, 6, Eigen::Dynamic> acc = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, Y.l);
    for (Eigen::Index c = 0; c < Y.m; ++c) {
      const SymbolicY::Fiber& f = Y.fiber(b, c);
      for (int t = 0; t < f.size; ++t) acc.col(f.taps[t].d) += f.taps[t].v * P.col(c);
    }
    auto& out = per_b[bi];
    for (Eigen::Index d = 0; d < Y.l; ++d)
      for (int a = 0; a < 6; ++a)
        if (std::abs(acc(a, d)) >= kTensorDropTolerance)
          out.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint16_t>(b), static_cast<std::uint32_t>(d),
                         acc(a, d)});
  });

  for (auto& v : per_b) L.entries.insert(L.entries.end(), v.begin(), v.end());
  std::sort(L.entries.begin(), L.entries.end(), [](const auto& x, const auto& y) {
    return std::tie(x.d, x.b, x.a) < std::tie(y.d, y.b, y.a);
  });
  return L;
}

QuadraticTensor build_Q(const SymbolicY& Y, int threads) {
  const auto n = static_cast<std::size_t>(Y.n);
  const auto m = static_cast<std::size_t>(Y.m);
  const auto l = static_cast<std::size_t>(Y.l);
  QuadraticTensor Q;
  Q.n = Y.n;
  Q.l = Y.l;
  if (n > 65535) throw DimensionMismatch("patch too large for 16-bit pixel indices");

  // Window of each patch pixel: the box pixels its fibers ever touch, and the
  // fibers re-expressed in window-local indices.
  struct LocalFiber {
    std::uint8_t size;
    std::array<std::uint16_t, 5> k;
    std::array<double, 5> v;
  };
  std::vector<std::vector<std::uint32_t>> window(n);
  std::vector<std::int32_t> local(n * l, -1);
  std::vector<LocalFiber> fibers(n * m);
  parallel_for(n, threads, [&](std::size_t b) {
    std::int32_t* loc = local.data() + b * l;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& f = Y.fibers[b * m + c];
      for (int t = 0; t < f.size; ++t) loc[f.taps[t].d] = 0;
    }
    for (std::size_t d = 0; d < l; ++d) {
      if (loc[d] == 0) {
        loc[d] = static_cast<std::int32_t>(window[b].size());
        window[b].push_back(static_cast<std::uint32_t>(d));
      }
    }
    for (std::size_t c = 0; c < m; ++c) {
      const auto& f = Y.fibers[b * m + c];
      LocalFiber& lf = fibers[b * m + c];
      lf.size = f.size;
      for (int t = 0; t < f.size; ++t) {
        lf.k[t] = static_cast<std::uint16_t>(loc[f.taps[t].d]);
        lf.v[t] = f.taps[t].v;
      }
    }
  });

  std::vector<std::vector<QuadraticTensor::Entry>> per_b1(n);
  parallel_for(n, threads, [&](std::size_t b1) {
    const std::int32_t* loc1 = local.data() + b1 * l;
    const auto& win1 = window[b1];
    const std::size_t w1 = win1.size();
    std::vector<double> acc;
    auto& out = per_b1[b1];
    for (std::size_t b2 = b1; b2 < n; ++b2) {
      const std::int32_t* loc2 = local.data() + b2 * l;
      const auto& win2 = window[b2];
      const std::size_t w2 = win2.size();
      acc.assign(w1 * w2, 0.0);
      const LocalFiber* f1 = fibers.data() + b1 * m;
      const LocalFiber* f2 = fibers.data() + b2 * m;
      for (std::size_t c = 0; c < m; ++c) {
        for (int t1 = 0; t1 < f1[c].size; ++t1) {
          double* row = acc.data() + f1[c].k[t1] * w2;
          const double v1 = f1[c].v[t1];
          for (int t2 = 0; t2 < f2[c].size; ++t2) row[f2[c].k[t2]] += v1 * f2[c].v[t2];
        }
      }
      // Fold (d1, d2) and (d2, d1) into the unordered pair.
      for (std::size_t k1 = 0; k1 < w1; ++k1) {
        const std::uint32_t d1 = win1[k1];
        for (std::size_t k2 = 0; k2 < w2; ++k2) {
          const std::uint32_t d2 = win2[k2];
          const std::int32_t m1 = loc1[d2], m2 = loc2[d1];
          const bool mirrored = d1 != d2 && m1 >= 0 && m2 >= 0;
          double v = acc[k1 * w2 + k2];
          if (d1 > d2 && mirrored) continue;
          if (d1 < d2 && mirrored) v += acc[static_cast<std::size_t>(m1) * w2 + static_cast<std::size_t>(m2)];
          if (std::abs(v) < kTensorDropTolerance) continue;
          out.push_back({static_cast<std::uint16_t>(b1), static_cast<std::uint16_t>(b2), std::min(d1, d2),
                         std::max(d1, d2), v});
        }
      }
    }
  });

  std::size_t total = 0;
  for (const auto& v : per_b1) total += v.size();
  Q.entries.reserve(total);
  for (auto& v : per_b1) {
    Q.entries.insert(Q.entries.end(), v.begin(), v.end());
    std::vector<QuadraticTensor::Entry>().swap(v);
  }
  std::sort(Q.entries.begin(), Q.entries.end(), [](const auto& x, const auto& y) {
    return std::tie(x.d1, x.d2, x.b1, x.b2) < std::tie(y.d1, y.d2, y.b1, y.b2);
  });
  return Q;
}

std::pair<std::uint32_t, std::uint32_t> QuadraticTensor::pair_from_index(std::uint64_t e, std::uint64_t l) {
  // Largest d1 whose row start is <= e.
  std::uint64_t lo = 0, hi = l;
  while (hi - lo > 1) {
    const std::uint64_t mid = (lo + hi) / 2;
    if (pair_index(mid, mid, l) <= e) lo = mid;
    else hi = mid;
  }
  const std::uint64_t d2 = lo + (e - pair_index(lo, lo, l));
  return {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(d2)};
}

PredictorMatrix instantiate_linear(const LinearTensor& L, const Eigen::VectorXd& u) {
  if (u.size() != L.l) throw DimensionMismatch("bounding-box vector length does not match L");
  PredictorMatrix out = PredictorMatrix::Zero(6, L.n);
  for (const auto& e : L.entries) out(e.a, e.b) += e.v * u(e.d);
  return out;
}

Eigen::MatrixXd instantiate_quadratic(const QuadraticTensor& Q, const Eigen::VectorXd& u) {
  if (u.size() != Q.l) throw DimensionMismatch("bounding-box vector length does not match Q");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Q.n, Q.n);
  const double* uu = u.data();
  double* o = out.data();
  const Eigen::Index ld = Q.n;
  for (const auto& e : Q.entries) o[e.b1 + e.b2 * ld] += e.v * (uu[e.d1] * uu[e.d2]);
  out.triangularView<Eigen::StrictlyLower>() = out.transpose();
  return out;
}

SymbolicModel build_symbolic_model(const PatchSpec& spec, const WarpRangesd& ranges, Eigen::Index m,
                                   std::uint64_t seed, int retained, int threads) {
  spec.validate();
  if (!ranges.valid()) throw std::invalid_argument("invalid warp ranges");
  if (m < 1) throw std::invalid_argument("need at least one training warp");
  if (retained != 0 && !spec.dense()) throw std::invalid_argument("DCT needs the dense patch grid");
  SymbolicModel model;
  model.spec = spec;
  model.ranges = ranges;
  model.bbox = compute_bbox(spec, ranges);
  model.samples = m;
  model.seed = seed;
  model.retained = retained;
  const WarpMatrixd P = sample_warps(ranges, m, seed);
  model.tr_ppt = P.squaredNorm();
  {
    const SymbolicY Y = build_Y(spec, P, model.bbox, threads);
    model.L = build_L(P, Y, threads);
    model.Q = build_Q(Y, threads);
  }
  if (retained > 0) model.dct = build_dct_mapping(spec.side, retained);
  return model;
}

SymbolicTerms instantiate_terms(const SymbolicModel& model, const Eigen::VectorXd& u) {
  if (u.size() != model.l()) throw DimensionMismatch("bounding-box vector length does not match model");
  const Eigen::VectorXd centered = u.array() - u.mean();
  return {instantiate_linear(model.L, centered), instantiate_quadratic(model.Q, centered)};
}

Eigen::VectorXd reference_from_bbox(const SymbolicModel& model, const Eigen::VectorXd& u) {
  if (u.size() != model.bbox.count()) throw DimensionMismatch("bounding-box vector length does not match model");
  const Eigen::Matrix2Xi off = model.spec.offsets();
  Eigen::VectorXd t(off.cols());
  for (Eigen::Index b = 0; b < off.cols(); ++b) t(b) = u(model.bbox.index(off(0, b), off(1, b)));
  return t;
}

LinearPredictor learn_symbolic(const SymbolicTerms& terms, Eigen::Index samples, std::optional<double> ridge) {
  return {solve_predictor(terms.lin, terms.gram, ridge.value_or(default_ridge(terms.gram))), Learner::sym, 0, samples};
}

LinearPredictor learn_symbolic(const SymbolicModel& model, const Eigen::VectorXd& u, std::optional<double> ridge) {
  return learn_symbolic(instantiate_terms(model, u), model.samples, ridge);
}

LinearPredictor learn_symbolic_dct(const SymbolicTerms& terms, Eigen::Index samples, const DctMapping& map,
                                   std::optional<double> ridge) {
  if (map.Wr.cols() != terms.gram.rows()) throw DimensionMismatch("DCT mapping does not match patch size");
  const PredictorMatrix lin = terms.lin * map.Wr.transpose();
  const Eigen::MatrixXd gram = map.Wr * terms.gram * map.Wr.transpose();
  const PredictorMatrix reduced = solve_predictor(lin, gram, ridge.value_or(default_ridge(gram)));
  return {reduced * map.Wr, Learner::symdct, map.retained, samples};
}

LinearPredictor learn_symbolic_dct(const SymbolicModel& model, const Eigen::VectorXd& u, std::optional<double> ridge) {
  if (!model.dct) throw std::invalid_argument("symbolic model has no DCT mapping");
  return learn_symbolic_dct(instantiate_terms(model, u), model.samples, *model.dct, ridge);
}

}  // namespace slp
