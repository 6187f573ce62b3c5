#include "bmlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include "bmlab/error.hpp"
#include "bmlab/integrals.hpp"
#include "bmlab/parallel.hpp"

namespace bm {

VectorField translate(const VectorField& f, const Point& y) {
  if (static_cast<int>(y.size()) != f.ambient()) throw ConfigError("translate: shift dimension mismatch");
  return f.translated(y);
}

std::size_t AveragingPlan::cube_count() const {
  std::size_t c = 1;
  for (std::size_t i = 0; i < k_lo.size(); ++i) c *= static_cast<std::size_t>(per_axis);
  return c;
}

std::vector<DyadicIndex> AveragingPlan::cubes() const {
  const std::size_t n = k_lo.size();
  std::vector<DyadicIndex> out;
  out.reserve(cube_count());
  LatticeVec off(n, 0);
  for (;;) {
    DyadicIndex c{scale, k_lo};
    for (std::size_t i = 0; i < n; ++i) c.k[i] += off[i];
    out.push_back(c);
    // Odometer with the last axis fastest, which keeps the output lexicographic.
    std::size_t ax = n;
    while (ax > 0) {
      --ax;
      if (++off[ax] < per_axis) break;
      off[ax] = 0;
      if (ax == 0) return out;
    }
    if (n == 0) return out;
  }
}

AveragingPlan averaging_plan(int a, const LatticeWindow& window) {
  window.validate();
  if (std::abs(a) > kMaxScale) throw ConfigError("averaging_plan: |a| exceeds the supported scale range");
  const Box cov = window.coverage();
  const double side = std::ldexp(1.0, a);
  const auto lo = static_cast<std::int64_t>(std::floor(cov.corner[0] / side));
  const auto hi = static_cast<std::int64_t>(std::ceil((cov.corner[0] + cov.side) / side));
  AveragingPlan plan;
  plan.a = a;
  plan.scale = -a;
  plan.k_lo = LatticeVec(static_cast<std::size_t>(window.n), lo);
  plan.per_axis = hi - lo;
  plan.coverage.corner = Point(static_cast<std::size_t>(window.n), static_cast<double>(lo) * side);
  plan.coverage.side = static_cast<double>(hi - lo) * side;
  if (plan.per_axis <= 0) throw ConfigError("averaging_plan: empty window");
  return plan;
}

CVec cube_mean(const VectorField& f, const Box& cube, const QuadratureSpec& q) {
  const auto d = static_cast<std::size_t>(f.dim());
  if (f.kind() == FieldKind::constant) return f.node().vec;
  const auto supp = f.support();
  if (supp && !supp->intersects(cube)) return CVec(d, 0.0);
  auto g = [f, d](const Point& x, std::span<double> out) {
    const CVec v = f(x);
    for (std::size_t i = 0; i < d; ++i) {
      out[2 * i] = v[i].real();
      out[2 * i + 1] = v[i].imag();
    }
  };
  const std::vector<Point> sing = f.singular_points();
  const MultiIntegralResult r = integrate_box(g, 2 * d, cube, q, sing);
  const double vol = cube.volume();
  CVec m(d);
  for (std::size_t i = 0; i < d; ++i) m[i] = Complex(r.values[2 * i] / vol, r.values[2 * i + 1] / vol);
  return m;
}

namespace {

bool box_inside(const Box& inner, const Box& outer) {
  for (std::size_t i = 0; i < inner.dim(); ++i) {
    if (inner.corner[i] < outer.corner[i]) return false;
    if (inner.corner[i] + inner.side > outer.corner[i] + outer.side) return false;
  }
  return true;
}

LatticeVec shifted_key(const LatticeVec& k, int shift) {
  LatticeVec out = k;
  for (auto& v : out) v >>= shift;  // arithmetic shift == floor division by 2^shift
  return out;
}

bool is_zero(const CVec& v) {
  return std::all_of(v.begin(), v.end(), [](Complex c) { return c == 0.0; });
}

}  // namespace

std::vector<CVec> cube_means(const VectorField& f, int scale, const std::vector<DyadicIndex>& cubes,
                             const QuadratureSpec& q) {
  const auto d = static_cast<std::size_t>(f.dim());
  const FieldNode& nd = f.node();
  std::vector<CVec> out(cubes.size(), CVec(d, 0.0));
  switch (nd.kind) {
    case FieldKind::zero: return out;
    case FieldKind::constant:
      std::fill(out.begin(), out.end(), nd.vec);
      return out;
    case FieldKind::affine:
      // The mean of an affine function over a cube is its value at the center.
      for (std::size_t i = 0; i < cubes.size(); ++i) out[i] = f(to_box(cubes[i]).center());
      return out;
    case FieldKind::piecewise_constant: {
      if (nd.coverage)
        for (const auto& c : cubes)
          if (!box_inside(to_box(c), *nd.coverage))
            throw ConfigError("dyadic average: cube outside the cached window of a piecewise-constant field");
      const int js = nd.cube_scale;
      if (js <= scale) {
        for (std::size_t i = 0; i < cubes.size(); ++i) {
          const auto it = nd.values.find(shifted_key(cubes[i].k, scale - js));
          if (it != nd.values.end()) out[i] = it->second;
        }
        return out;
      }
      const int shift = js - scale;
      CubeValues sums;
      for (const auto& [k, v] : nd.values) {
        auto [it, fresh] = sums.try_emplace(shifted_key(k, shift), CVec(d, 0.0));
        for (std::size_t c = 0; c < d; ++c) it->second[c] += v[c];
      }
      const double w = std::ldexp(1.0, -shift * f.ambient());
      for (std::size_t i = 0; i < cubes.size(); ++i) {
        const auto it = sums.find(cubes[i].k);
        if (it == sums.end()) continue;
        for (std::size_t c = 0; c < d; ++c) out[i][c] = it->second[c] * w;
      }
      return out;
    }
    case FieldKind::linear_combination: {
      // Same accumulation order as pointwise evaluation of Σ c_i E f_i.
      for (const auto& [coef, term] : nd.terms) {
        const std::vector<CVec> part = cube_means(term, scale, cubes, q);
        for (std::size_t i = 0; i < cubes.size(); ++i)
          for (std::size_t c = 0; c < d; ++c) out[i][c] += coef * part[i][c];
      }
      return out;
    }
    default: break;
  }
  parallel_for(cubes.size(), [&](std::size_t i) { out[i] = cube_mean(f, to_box(cubes[i]), q); });
  return out;
}

namespace {

std::string plan_key(const VectorField& f, const AveragingPlan& plan, const QuadratureSpec& q) {
  std::ostringstream os;
  os << static_cast<const void*>(&f.node()) << '|' << plan.a << '|' << std::hexfloat << plan.coverage.side;
  for (double c : plan.coverage.corner) os << ',' << c;
  os << '|' << q.points_per_axis << ',' << q.max_depth << ',' << q.rel_tol << ',' << q.max_cells;
  return os.str();
}

struct AverageCache {
  std::mutex mutex;
  // The stored source field keeps its node alive, so the address in the key stays unique.
  std::map<std::string, std::pair<VectorField, VectorField>> entries;
};

AverageCache& average_cache() {
  static AverageCache cache;
  return cache;
}

}  // namespace

VectorField dyadic_average(const VectorField& f, int a, const LatticeWindow& window, const QuadratureSpec& q) {
  if (window.n != f.ambient()) throw ConfigError("dyadic_average: window dimension does not match the field");
  q.validate();
  const AveragingPlan plan = averaging_plan(a, window);
  const std::string key = plan_key(f, plan, q);
  AverageCache& cache = average_cache();
  {
    std::lock_guard lock(cache.mutex);
    const auto it = cache.entries.find(key);
    if (it != cache.entries.end()) return it->second.second;
  }
  const std::vector<DyadicIndex> cubes = plan.cubes();
  const std::vector<CVec> means = cube_means(f, plan.scale, cubes, q);
  CubeValues values;
  for (std::size_t i = 0; i < cubes.size(); ++i)
    if (!is_zero(means[i])) values.emplace(cubes[i].k, means[i]);
  VectorField avg = VectorField::piecewise_constant(f.dim(), f.ambient(), plan.scale, std::move(values), plan.coverage);
  std::lock_guard lock(cache.mutex);
  const auto [it, fresh] = cache.entries.try_emplace(key, f, avg);
  return it->second.second;
}

VectorField collection_average(const VectorField& f, const std::vector<DyadicIndex>& cubes, const QuadratureSpec& q) {
  q.validate();
  std::set<DyadicIndex> seen;
  int j_lo = kMaxScale;
  for (const auto& c : cubes) {
    if (static_cast<int>(c.dim()) != f.ambient()) throw ConfigError("collection_average: cube dimension mismatch");
    if (!seen.insert(c).second) throw ConfigError("collection_average: cubes overlap (duplicate cube)");
    j_lo = std::min(j_lo, c.j);
  }
  // Dyadic cubes overlap iff one contains the other.
  for (const auto& c : cubes)
    for (int up = 1; c.j - up >= j_lo; ++up)
      if (seen.count(dyadic_parent(c, up))) throw ConfigError("collection_average: cubes overlap");

  std::map<int, std::vector<DyadicIndex>> by_scale;
  for (const auto& c : seen) by_scale[c.j].push_back(c);
  std::vector<std::pair<Complex, VectorField>> parts;
  for (const auto& [j, list] : by_scale) {
    const std::vector<CVec> means = cube_means(f, j, list, q);
    CubeValues values;
    for (std::size_t i = 0; i < list.size(); ++i)
      if (!is_zero(means[i])) values.emplace(list[i].k, means[i]);
    parts.emplace_back(Complex(1.0), VectorField::piecewise_constant(f.dim(), f.ambient(), j, std::move(values)));
  }
  if (parts.empty()) return VectorField::zero(f.dim(), f.ambient());
  if (parts.size() == 1) return parts.front().second;
  return VectorField::linear_combination(parts);
}

namespace {

// Descendants at scale s of each region cube, in region order then lexicographic.
std::vector<DyadicIndex> refine_region(const std::vector<DyadicIndex>& region, int s) {
  std::vector<DyadicIndex> out;
  for (const auto& r : region) {
    const int steps = s - r.j;
    const auto n = r.dim();
    const std::int64_t per = std::int64_t{1} << steps;
    LatticeVec off(n, 0);
    for (;;) {
      DyadicIndex c{s, r.k};
      for (std::size_t i = 0; i < n; ++i) c.k[i] = r.k[i] * per + off[i];
      out.push_back(c);
      std::size_t ax = n;
      bool done = true;
      while (ax > 0) {
        --ax;
        if (++off[ax] < per) {
          done = false;
          break;
        }
        off[ax] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

double lp_over(const VectorField& f, const Weight& w, double p, const std::vector<DyadicIndex>& cubes,
               const QuadratureSpec& q, bool& converged) {
  const CubeIntegrand ig = p_integrand(w, f, p);
  std::vector<double> part(cubes.size(), 0.0);
  std::vector<char> ok(cubes.size(), 1);
  parallel_for(cubes.size(), [&](std::size_t i) {
    const MultiIntegralResult r = integrate(ig, to_box(cubes[i]), q);
    part[i] = r.values[0];
    ok[i] = r.converged;
  });
  CompensatedSum s;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    s.add(part[i]);
    if (!ok[i]) converged = false;
  }
  return std::pow(s.value(), 1.0 / p);
}

double variation(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
}

}  // namespace

AvgLpReport avg_lp_bound_check(const Weight& w, double p, const FieldSuite& suite, const std::vector<int>& a_values,
                               const LatticeWindow& window, const QuadratureSpec& q) {
  if (!(p >= 1.0)) throw ConfigError("avg_lp_bound_check: p must be >= 1");
  if (a_values.empty()) throw ConfigError("avg_lp_bound_check: empty a-range");
  const std::vector<DyadicIndex> region = window_region(window);
  AvgLpReport rep;
  std::vector<double> max_by_a(a_values.size(), 0.0);
  for (const auto& [id, f] : suite) {
    bool skip = false;
    for (std::size_t ai = 0; ai < a_values.size() && !skip; ++ai) {
      const int a = a_values[ai];
      if (-a < window.j_min)
        throw ConfigError("avg_lp_bound_check: averaging cubes must not be coarser than the window region");
      const std::vector<DyadicIndex> cubes = refine_region(region, -a);
      RatioRow row{id, a, 0.0, true};
      const double nf = lp_over(f, w, p, cubes, q, row.converged);
      if (nf == 0.0) {
        rep.skipped.push_back(id);
        skip = true;
        continue;
      }
      const VectorField ef = dyadic_average(f, a, window, q);
      row.ratio = lp_over(ef, w, p, cubes, q, row.converged) / nf;
      max_by_a[ai] = std::max(max_by_a[ai], row.ratio);
      rep.rows.push_back(row);
    }
  }
  for (std::size_t ai = 0; ai < a_values.size(); ++ai) {
    rep.max_by_a.emplace_back(a_values[ai], max_by_a[ai]);
    rep.max_ratio = std::max(rep.max_ratio, max_by_a[ai]);
  }
  // Order along a -> -∞ before testing for monotone growth.
  std::vector<std::pair<int, double>> seq = rep.max_by_a;
  std::sort(seq.begin(), seq.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  bool increasing = seq.size() >= 2;
  for (std::size_t i = 1; i < seq.size(); ++i) increasing = increasing && seq[i].second > seq[i - 1].second;
  rep.growth_flag = increasing && seq.front().second > 0.0 && seq.back().second > 10.0 * seq.front().second;
  return rep;
}

double beta_tilde(int n, double p, double dual_d_tilde) {
  if (p == 1.0) return n;
  const double p_prime = p / (p - 1.0);
  return n + dual_d_tilde * p / p_prime;
}

double ledger_condition(int n, double p, double t, double r, double d_tilde, double bt) {
  const double nn = n;
  if (r == kInf) return d_tilde / p - nn / p - bt * (1.0 / t - 1.0 / p);
  return -nn * r / p + d_tilde * r / p + nn - bt * r * (1.0 / t - 1.0 / p);
}

ExponentLedger exponent_ledger(int n, const SpaceParams& params, double d_tilde, std::optional<double> dual_d_tilde) {
  params.validate();
  if (n < 1) throw ConfigError("exponent_ledger: n must be positive");
  if (params.p > 1.0 && !dual_d_tilde) throw ConfigError("exponent_ledger: p > 1 needs the dual dimension");
  ExponentLedger L;
  L.n = n;
  L.p = params.p;
  L.t = params.t;
  L.r = params.r;
  L.d_tilde = d_tilde;
  L.dual_d_tilde = dual_d_tilde.value_or(0.0);
  L.beta_tilde = beta_tilde(n, L.p, L.dual_d_tilde);
  L.condition_value = ledger_condition(n, L.p, L.t, L.r, L.d_tilde, L.beta_tilde);
  if (params.infinite_r()) {
    L.satisfied = L.condition_value <= 0.0;
    L.equality = L.condition_value == 0.0;
  } else {
    L.satisfied = L.condition_value < 0.0;
  }
  return L;
}

ExponentLedger exponent_ledger(int n, const SpaceParams& params, const DimensionEstimate& dims) {
  std::optional<double> dual;
  if (dims.has_dual) dual = dims.dual_d_tilde;
  return exponent_ledger(n, params, dims.d_tilde, dual);
}

AvgBmReport avg_bm_bound_check(const Weight& w, const SpaceParams& params, const FieldSuite& suite,
                               const std::vector<int>& a_values, const ExponentLedger& ledger,
                               const LatticeWindow& window, const QuadratureSpec& q) {
  if (a_values.empty()) throw ConfigError("avg_bm_bound_check: empty a-range");
  AvgBmReport rep;
  rep.hypothesis_holds = ledger.satisfied;
  rep.label = ledger.satisfied ? "hypothesis-satisfied" : "hypothesis-violated";
  std::vector<int> as = a_values;
  std::sort(as.begin(), as.end(), std::greater<>());
  as.erase(std::unique(as.begin(), as.end()), as.end());
  std::vector<double> c_obs(as.size(), 0.0);
  for (const auto& [id, f] : suite) {
    const NormReport base = bm_norm(f, w, params, window, q);
    if (base.value == 0.0) {
      rep.skipped.push_back(id);
      continue;
    }
    for (std::size_t ai = 0; ai < as.size(); ++ai) {
      const NormReport avg = bm_norm(dyadic_average(f, as[ai], window, q), w, params, window, q);
      RatioRow row{id, as[ai], avg.value / base.value, base.quadrature_converged && avg.quadrature_converged};
      c_obs[ai] = std::max(c_obs[ai], row.ratio);
      rep.rows.push_back(row);
    }
  }
  for (std::size_t ai = 0; ai < as.size(); ++ai) {
    rep.c_obs.emplace_back(as[ai], c_obs[ai]);
    rep.c_obs_max = std::max(rep.c_obs_max, c_obs[ai]);
  }
  const std::size_t k = std::min<std::size_t>(3, c_obs.size());
  rep.tail_variation = variation(std::vector<double>(c_obs.end() - static_cast<std::ptrdiff_t>(k), c_obs.end()));
  rep.stable = c_obs.size() >= 3 && rep.tail_variation < 0.2;
  return rep;
}

LebesgueDiffReport lebesgue_diff_check(const Weight& w, double p, const VectorField& f,
                                       const std::vector<Point>& points, int j_max, const QuadratureSpec& q) {
  if (j_max < 0 || j_max > kMaxScale) throw ConfigError("lebesgue_diff_check: j_max out of range");
  if (w.ambient() != f.ambient() || w.dim() != f.dim()) throw ConfigError("lebesgue_diff_check: dimension mismatch");
  const std::vector<Point> bad = merge_points(w.singular_points(), f.singular_points());
  LebesgueDiffReport rep;
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(j_max + 1));
  for (const Point& x : points) {
    if (std::find(bad.begin(), bad.end(), x) != bad.end()) {
      rep.excluded.push_back(x);
      continue;
    }
    DiffCurve curve;
    curve.x = x;
    const CVec fx = f(x);
    for (int j = 0; j <= j_max; ++j) {
      const DyadicIndex cube = containing_cube(x, j);
      const CVec m = cube_means(f, j, {cube}, q).front();
      CVec diff(fx.size());
      for (std::size_t c = 0; c < fx.size(); ++c) diff[c] = m[c] - fx[c];
      curve.scales.push_back(j);
      curve.errors.push_back(euclidean_norm(diff.span()));
      curve.weighted_errors.push_back(w.power_apply_norm(x, 1.0 / p, diff, 1.0));
      sums[static_cast<std::size_t>(j)].add(curve.errors.back());
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.errors.size(); ++i)
      if (curve.errors[i] > 0.0) {
        xs.push_back(curve.scales[i]);
        ys.push_back(std::log2(curve.errors[i]));
      }
    if (xs.size() >= 2) curve.slope = least_squares(xs, ys).slope;
    rep.max_final_error = std::max(rep.max_final_error, curve.errors.back());
    rep.curves.push_back(std::move(curve));
  }
  if (rep.curves.empty()) return rep;
  std::vector<double> xs, ys;
  for (int j = 0; j <= j_max; ++j) {
    const double m = sums[static_cast<std::size_t>(j)].value() / static_cast<double>(rep.curves.size());
    rep.mean_errors.push_back(m);
    if (m > 0.0) {
      xs.push_back(j);
      ys.push_back(std::log2(m));
    }
  }
  if (xs.size() >= 2) {
    rep.mean_slope = least_squares(xs, ys).slope;
    rep.mean_ratio = std::exp2(rep.mean_slope);
  }
  return rep;
}

}  // namespace bm
