#include "bmlab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "bmlab/error.hpp"

namespace bm {

Regime SpaceParams::regime() const {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw ConfigError("space parameters: p must be >= 1 (the quasi-norm range p < 1 is not supported)");
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("space parameters: t must be positive and finite");
  if (r == kInf) {
    if (!(p <= t)) throw ConfigError("space parameters: r = inf requires p <= t");
    return Regime::infinite_r;
  }
  if (!(p < t && t < r)) throw ConfigError("space parameters: finite r requires p < t < r");
  return Regime::finite_r;
}

namespace {

std::string window_key(const LatticeWindow& w, const QuadratureSpec& q) {
  std::ostringstream os;
  os << std::hexfloat << w.j_min << ',' << w.j_max << ',' << w.spatial_radius << ',' << w.n << '|'
     << q.points_per_axis << ',' << q.max_depth << ',' << q.rel_tol << ',' << q.grading_ratio << ',' << q.max_cells;
  return os.str();
}

}  // namespace

std::shared_ptr<const MassTable> MassTable::get(const Weight& w, const LatticeWindow& win, const QuadratureSpec& q) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const MassTable>> cache;
  const std::string key = w.cache_key() + "#" + window_key(win, q);
  std::lock_guard lock(mutex);
  const auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const MassTable> table;
  if (w.has_constant_norm()) {
    // ‖W‖ is constant, so W(Q) = ‖W‖ |Q| exactly.
    const double c = w.norm(Point(static_cast<std::size_t>(win.n), 1.0));
    LatticeIntegrals li;
    li.window = win;
    for (int j = win.j_min; j <= win.j_max; ++j) {
      LatticeLayer layer;
      layer.j = j;
      layer.cubes = cubes_in_window(win, j);
      layer.values.assign(layer.cubes.size(), c * std::ldexp(1.0, -j * win.n));
      li.layers.push_back(std::move(layer));
    }
    table = std::make_shared<const MassTable>(std::move(li));
  } else {
    table = std::make_shared<const MassTable>(integrate_lattice(win, mass_integrand(w), q));
  }
  cache.emplace(key, table);
  return table;
}

NormReport aggregate_terms(const LatticeWindow& w, const SpaceParams& params,
                           const std::vector<std::vector<double>>& layer_terms,
                           const std::vector<std::vector<DyadicIndex>>& layer_cubes, const NormOptions& opts) {
  NormReport rep;
  rep.window = w;
  rep.params = params;
  const bool inf = params.infinite_r();
  const std::size_t L = layer_terms.size();
  for (std::size_t l = 0; l < L; ++l) {
    ScaleEntry e;
    e.j = w.j_min + static_cast<int>(l);
    e.cubes = layer_terms[l].size();
    CompensatedSum s;
    for (std::size_t i = 0; i < layer_terms[l].size(); ++i) {
      const double t = layer_terms[l][i];
      e.max_term = std::max(e.max_term, t);
      if (!inf && t > 0.0) s.add(std::pow(t, params.r));
      if (opts.keep_terms && t > 0.0) rep.terms.push_back({layer_cubes[l][i], t});
    }
    e.partial = inf ? e.max_term : s.value();
    rep.per_scale.push_back(e);
  }

  if (inf) {
    double all = 0.0, interior = 0.0, edge = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double v = rep.per_scale[l].partial;
      all = std::max(all, v);
      if (l >= 2 && l + 2 < L)
        interior = std::max(interior, v);
      else
        edge = std::max(edge, v);
    }
    rep.value = all;
    rep.converged = all == 0.0 || (L >= 5 && edge <= interior * (1.0 + opts.window_tol));
    rep.tail_estimate = std::max(0.0, edge - interior);
    return rep;
  }

  CompensatedSum total_sum;
  for (const auto& e : rep.per_scale) total_sum.add(e.partial);
  const double total = total_sum.value();
  rep.value = std::pow(total, 1.0 / params.r);
  if (total == 0.0) {
    rep.converged = true;
    return rep;
  }
  bool conv = L >= 2;
  for (std::size_t l : {std::size_t{0}, std::size_t{1}, L - 2, L - 1})
    if (l < L && rep.per_scale[l].partial >= opts.window_tol * total) conv = false;
  rep.converged = conv;

  // Geometric extrapolation of the layer sums past either end of the window.
  auto tail = [](double edge, double next) {
    if (edge == 0.0) return 0.0;
    if (next <= 0.0) return kInf;
    const double rho = edge / next;
    return rho < 1.0 ? edge * rho / (1.0 - rho) : kInf;
  };
  double extra = 0.0;
  if (L >= 2) {
    extra += tail(rep.per_scale[0].partial, rep.per_scale[1].partial);
    extra += tail(rep.per_scale[L - 1].partial, rep.per_scale[L - 2].partial);
  } else {
    extra = kInf;
  }
  rep.tail_estimate = std::isfinite(extra) ? std::pow(total + extra, 1.0 / params.r) - rep.value : kInf;
  return rep;
}

namespace {

NormReport finish_norm(const LatticeWindow& win, const SpaceParams& params, const LatticeIntegrals& P,
                       const std::function<double(int, std::size_t, const DyadicIndex&)>& mass,
                       const NormOptions& opts) {
  const double e_mass = 1.0 / params.t - 1.0 / params.p;
  const double e_p = 1.0 / params.p;
  std::vector<std::vector<double>> terms;
  std::vector<std::vector<DyadicIndex>> cubes;
  for (const auto& layer : P.layers) {
    std::vector<double> t(layer.cubes.size(), 0.0);
    for (std::size_t i = 0; i < layer.cubes.size(); ++i) {
      const double pv = layer.values[i];
      if (!(pv > 0.0)) continue;
      double factor = 1.0;
      if (e_mass != 0.0) {
        const double m = mass(layer.j, i, layer.cubes[i]);
        if (!(m > 0.0) || !std::isfinite(m)) throw NumericError("weight mass of a window cube is not positive and finite");
        factor = std::pow(m, e_mass);
      }
      t[i] = factor * std::pow(pv, e_p);
    }
    terms.push_back(std::move(t));
    cubes.push_back(layer.cubes);
  }
  NormReport rep = aggregate_terms(win, params, terms, cubes, opts);
  rep.quadrature_converged = P.converged;
  return rep;
}

}  // namespace

NormReport bm_norm(const VectorField& f, const Weight& w, const SpaceParams& params, const LatticeWindow& win,
                   const QuadratureSpec& q, const NormOptions& opts) {
  params.validate();
  win.validate();
  if (win.n != f.ambient()) throw ConfigError("bm_norm: window dimension does not match the field");
  const LatticeIntegrals P = integrate_lattice(win, p_integrand(w, f, params.p), q);
  std::shared_ptr<const MassTable> masses;
  bool mass_ok = true;
  if (!opts.mass_override && 1.0 / params.t != 1.0 / params.p) {
    masses = MassTable::get(w, win, q);
    mass_ok = masses->integrals().converged;
  }
  auto mass = [&](int j, std::size_t i, const DyadicIndex& c) {
    return opts.mass_override ? opts.mass_override(c) : masses->mass(j, i);
  };
  NormReport rep = finish_norm(win, params, P, mass, opts);
  rep.quadrature_converged = rep.quadrature_converged && mass_ok;
  return rep;
}

NormReport bm_norm(const VectorField& f, const MatrixWeightSpec& spec, const SpaceParams& params,
                   const LatticeWindow& win, const QuadratureSpec& q, const NormOptions& opts) {
  return bm_norm(f, Weight(spec), params, win, q, opts);
}

NormReport scalar_bm_norm(const VectorField& f, const ScalarWeight& omega, const SpaceParams& params,
                          const LatticeWindow& win, const QuadratureSpec& q, const NormOptions& opts) {
  params.validate();
  win.validate();
  if (f.dim() != 1) throw ConfigError("scalar_bm_norm: field must be scalar (d = 1)");
  if (win.n != f.ambient() || omega.base().ambient() != f.ambient())
    throw ConfigError("scalar_bm_norm: dimension mismatch");
  const double p = params.p;
  CubeIntegrand fi;
  fi.g = [f, omega, p](const Point& x, std::span<double> out) {
    const double a = std::abs(f(x)[0]);
    out[0] = a == 0.0 ? 0.0 : std::pow(a, p) * omega(x);
  };
  fi.singular = merge_points(omega.base().singular_points(), f.singular_points());
  fi.support = f.support();
  const LatticeIntegrals P = integrate_lattice(win, fi, q);

  LatticeIntegrals M;
  const bool need_mass = !opts.mass_override && 1.0 / params.t != 1.0 / params.p;
  if (need_mass) {
    CubeIntegrand mi;
    mi.g = [omega](const Point& x, std::span<double> out) { out[0] = omega(x); };
    mi.singular = omega.base().singular_points();
    M = integrate_lattice(win, mi, q);
  }
  auto mass = [&](int j, std::size_t i, const DyadicIndex& c) {
    return opts.mass_override ? opts.mass_override(c) : M.layer(j).values[i];
  };
  NormReport rep = finish_norm(win, params, P, mass, opts);
  if (need_mass) rep.quadrature_converged = rep.quadrature_converged && M.converged;
  return rep;
}

double lp_norm(const VectorField& f, const Weight& w, double p, const std::vector<DyadicIndex>& region,
               const QuadratureSpec& q) {
  for (std::size_t a = 0; a < region.size(); ++a)
    for (std::size_t b = a + 1; b < region.size(); ++b)
      if (to_box(region[a]).overlaps(to_box(region[b]))) throw ConfigError("lp_norm: region cubes overlap");
  const CubeIntegrand ig = p_integrand(w, f, p);
  CompensatedSum s;
  for (const auto& c : region) s.add(integrate(ig, to_box(c), q).values[0]);
  return std::pow(s.value(), 1.0 / p);
}

double lp_norm(const VectorField& f, const Weight& w, double p, const Box& region, const QuadratureSpec& q) {
  return std::pow(integrate(p_integrand(w, f, p), region, q).values[0], 1.0 / p);
}

std::vector<DyadicIndex> window_region(const LatticeWindow& win) { return cubes_in_window(win, win.j_min); }

SobolevNorm sobolev_norm(const VectorField& f, const Weight& w, const SpaceParams& params, const LatticeWindow& win,
                         const QuadratureSpec& q, double h) {
  if (f.dim() != 1) throw ConfigError("sobolev_norm: field must be scalar");
  if (w.dim() != f.ambient()) throw ConfigError("sobolev_norm: weight must be n×n");
  SobolevNorm out;
  const NormReport fr = scalar_bm_norm(f, ScalarWeight(w), params, win, q);
  out.analytic_gradient = f.has_analytic_gradient();
  const VectorField grad = f.gradient(h);
  const NormReport gr = bm_norm(grad, w, params, win, q);
  out.function_term = fr.value;
  out.gradient_term = gr.value;
  out.value = fr.value + gr.value;
  out.step = out.analytic_gradient ? 0.0 : h;
  out.converged = fr.converged && gr.converged;
  return out;
}

EmbeddingReport embedding_check(const std::vector<std::pair<std::string, VectorField>>& suite, const Weight& w,
                                const EmbeddingCases& cases, const LatticeWindow& win, const QuadratureSpec& q) {
  for (const auto& [a, b] : cases.r_pairs) {
    a.validate();
    b.validate();
    if (a.p != b.p || a.t != b.t || !(a.r < b.r)) throw ConfigError("embedding (i) needs equal p, t and r1 < r2");
  }
  for (const auto& [a, b] : cases.p_pairs) {
    a.validate();
    b.validate();
    if (a.t != b.t || a.r != b.r || !(a.p < b.p)) throw ConfigError("embedding (ii) needs equal t, r and p1 < p2");
  }
  for (const auto& c : cases.chain) {
    c.validate();
    if (!c.infinite_r()) throw ConfigError("embedding (iii) needs r = inf");
  }

  EmbeddingReport rep;
  auto record = [&](const std::string& member, const std::string& kind, const SpaceParams& sp, double lhs,
                    double rhs) {
    EmbeddingRecord r{member, kind, sp, lhs, rhs, lhs <= rhs * cases.slack};
    if (!r.holds) rep.all_hold = false;
    if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    rep.records.push_back(r);
  };
  std::vector<DyadicIndex> origin_cubes;
  {
    const auto n = static_cast<std::size_t>(win.n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      DyadicIndex idx{win.j_min, LatticeVec(n, 0)};
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1U) idx.k[i] = -1;
      origin_cubes.push_back(idx);
    }
    std::sort(origin_cubes.begin(), origin_cubes.end());
  }

  for (const auto& [name, f] : suite) {
    auto norm = [&](const SpaceParams& sp) { return bm_norm(f, w, sp, win, q).value; };
    for (const auto& [a, b] : cases.r_pairs) record(name, "r_monotone", b, norm(b), norm(a));
    for (const auto& [a, b] : cases.p_pairs) record(name, "p_monotone", a, norm(a), norm(b));
    for (const auto& c : cases.chain) {
      const double bm = norm(c);
      record(name, "lt_bound", c, bm, lp_norm(f, w, c.t, window_region(win), q));
      CompensatedSum factor;
      for (const auto& cube : origin_cubes)
        factor.add(std::pow(weight_mass(w, to_box(cube), q).value, 1.0 / c.p - 1.0 / c.t));
      record(name, "lp_local", c, lp_norm(f, w, c.p, origin_cubes, q), factor.value() * bm);
    }
  }
  return rep;
}

}  // namespace bm
