#include "bmlab/compactness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "bmlab/error.hpp"
#include "bmlab/integrals.hpp"
#include "bmlab/reducing.hpp"

namespace bm {

void FunctionFamily::validate() const {
  if (members.empty()) throw ConfigError("function family: no members");
  std::set<std::string> ids;
  for (const auto& m : members) {
    if (m.id.empty()) throw ConfigError("function family: empty member id");
    if (!ids.insert(m.id).second) throw ConfigError("function family: duplicate member id '" + m.id + "'");
    if (m.field.dim() != members.front().field.dim() || m.field.ambient() != members.front().field.ambient())
      throw ConfigError("function family: members disagree on dimensions");
  }
}

int FunctionFamily::dim() const { return members.empty() ? 0 : members.front().field.dim(); }
int FunctionFamily::ambient() const { return members.empty() ? 0 : members.front().field.ambient(); }

FunctionFamily FunctionFamily::singleton(const std::string& id, const VectorField& f) {
  return {"singleton " + f.describe(), {{id, f}}};
}

FunctionFamily FunctionFamily::translates(const VectorField& g, const std::vector<Point>& shifts,
                                          const std::string& prefix) {
  FunctionFamily fam;
  fam.generator = "translates of " + g.describe();
  for (std::size_t i = 0; i < shifts.size(); ++i)
    fam.members.push_back({prefix + std::to_string(i + 1), translate(g, shifts[i])});
  return fam;
}

FunctionFamily FunctionFamily::truncations(const VectorField& f, const std::vector<double>& radii,
                                           const std::string& prefix) {
  FunctionFamily fam;
  fam.generator = "ball truncations of " + f.describe();
  for (std::size_t i = 0; i < radii.size(); ++i)
    fam.members.push_back({prefix + std::to_string(i + 1), f.ball_truncated(radii[i], true)});
  return fam;
}

void ProjectionSpec::validate() const {
  if (!(a < 0 && m >= 0)) throw ConfigError("projection spec: need a < 0 <= m");
  if (m + 1 - a > kMaxScale) throw ConfigError("projection spec: partition too fine");
}

std::size_t ProjectionSpec::cube_count(int n) const {
  validate();
  return std::size_t{1} << static_cast<unsigned>((m + 1 - a) * n);
}

Box ProjectionSpec::box(int n) const {
  const double h = std::ldexp(1.0, m);
  return Box{Point(static_cast<std::size_t>(n), -h), 2.0 * h};
}

std::vector<DyadicIndex> ProjectionSpec::cubes(int n) const {
  validate();
  // Side 2^a: k ranges over [-2^{m-a}, 2^{m-a}) on each axis.
  const std::int64_t half = std::int64_t{1} << (m - a);
  std::vector<DyadicIndex> out;
  out.reserve(cube_count(n));
  LatticeVec k(static_cast<std::size_t>(n), -half);
  for (;;) {
    out.push_back({-a, k});
    std::size_t ax = k.size();
    bool done = true;
    while (ax > 0) {
      --ax;
      if (++k[ax] < half) {
        done = false;
        break;
      }
      k[ax] = -half;
    }
    if (done) break;
  }
  return out;
}

VectorField project_phi(const VectorField& f, const ProjectionSpec& ps, const QuadratureSpec& q) {
  const std::vector<DyadicIndex> cubes = ps.cubes(f.ambient());
  const std::vector<CVec> means = cube_means(f, -ps.a, cubes, q);
  CubeValues values;
  for (std::size_t i = 0; i < cubes.size(); ++i)
    if (std::any_of(means[i].begin(), means[i].end(), [](Complex c) { return c != 0.0; }))
      values.emplace(cubes[i].k, means[i]);
  return VectorField::piecewise_constant(f.dim(), f.ambient(), -ps.a, std::move(values));
}

Measured measure(const NormContext& ctx, const VectorField& f) {
  if (ctx.kind == NormKind::sobolev) {
    const SobolevNorm s = sobolev_norm(f, ctx.weight, ctx.params, ctx.window, ctx.quadrature, ctx.sobolev_step);
    return {s.value, s.converged};
  }
  const NormReport r = bm_norm(f, ctx.weight, ctx.params, ctx.window, ctx.quadrature);
  if (!std::isfinite(r.value)) throw NumericError("norm evaluation produced a non-finite value");
  return {r.value, r.converged && r.quadrature_converged};
}

LatticeWindow default_window(const FunctionFamily& family, const ProjectionSpec& ps) {
  family.validate();
  ps.validate();
  double radius = 0.0;
  for (const auto& m : family.members) {
    const auto b = m.field.support();
    if (!b) throw ConfigError("default_window: member '" + m.id + "' has unbounded support");
    for (std::size_t i = 0; i < b->lo.size(); ++i) {
      if (b->lo[i] > b->hi[i]) continue;  // empty support
      radius = std::max({radius, std::abs(b->lo[i]), std::abs(b->hi[i])});
    }
  }
  LatticeWindow w;
  w.n = family.ambient();
  w.spatial_radius = radius > 0.0 ? 4.0 * radius : 1.0;
  w.j_min = -ps.m - 2;
  w.j_max = std::max(ps.a + 6, -ps.a);
  w.validate();
  return w;
}

std::string to_string(ModulusMode m) {
  return m == ModulusMode::translation ? "translation" : "dyadic_average";
}

ModulusMode modulus_mode_from_string(const std::string& s) {
  if (s == "translation") return ModulusMode::translation;
  if (s == "dyadic_average") return ModulusMode::dyadic_average;
  throw ConfigError("unknown modulus mode '" + s + "'");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified-totally-bounded-at-ε";
    case Verdict::condition_ii_fails: return "condition-ii-fails";
    case Verdict::condition_iii_fails: return "condition-iii-fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Member indices sorted by id; every ordering-sensitive step walks this order.
std::vector<std::size_t> id_order(const FunctionFamily& family) {
  std::vector<std::size_t> order(family.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return family.members[x].id < family.members[y].id; });
  return order;
}

CurvePoint curve_point(double parameter, const FunctionFamily& family, const std::vector<Measured>& values) {
  CurvePoint c;
  c.parameter = parameter;
  c.value = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].converged) c.converged = false;
    if (values[i].value > c.value) {
      c.value = values[i].value;
      c.argmax = family.members[i].id;
    }
  }
  c.value = std::max(c.value, 0.0);
  return c;
}

bool passes(const std::vector<CurvePoint>& curve, double tol) { return !curve.empty() && curve.back().value <= tol; }

bool plateau(const std::vector<CurvePoint>& curve, const Thresholds& th) {
  if (curve.size() < 3) return false;
  double lo = kInf, hi = 0.0;
  for (std::size_t i = curve.size() - 3; i < curve.size(); ++i) {
    lo = std::min(lo, curve[i].value);
    hi = std::max(hi, curve[i].value);
  }
  return hi > 0.0 && (hi - lo) / hi < th.plateau_variation && lo > th.plateau_factor * th.tolerance;
}

// Low-discrepancy points in the closed ball B(0,b) followed by the 2n axis points ±b e_i.
std::vector<Point> translation_shifts(int n, double b, std::size_t count) {
  std::vector<Point> out;
  const auto nn = static_cast<std::size_t>(n);
  for (std::uint64_t i = 1; out.size() < count && i < 64 * count + 64; ++i) {
    Point y(nn);
    double r2 = 0.0;
    for (std::size_t c = 0; c < nn; ++c) {
      y[c] = b * (2.0 * halton_coordinate(i, c) - 1.0);
      r2 += y[c] * y[c];
    }
    if (r2 <= b * b) out.push_back(y);
  }
  for (std::size_t c = 0; c < nn; ++c) {
    Point y(nn, 0.0);
    y[c] = b;
    out.push_back(y);
    y[c] = -b;
    out.push_back(y);
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string schedule_text(const Schedule& s, ModulusMode mode) {
  std::string out = "R={" + join(s.radii) + "}";
  if (mode == ModulusMode::dyadic_average)
    out += ", a={" + join(s.a_values) + "}";
  else
    out += ", b={" + join(s.b_values) + "}";
  return out;
}

VectorField piecewise_difference(const VectorField& a, const VectorField& b) {
  const FieldNode& x = a.node();
  const FieldNode& y = b.node();
  CubeValues out = x.values;
  for (const auto& [k, v] : y.values) {
    auto [it, fresh] = out.try_emplace(k, CVec(v.size(), 0.0));
    for (std::size_t c = 0; c < v.size(); ++c) it->second[c] -= v[c];
  }
  return VectorField::piecewise_constant(a.dim(), a.ambient(), x.cube_scale, std::move(out));
}

std::vector<std::vector<double>> distance_matrix(std::size_t count,
                                                 const std::function<double(std::size_t, std::size_t)>& dist) {
  std::vector<std::vector<double>> d(count, std::vector<double>(count, 0.0));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j) d[i][j] = d[j][i] = dist(i, j);
  return d;
}

}  // namespace

CompactnessReport check_conditions(const FunctionFamily& family, const NormContext& ctx, const Schedule& schedule,
                                   ModulusMode mode, const Thresholds& thresholds) {
  family.validate();
  ctx.params.validate();
  if (schedule.radii.empty()) throw ConfigError("check_conditions: empty radius schedule");
  if (mode == ModulusMode::dyadic_average && schedule.a_values.empty())
    throw ConfigError("check_conditions: empty a schedule");
  if (mode == ModulusMode::translation && schedule.b_values.empty())
    throw ConfigError("check_conditions: empty b schedule");

  CompactnessReport rep;
  rep.mode = mode;
  rep.thresholds = thresholds;
  rep.iff_applicable = !ctx.params.infinite_r();
  const auto& members = family.members;

  std::vector<Measured> norms;
  for (const auto& m : members) {
    norms.push_back(measure(ctx, m.field));
    rep.member_norms.emplace_back(m.id, norms.back().value);
    rep.bound_sup = std::max(rep.bound_sup, norms.back().value);
    if (!std::isfinite(norms.back().value)) rep.bounded = false;
  }

  std::vector<double> radii = schedule.radii;
  std::sort(radii.begin(), radii.end());
  for (double R : radii) {
    std::vector<Measured> vals;
    for (const auto& m : members) vals.push_back(measure(ctx, m.field.ball_truncated(R, false)));
    rep.tail_curve.push_back(curve_point(R, family, vals));
  }

  if (mode == ModulusMode::dyadic_average) {
    std::vector<int> as = schedule.a_values;
    std::sort(as.begin(), as.end(), std::greater<>());
    for (int a : as) {
      std::vector<Measured> vals;
      for (const auto& m : members)
        vals.push_back(measure(ctx, m.field - dyadic_average(m.field, a, ctx.window, ctx.quadrature)));
      rep.modulus_curve.push_back(curve_point(a, family, vals));
    }
  } else {
    std::vector<double> bs = schedule.b_values;
    std::sort(bs.begin(), bs.end(), std::greater<>());
    for (double b : bs) {
      const std::vector<Point> ys = translation_shifts(family.ambient(), b, schedule.translation_samples);
      if (b == bs.front()) rep.translation_shifts = ys;
      std::vector<Measured> vals(members.size());
      for (std::size_t i = 0; i < members.size(); ++i)
        for (const Point& y : ys) {
          const Measured d = measure(ctx, members[i].field - translate(members[i].field, y));
          vals[i].value = std::max(vals[i].value, d.value);
          vals[i].converged = vals[i].converged && d.converged;
        }
      rep.modulus_curve.push_back(curve_point(b, family, vals));
    }
  }

  rep.tail_passes = passes(rep.tail_curve, thresholds.tolerance);
  rep.tail_plateau = plateau(rep.tail_curve, thresholds);
  rep.modulus_passes = passes(rep.modulus_curve, thresholds.tolerance);
  rep.modulus_plateau = plateau(rep.modulus_curve, thresholds);
  rep.schedule_label = "evidence at schedule " + schedule_text(schedule, mode);
  return rep;
}

std::vector<std::size_t> greedy_net(const std::vector<std::vector<double>>& dist, double radius) {
  const std::size_t count = dist.size();
  if (count == 0) return {};
  std::vector<std::size_t> centers{0};
  std::vector<double> gap = dist[0];
  for (;;) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < count; ++i)
      if (gap[i] > gap[far]) far = i;  // strict: the earliest index wins ties
    if (gap[far] <= radius) break;
    centers.push_back(far);
    for (std::size_t i = 0; i < count; ++i) gap[i] = std::min(gap[i], dist[far][i]);
  }
  return centers;
}

NetResult epsilon_net(const FunctionFamily& family, const NormContext& ctx, const ProjectionSpec& ps, double epsilon,
                      const std::vector<double>& extra_epsilons, double audit_slack) {
  family.validate();
  ps.validate();
  if (!(epsilon > 0.0)) throw ConfigError("epsilon_net: epsilon must be positive");
  NetResult net;
  net.epsilon = epsilon;
  net.projection = ps;
  const std::vector<std::size_t> order = id_order(family);
  const std::size_t count = order.size();

  std::vector<VectorField> phi;
  for (std::size_t idx : order) {
    const VectorField& f = family.members[idx].field;
    phi.push_back(project_phi(f, ps, ctx.quadrature));
    net.projection_error = std::max(net.projection_error, measure(ctx, f - phi.back()).value);
  }
  if (net.projection_error > epsilon / 2.0) return net;
  net.accepted = true;

  const auto D = distance_matrix(count, [&](std::size_t i, std::size_t j) {
    return measure(ctx, piecewise_difference(phi[i], phi[j])).value;
  });
  const std::vector<std::size_t> centers = greedy_net(D, epsilon / 2.0);
  for (std::size_t c : centers) net.net_ids.push_back(family.members[order[c]].id);

  // Assignment and audit in member order.
  std::vector<std::size_t> position(family.members.size());
  for (std::size_t i = 0; i < count; ++i) position[order[i]] = i;
  net.audit_passed = true;
  for (std::size_t mi = 0; mi < family.members.size(); ++mi) {
    const std::size_t i = position[mi];
    std::size_t best = centers.front();
    for (std::size_t c : centers)
      if (D[i][c] < D[i][best]) best = c;
    net.assigned.push_back(family.members[order[best]].id);
    net.projected_distance.push_back(D[i][best]);
    const double direct = measure(ctx, family.members[mi].field - phi[best]).value;
    net.audit_distance.push_back(direct);
    net.audit_max = std::max(net.audit_max, direct);
    if (direct > epsilon * (1.0 + audit_slack)) net.audit_passed = false;
  }

  std::vector<double> eps = extra_epsilons;
  eps.push_back(epsilon);
  for (double e : eps)
    if (e > 0.0 && net.projection_error <= e / 2.0) net.net_sizes[e] = greedy_net(D, e / 2.0).size();
  return net;
}

CompactnessReport certify(const FunctionFamily& family, const NormContext& ctx, const Schedule& schedule,
                          const CertifyOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw ConfigError("certify: epsilon must be positive");
  Thresholds th;
  th.tolerance = opts.tolerance > 0.0 ? opts.tolerance : opts.epsilon / 4.0;
  th.plateau_variation = opts.plateau_variation;
  th.plateau_factor = opts.plateau_factor;
  th.audit_slack = opts.audit_slack;

  CompactnessReport rep = check_conditions(family, ctx, schedule, ModulusMode::dyadic_average, th);
  const std::string sched = schedule_text(schedule, ModulusMode::dyadic_average);
  std::ostringstream ev;

  if (rep.bounded && rep.tail_passes && rep.modulus_passes) {
    double r_star = rep.tail_curve.back().parameter;
    for (const auto& c : rep.tail_curve)
      if (c.value <= th.tolerance) {
        r_star = c.parameter;
        break;
      }
    int a_star = static_cast<int>(rep.modulus_curve.back().parameter);
    for (const auto& c : rep.modulus_curve)
      if (c.value <= th.tolerance) {
        a_star = static_cast<int>(c.parameter);
        break;
      }
    const int m_star = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(r_star, 1.0)))));
    std::vector<int> a_candidates;
    for (const auto& c : rep.modulus_curve) {
      const int a = static_cast<int>(c.parameter);
      if (a <= a_star && a < 0) a_candidates.push_back(a);
    }
    if (a_candidates.empty()) a_candidates.push_back(-1);

    for (int a : a_candidates) {
      for (int m : {m_star, m_star + 1}) {
        NetResult net = epsilon_net(family, ctx, ProjectionSpec{m, a}, opts.epsilon, opts.extra_epsilons,
                                    opts.audit_slack);
        rep.phi_distance = net.projection_error;
        const bool ok = net.accepted;
        rep.net = std::move(net);
        if (ok) break;
      }
      if (rep.net && rep.net->accepted) break;
    }
    if (rep.net && rep.net->accepted && rep.net->audit_passed) {
      rep.verdict = Verdict::certified;
      rep.net_sizes = rep.net->net_sizes;
      ev << "tail " << rep.tail_curve.back().value << " and modulus " << rep.modulus_curve.back().value
         << " within tolerance " << th.tolerance << "; projection error " << rep.phi_distance << " <= eps/2; net of "
         << rep.net->net_ids.size() << " at eps " << opts.epsilon << ", audit max " << rep.net->audit_max;

      // Direct construction on raw member distances; a totally bounded family must pass (i)-(iii).
      const std::vector<std::size_t> order = id_order(family);
      const auto D = distance_matrix(order.size(), [&](std::size_t i, std::size_t j) {
        return measure(ctx, family.members[order[i]].field - family.members[order[j]].field).value;
      });
      rep.direct_net_size = greedy_net(D, opts.epsilon).size();
      rep.necessity_consistent = rep.bounded && rep.tail_passes && rep.modulus_passes;
    } else if (rep.net && !rep.net->accepted) {
      ev << "conditions pass but the projection error " << rep.phi_distance << " exceeds eps/2 = "
         << opts.epsilon / 2.0 << " for every tried (m, a)";
    } else {
      ev << "net audit failed: max member-to-net distance " << (rep.net ? rep.net->audit_max : 0.0);
    }
  } else if (!rep.bounded) {
    ev << "condition (i): a member norm is not finite";
  } else if (rep.tail_plateau) {
    rep.verdict = Verdict::condition_ii_fails;
    ev << "tail curve plateaus at " << rep.tail_curve.back().value << " > " << th.plateau_factor << " x "
       << th.tolerance << " over the last three radii";
  } else if (rep.modulus_plateau) {
    rep.verdict = Verdict::condition_iii_fails;
    ev << "averaging modulus plateaus at " << rep.modulus_curve.back().value << " over the last three scales";
  } else {
    ev << "curves neither reach tolerance " << th.tolerance << " nor plateau";
  }
  rep.evidence = ev.str();
  rep.schedule_label = (rep.verdict == Verdict::certified ? "certified at schedule " : "evidence at schedule ") + sched;
  if (!rep.iff_applicable) rep.schedule_label += " (r = inf: sufficiency only)";
  return rep;
}

double ball_lower_bound(const VectorField& f, int n, double p, double t, double x1, double s, const QuadratureSpec& q,
                        bool* converged) {
  const auto nn = static_cast<std::size_t>(n);
  Point center(nn, 0.0);
  center[0] = x1;
  Point corner = center;
  for (auto& c : corner) c -= s;
  const Box box{corner, 2.0 * s};
  ScalarIntegrand g;
  if (n == 1) {
    g = [f, p](const Point& y) { return std::pow(std::abs(f(y)[0]), p); };
  } else {
    g = [f, p, center, s](const Point& y) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) r2 += (y[i] - center[i]) * (y[i] - center[i]);
      return r2 <= s * s ? std::pow(euclidean_norm(f(y).span()), p) : 0.0;
    };
  }
  const IntegralResult r = integrate_box(g, box, q, f.singular_points());
  if (converged) *converged = r.converged;
  const double vol = std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(s, n);
  return std::pow(vol, 1.0 / t - 1.0 / p) * std::pow(r.value, 1.0 / p);
}

CounterexampleReport counterexample_remark(int n, double p, double t, const std::vector<int>& j_values,
                                           const std::vector<LatticeWindow>& windows, const QuadratureSpec& q) {
  const SpaceParams params{p, t, kInf};
  params.validate();
  if (!(p < t)) throw ConfigError("counterexample: needs p < t");
  if (j_values.empty() || windows.empty()) throw ConfigError("counterexample: empty j or window list");
  CounterexampleReport rep;
  rep.n = n;
  rep.p = p;
  rep.t = t;
  const VectorField f = VectorField::power_tail(n, -static_cast<double>(n) / t, CVec{1.0});
  const Weight I(MatrixWeightSpec::identity(1, n));

  std::vector<double> vals;
  for (const LatticeWindow& w : windows) {
    if (w.n != n) throw ConfigError("counterexample: window dimension mismatch");
    const NormReport r = bm_norm(f, I, params, w, q);
    rep.norms.push_back({w, r.value, r.quadrature_converged});
    vals.push_back(r.value);
  }
  const auto [nlo, nhi] = std::minmax_element(vals.begin(), vals.end());
  rep.norm_variation = (*nhi - *nlo) / *nhi;
  rep.norm_stable = rep.norm_variation < 0.2;

  std::vector<double> lbs;
  for (int j : j_values) {
    LowerBoundRow row;
    row.j = j;
    row.x1 = 3.0 * std::ldexp(1.0, j);
    row.s = row.x1 / 10.0;
    bool ok = true;
    row.lower_bound = ball_lower_bound(f, n, p, t, row.x1, row.s, q, &ok);
    Point x(static_cast<std::size_t>(n), 0.0);
    x[0] = row.x1;
    const Box cube = to_box(containing_cube(x, 2 - j));
    const IntegralResult ti = integrate_box(
        ScalarIntegrand([f, p](const Point& y) { return std::pow(std::abs(f(y)[0]), p); }), cube, q);
    row.dyadic_term = std::pow(cube.volume(), 1.0 / t - 1.0 / p) * std::pow(ti.value, 1.0 / p);
    row.converged = ok && ti.converged;
    lbs.push_back(row.lower_bound);
    rep.c_dyadic = rep.lower_bounds.empty() ? row.dyadic_term : std::min(rep.c_dyadic, row.dyadic_term);
    rep.lower_bounds.push_back(row);
  }
  const auto [llo, lhi] = std::minmax_element(lbs.begin(), lbs.end());
  rep.c = *llo;
  rep.lower_bound_variation = *lhi > 0.0 ? (*lhi - *llo) / *lhi : 0.0;
  rep.lower_bounds_stable = *llo > 0.0 && rep.lower_bound_variation < 0.2;
  return rep;
}

}  // namespace bm
