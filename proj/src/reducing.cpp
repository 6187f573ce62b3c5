#include "bmlab/reducing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bmlab/error.hpp"
#include "bmlab/integrals.hpp"
#include "bmlab/parallel.hpp"

namespace bm {

namespace {

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += static_cast<double>(i % static_cast<std::uint64_t>(base)) * f;
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// ‖W(x)‖ is a scalar multiple of the identity, so the A_p double integrals factor.
bool scalar_type(const Weight& w) {
  const auto f = w.spec().family;
  return w.dim() == 1 || f == WeightFamily::identity || f == WeightFamily::scalar_power;
}

double integral_over(const Region& region, const ScalarIntegrand& g, const QuadratureSpec& q,
                     const std::vector<Point>& singular, bool& ok) {
  CompensatedSum s;
  for (const Box& b : region) {
    const IntegralResult r = integrate_box(g, b, q, singular);
    ok = ok && r.converged;
    s.add(r.value);
  }
  return s.value();
}

std::vector<double> multi_integral_over(const Region& region, const MultiIntegrand& g, std::size_t m,
                                        const QuadratureSpec& q, const std::vector<Point>& singular, bool& ok) {
  std::vector<CompensatedSum> acc(m);
  for (const Box& b : region) {
    const MultiIntegralResult r = integrate_box(g, m, b, q, singular);
    ok = ok && r.converged;
    for (std::size_t c = 0; c < m; ++c) acc[c].add(r.values[c]);
  }
  std::vector<double> out(m);
  for (std::size_t c = 0; c < m; ++c) out[c] = acc[c].value();
  return out;
}

std::vector<Box> box_children(const Box& b) {
  const std::size_t n = b.dim();
  std::vector<Box> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Box c{b.corner, 0.5 * b.side};
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1U) c.corner[i] += c.side;
    out.push_back(c);
  }
  return out;
}

// Gauss nodes of the cell rule on each box and on each of its children: the sample
// set standing in for an essential supremum.
std::vector<Point> ess_sup_samples(const Region& region, int points_per_axis) {
  const GaussRule& rule = gauss_legendre(points_per_axis);
  std::vector<Point> out;
  auto add_nodes = [&](const Box& b) {
    const std::size_t n = b.dim();
    SmallVec<std::size_t, kMaxAmbient> idx(n, 0);
    while (true) {
      Point x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = b.corner[i] + 0.5 * b.side * (1.0 + rule.nodes[idx[i]]);
      out.push_back(x);
      std::size_t axis = 0;
      while (axis < n && ++idx[axis] == rule.nodes.size()) idx[axis++] = 0;
      if (axis == n) break;
    }
  };
  for (const Box& b : region) {
    add_nodes(b);
    for (const Box& c : box_children(b)) add_nodes(c);
  }
  return out;
}

double euclid(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double halton_coordinate(std::uint64_t i, std::size_t axis) {
  if (axis >= kPrimes.size()) throw ConfigError("halton_coordinate: axis out of range");
  return radical_inverse(i, kPrimes[axis]);
}

std::vector<CVec> sample_directions(int d, std::size_t count, std::uint64_t seed, bool include_basis) {
  if (d < 1 || static_cast<std::size_t>(d) > kMaxDim) throw ConfigError("sample_directions: d must be in [1, 8]");
  const auto dd = static_cast<std::size_t>(d);
  std::mt19937_64 rng(seed);
  std::vector<double> shift(2 * dd);
  for (auto& s : shift) s = unit_from_bits(rng());
  std::vector<CVec> out;
  out.reserve(count + (include_basis ? dd : 0));
  if (include_basis) {
    for (std::size_t i = 0; i < dd; ++i) {
      CVec e(dd, 0.0);
      e[i] = 1.0;
      out.push_back(e);
    }
  }
  for (std::size_t i = 1; i <= count; ++i) {
    CVec v(dd);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < dd; ++c) {
      double u1 = std::fmod(radical_inverse(i, kPrimes[2 * c]) + shift[2 * c], 1.0);
      const double u2 = std::fmod(radical_inverse(i, kPrimes[2 * c + 1]) + shift[2 * c + 1], 1.0);
      u1 = std::max(u1, 1e-300);
      const double r = std::sqrt(-2.0 * std::log(u1));
      v[c] = Complex(r * std::cos(2.0 * std::numbers::pi * u2), r * std::sin(2.0 * std::numbers::pi * u2));
      norm2 += std::norm(v[c]);
    }
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : v) c *= inv;
    out.push_back(v);
  }
  return out;
}

std::vector<double> rho_values(const Weight& w, const Box& box, double p, const std::vector<CVec>& dirs,
                               const QuadratureSpec& q, bool* converged) {
  if (!(p > 0.0)) throw ConfigError("reducing: p must be positive");
  const std::size_t m = dirs.size();
  const double alpha = 1.0 / p;
  const MultiIntegrand g = [&w, &dirs, alpha, p](const Point& x, std::span<double> out) {
    w.power_apply_norms(x, alpha, dirs, p, out);
  };
  const MultiIntegralResult r = integrate_box(g, m, box, q, w.singular_points());
  if (converged) *converged = r.converged;
  std::vector<double> rho(m);
  const double vol = box.volume();
  for (std::size_t k = 0; k < m; ++k) rho[k] = std::pow(r.values[k] / vol, 1.0 / p);
  return rho;
}

std::string to_string(ReducingMethod m) { return m == ReducingMethod::exact_p2 ? "exact_p2" : "mvee"; }

ReducingMethod reducing_method_from_string(const std::string& s) {
  if (s == "exact_p2") return ReducingMethod::exact_p2;
  if (s == "mvee") return ReducingMethod::mvee;
  throw ConfigError("unknown reducing method '" + s + "'");
}

ReducingMethod default_method(const Weight&, double p) {
  return p == 2.0 ? ReducingMethod::exact_p2 : ReducingMethod::mvee;
}

MveeResult mvee(const std::vector<CVec>& points, double tol, std::size_t max_iterations) {
  if (points.empty()) throw ConfigError("mvee: no points");
  const std::size_t N = points.size();
  const std::size_t d = points.front().size();
  const double dd = static_cast<double>(d);
  std::vector<double> u(N, 1.0 / static_cast<double>(N));
  std::vector<double> M(N);
  CMat Xinv;

  auto outer = [&](const CVec& x) {
    CMat o(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) o(i, j) = x[i] * std::conj(x[j]);
    return o;
  };
  auto quad = [&](const CMat& A, const CVec& x) {
    const CVec y = A * x;
    Complex s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += std::conj(x[i]) * y[i];
    return s.real();
  };
  auto refresh = [&]() {
    CMat X(d, d);
    for (std::size_t i = 0; i < N; ++i)
      if (u[i] > 0.0) X += outer(points[i]) * Complex(u[i]);
    Xinv = matrix_power(X, -1.0);
    for (std::size_t i = 0; i < N; ++i) M[i] = quad(Xinv, points[i]);
  };
  refresh();

  MveeResult res;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    if (it > 0 && it % 256 == 0) refresh();
    std::size_t j = 0, k = N;
    for (std::size_t i = 0; i < N; ++i) {
      if (M[i] > M[j]) j = i;
      if (u[i] > 0.0 && (k == N || M[i] < M[k])) k = i;
    }
    const double eps_plus = M[j] / dd - 1.0;
    const double eps_minus = 1.0 - M[k] / dd;
    // Khachiyan's criterion: every point lies in the (1+tol)-scaled current ellipsoid.
    if (eps_plus <= tol) {
      res.converged = true;
      break;
    }
    std::size_t idx;
    double alpha;
    if (eps_plus >= eps_minus) {
      idx = j;
      alpha = (M[j] - dd) / (dd * (M[j] - 1.0));
    } else {
      idx = k;
      const double drop = -u[k] / (1.0 - u[k]);
      alpha = M[k] > 1.0 ? std::max(drop, (M[k] - dd) / (dd * (M[k] - 1.0))) : drop;
    }
    if (!(alpha < 1.0) || alpha == 0.0) break;
    const CVec v = Xinv * points[idx];
    const double mx = M[idx];
    const double denom = (1.0 - alpha) + alpha * mx;
    for (std::size_t i = 0; i < N; ++i) {
      Complex s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += std::conj(points[i][c]) * v[c];
      M[i] = (M[i] - alpha * std::norm(s) / denom) / (1.0 - alpha);
    }
    CMat vv = outer(v);
    Xinv = (Xinv - vv * Complex(alpha / denom)) * Complex(1.0 / (1.0 - alpha));
    for (auto& ui : u) ui *= (1.0 - alpha);
    u[idx] += alpha;
    if (u[idx] < 1e-300) u[idx] = 0.0;
  }
  refresh();
  res.iterations = it;
  const double mmax = *std::max_element(M.begin(), M.end());
  res.optimality_gap = mmax / dd - 1.0;
  res.H = Xinv * Complex(1.0 / mmax);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t c = i; c < d; ++c) {
      const Complex avg = 0.5 * (res.H(i, c) + std::conj(res.H(c, i)));
      res.H(i, c) = avg;
      res.H(c, i) = std::conj(avg);
    }
  return res;
}

ReducingOperator reducing_operator(const Weight& w, const Box& cube, double p, ReducingMethod method,
                                   const QuadratureSpec& q, const MveeOptions& opts) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("reducing_operator: p must be positive");
  if (cube.dim() != static_cast<std::size_t>(w.ambient())) throw ConfigError("reducing_operator: cube dimension");
  const auto d = static_cast<std::size_t>(w.dim());
  ReducingOperator out;
  out.cube = cube;
  out.p = p;
  out.method = method;

  if (method == ReducingMethod::exact_p2) {
    if (p != 2.0) throw ConfigError("exact_p2 requires p = 2");
    const std::size_t m = 2 * d * d;
    const MultiIntegrand g = [&w, d](const Point& x, std::span<double> o) {
      const CMat W = w.matrix(x);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          o[2 * (i * d + j)] = W(i, j).real();
          o[2 * (i * d + j) + 1] = W(i, j).imag();
        }
    };
    const MultiIntegralResult r = integrate_box(g, m, cube, q, w.singular_points());
    CMat avg(d, d);
    const double vol = cube.volume();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        avg(i, j) = Complex(r.values[2 * (i * d + j)], r.values[2 * (i * d + j) + 1]) / vol;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        const Complex s = 0.5 * (avg(i, j) + std::conj(avg(j, i)));
        avg(i, j) = s;
        avg(j, i) = std::conj(s);
      }
    out.A = matrix_power(avg, 0.5);
    out.certified_c1 = out.certified_c2 = 1.0;
    out.converged = r.converged;
    return out;
  }

  const std::vector<CVec> dirs = sample_directions(w.dim(), opts.directions_per_d2 * d * d, opts.seed, true);
  bool ok = true;
  const std::vector<double> rho = rho_values(w, cube, p, dirs, q, &ok);
  std::vector<CVec> pts;
  pts.reserve(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    if (!(rho[k] > 0.0) || !std::isfinite(rho[k]))
      throw NumericError("reducing_operator: rho_Q vanishes or diverges in some direction (degenerate weight)");
    CVec x = dirs[k];
    for (auto& c : x) c /= rho[k];
    pts.push_back(x);
  }
  const MveeResult fit = mvee(pts, opts.tol, opts.max_iterations);
  if (!fit.converged && !(fit.optimality_gap <= opts.accept_gap))
    throw NumericError("reducing_operator: ellipsoid fit did not converge (gap " + std::to_string(fit.optimality_gap) +
                       ")");
  out.A = matrix_power(fit.H, 0.5);
  double c1 = kInf, c2 = 0.0;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double ratio = rho[k] / euclidean_norm((out.A * dirs[k]).span());
    c1 = std::min(c1, ratio);
    c2 = std::max(c2, ratio);
  }
  out.certified_c1 = c1;
  out.certified_c2 = c2;
  out.directions = dirs.size();
  out.iterations = fit.iterations;
  out.fit_gap = fit.optimality_gap;
  out.converged = ok && fit.converged;
  return out;
}

ReducingOperator reducing_operator(const MatrixWeightSpec& spec, const DyadicIndex& cube, double p,
                                   ReducingMethod method, const QuadratureSpec& q, const MveeOptions& opts) {
  return reducing_operator(Weight(spec), to_box(cube), p, method, q, opts);
}

ReducingConstants verify_reducing(const ReducingOperator& r, const Weight& w, std::size_t n_dirs,
                                  const QuadratureSpec& q, std::uint64_t seed) {
  const std::vector<CVec> dirs = sample_directions(w.dim(), n_dirs, seed, false);
  const std::vector<double> rho = rho_values(w, r.cube, r.p, dirs, q);
  ReducingConstants c{kInf, 0.0};
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double ratio = rho[k] / euclidean_norm((r.A * dirs[k]).span());
    c.c1 = std::min(c.c1, ratio);
    c.c2 = std::max(c.c2, ratio);
  }
  return c;
}

double norm_mass_equiv(const Weight& w, const Box& cube, double p, const QuadratureSpec& q, const MveeOptions& opts) {
  const ReducingOperator r = reducing_operator(w, cube, p, default_method(w, p), q, opts);
  const double mass = weight_mass(w, cube, q).value;
  return std::pow(spectral_norm(r.A), p) * cube.volume() / mass;
}

double region_volume(const Region& r) {
  double v = 0.0;
  for (const Box& b : r) v += b.volume();
  return v;
}

double ap_quantity(const Weight& w, double p, const Region& region, const QuadratureSpec& q, bool* converged) {
  if (!(p > 0.0)) throw ConfigError("A_p: p must be positive");
  if (region.empty()) throw ConfigError("A_p: empty region");
  const double vol = region_volume(region);
  const std::vector<Point>& sing = w.singular_points();
  bool ok = true;
  double value = 0.0;

  if (scalar_type(w)) {
    const double avg_w = integral_over(region, [&w](const Point& x) { return w.norm(x); }, q, sing, ok) / vol;
    if (p > 1.0) {
      const double e = -1.0 / (p - 1.0);
      const double avg_dual =
          integral_over(region, [&w, e](const Point& x) { return std::pow(w.norm(x), e); }, q, sing, ok) / vol;
      value = avg_w * std::pow(avg_dual, p - 1.0);
    } else {
      double inf_w = kInf;
      for (const Point& y : ess_sup_samples(region, q.points_per_axis)) inf_w = std::min(inf_w, w.norm(y));
      value = avg_w / inf_w;
    }
  } else if (p > 1.0) {
    const double pp = p / (p - 1.0);
    QuadratureSpec inner = q;
    inner.rel_tol = q.rel_tol * 0.1;
    const ScalarIntegrand outer = [&](const Point& x) {
      bool inner_ok = true;
      const double avg =
          integral_over(region, [&](const Point& y) { return std::pow(w.product_norm(x, 1.0 / p, y, -1.0 / p), pp); },
                        inner, sing, inner_ok) /
          vol;
      return std::pow(avg, p / pp);
    };
    value = integral_over(region, outer, q, sing, ok) / vol;
  } else {
    const std::vector<Point> ys = ess_sup_samples(region, q.points_per_axis);
    const MultiIntegrand g = [&](const Point& x, std::span<double> out) {
      for (std::size_t k = 0; k < ys.size(); ++k) out[k] = std::pow(w.product_norm(x, 1.0 / p, ys[k], -1.0 / p), p);
    };
    const std::vector<double> vals = multi_integral_over(region, g, ys.size(), q, sing, ok);
    for (double v : vals) value = std::max(value, v / vol);
  }
  if (converged) *converged = ok;
  if (!std::isfinite(value)) throw NumericError("A_p quantity is not finite");
  return value;
}

ApEstimate ap_characteristic(const Weight& w, double p, const std::vector<Box>& family, const QuadratureSpec& q) {
  if (family.empty()) throw ConfigError("ap_characteristic: empty cube family");
  ApEstimate est;
  est.p = p;
  est.per_cube.resize(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    bool ok = true;
    est.per_cube[i] = {family[i], ap_quantity(w, p, {family[i]}, q, &ok), ok};
  });
  for (const auto& c : est.per_cube) {
    est.characteristic = std::max(est.characteristic, c.value);
    est.converged = est.converged && c.converged;
  }
  est.cube_family = std::to_string(family.size()) + " cubes (lower bound over this finite family)";
  if (p <= 1.0)
    est.ess_sup_rule = "max over Gauss nodes of each cube and of its 2^n children (" +
                       std::to_string(q.points_per_axis) + " per axis)";
  return est;
}

ApEstimate ap_characteristic(const Weight& w, double p, const std::vector<DyadicIndex>& family,
                             const QuadratureSpec& q) {
  std::vector<Box> boxes;
  for (const auto& c : family) boxes.push_back(to_box(c));
  return ap_characteristic(w, p, boxes, q);
}

ExcisionSweep ap_excision_sweep(const Weight& w, double p, int levels, const QuadratureSpec& q) {
  if (levels < 1 || levels > kMaxScale) throw ConfigError("ap_excision_sweep: levels must be in [1, 40]");
  const auto n = static_cast<std::size_t>(w.ambient());
  ExcisionSweep sweep;
  Region region;
  for (int l = 1; l <= levels; ++l) {
    const Box corner{Point(n, 0.0), std::ldexp(1.0, -(l - 1))};
    const auto kids = box_children(corner);
    region.insert(region.end(), kids.begin() + 1, kids.end());  // all but the corner child
    sweep.levels.push_back(l);
    sweep.values.push_back(ap_quantity(w, p, region, q));
  }
  sweep.growth = sweep.values.back() / sweep.values.front();
  sweep.monotone = true;
  for (std::size_t i = 1; i < sweep.values.size(); ++i)
    if (!(sweep.values[i] > sweep.values[i - 1])) sweep.monotone = false;
  return sweep;
}

double ap_dimension_quantity(const Weight& w, double p, const Box& base, int i, const QuadratureSpec& q) {
  const Box big = base.dilated(std::ldexp(1.0, i));
  const std::vector<Point>& sing = w.singular_points();
  bool ok = true;
  const double vq = base.volume();
  const double vb = big.volume();
  if (scalar_type(w)) {
    const double avg_w = integral_over({base}, [&w](const Point& x) { return w.norm(x); }, q, sing, ok) / vq;
    if (p > 1.0) {
      const double e = -1.0 / (p - 1.0);
      const double avg_dual =
          integral_over({big}, [&w, e](const Point& x) { return std::pow(w.norm(x), e); }, q, sing, ok) / vb;
      return avg_w * std::pow(avg_dual, p - 1.0);
    }
    double inf_w = kInf;
    for (const Point& y : ess_sup_samples({big}, q.points_per_axis)) inf_w = std::min(inf_w, w.norm(y));
    return avg_w / inf_w;
  }
  if (p > 1.0) {
    const double pp = p / (p - 1.0);
    QuadratureSpec inner = q;
    inner.rel_tol = q.rel_tol * 0.1;
    const ScalarIntegrand outer = [&](const Point& x) {
      bool inner_ok = true;
      const double avg =
          integral_over({big}, [&](const Point& y) { return std::pow(w.product_norm(x, 1.0 / p, y, -1.0 / p), pp); },
                        inner, sing, inner_ok) /
          vb;
      return std::pow(avg, p / pp);
    };
    return integral_over({base}, outer, q, sing, ok) / vq;
  }
  const std::vector<Point> ys = ess_sup_samples({big}, q.points_per_axis);
  const MultiIntegrand g = [&](const Point& x, std::span<double> out) {
    for (std::size_t k = 0; k < ys.size(); ++k) out[k] = std::pow(w.product_norm(x, 1.0 / p, ys[k], -1.0 / p), p);
  };
  double best = 0.0;
  for (double v : multi_integral_over({base}, g, ys.size(), q, sing, ok)) best = std::max(best, v / vq);
  return best;
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

namespace {

std::vector<DimensionFit> dimension_fits(const Weight& w, double p, const std::vector<Box>& base_cubes, int i_max,
                                         const QuadratureSpec& q) {
  const std::size_t levels = static_cast<std::size_t>(i_max) + 1;
  std::vector<double> values(base_cubes.size() * levels);
  parallel_for(values.size(), [&](std::size_t k) {
    values[k] = ap_dimension_quantity(w, p, base_cubes[k / levels], static_cast<int>(k % levels), q);
  });
  std::vector<DimensionFit> fits;
  std::vector<double> xs(levels);
  for (std::size_t i = 0; i < levels; ++i) xs[i] = static_cast<double>(i);
  for (std::size_t b = 0; b < base_cubes.size(); ++b) {
    DimensionFit fit;
    fit.base = base_cubes[b];
    for (std::size_t i = 0; i < levels; ++i) fit.log2_values.push_back(std::log2(values[b * levels + i]));
    const LineFit lf = least_squares(xs, fit.log2_values);
    fit.slope = lf.slope;
    fit.residual = lf.residual;
    fits.push_back(fit);
  }
  return fits;
}

}  // namespace

DimensionEstimate ap_dimension(const Weight& w, double p, const std::vector<Box>& base_cubes, int i_max,
                               const QuadratureSpec& q) {
  if (i_max < 3) throw ConfigError("ap_dimension: i_max must be >= 3");
  if (base_cubes.empty()) throw ConfigError("ap_dimension: no base cubes");
  DimensionEstimate est;
  est.fits = dimension_fits(w, p, base_cubes, i_max, q);
  est.raw_slope = -kInf;
  for (const auto& f : est.fits) {
    est.raw_slope = std::max(est.raw_slope, f.slope);
    est.regression_residual = std::max(est.regression_residual, f.residual);
  }
  est.d_tilde = std::max(0.0, est.raw_slope);
  if (p > 1.0) {
    est.has_dual = true;
    est.dual_fits = dimension_fits(w.dual(p), p / (p - 1.0), base_cubes, i_max, q);
    est.raw_dual_slope = -kInf;
    for (const auto& f : est.dual_fits) {
      est.raw_dual_slope = std::max(est.raw_dual_slope, f.slope);
      est.regression_residual = std::max(est.regression_residual, f.residual);
    }
    est.dual_d_tilde = std::max(0.0, est.raw_dual_slope);
  }
  const auto d = static_cast<std::size_t>(w.dim());
  est.beta = doubling_exponent(w, p, base_cubes, 64 * d * d, q).beta;
  return est;
}

DoublingEstimate doubling_exponent(const Weight& w, double p, const std::vector<Box>& cubes, std::size_t n_dirs,
                                   const QuadratureSpec& q, std::uint64_t seed) {
  if (cubes.empty()) throw ConfigError("doubling_exponent: no cubes");
  const std::vector<CVec> dirs = sample_directions(w.dim(), n_dirs, seed, true);
  const double alpha = 1.0 / p;
  const MultiIntegrand g = [&w, &dirs, alpha, p](const Point& x, std::span<double> out) {
    w.power_apply_norms(x, alpha, dirs, p, out);
  };
  std::vector<double> best(cubes.size(), 0.0);
  parallel_for(cubes.size(), [&](std::size_t c) {
    const MultiIntegralResult small = integrate_box(g, dirs.size(), cubes[c], q, w.singular_points());
    const MultiIntegralResult big = integrate_box(g, dirs.size(), cubes[c].dilated(2.0), q, w.singular_points());
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      if (!(small.values[k] > 0.0)) throw NumericError("doubling_exponent: zero mass on a cube");
      best[c] = std::max(best[c], big.values[k] / small.values[k]);
    }
  });
  DoublingEstimate est;
  est.max_ratio = *std::max_element(best.begin(), best.end());
  est.beta = std::log2(est.max_ratio);
  est.directions = dirs.size();
  return est;
}

double reducing_ratio_bound(double p, double d_tilde, double dual_d_tilde, const Box& qc, const Box& rc) {
  const double lq = qc.side, lr = rc.side;
  const double spread = 1.0 + euclid(qc.corner, rc.corner) / std::max(lq, lr);
  if (p > 1.0) {
    const double pp = p / (p - 1.0);
    return std::max(std::pow(lr / lq, d_tilde / p), std::pow(lq / lr, dual_d_tilde / pp)) *
           std::pow(spread, d_tilde / p + dual_d_tilde / pp);
  }
  return std::max(std::pow(lr / lq, d_tilde / p), 1.0) * std::pow(spread, d_tilde / p);
}

RatioCheck reducing_ratio_check(const Weight& w, double p, const std::vector<std::pair<Box, Box>>& pairs,
                                const DimensionEstimate& dims, const QuadratureSpec& q, const MveeOptions& opts) {
  if (p > 1.0 && !dims.has_dual) throw ConfigError("reducing_ratio_check: dual dimension required for p > 1");
  RatioCheck out;
  out.records.resize(pairs.size());
  const ReducingMethod method = default_method(w, p);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [qc, rc] = pairs[i];
    const CMat aq = reducing_operator(w, qc, p, method, q, opts).A;
    const CMat ar = reducing_operator(w, rc, p, method, q, opts).A;
    out.records[i] = {qc, rc, spectral_norm(aq * matrix_power(ar, -1.0)),
                      reducing_ratio_bound(p, dims.d_tilde, dims.dual_d_tilde, qc, rc)};
  });
  for (const auto& r : out.records) out.fitted_c = std::max(out.fitted_c, r.lhs / r.rhs);
  return out;
}

}  // namespace bm
