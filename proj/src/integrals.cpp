#include "bmlab/integrals.hpp"

#include <algorithm>
#include <cmath>

#include "bmlab/error.hpp"

namespace bm {

std::vector<Point> merge_points(const std::vector<Point>& a, const std::vector<Point>& b) {
  std::vector<Point> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end(), [](const Point& x, const Point& y) { return lex_less(x, y); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CubeIntegrand mass_integrand(const Weight& w) {
  CubeIntegrand ig;
  ig.g = [w](const Point& x, std::span<double> out) { out[0] = w.norm(x); };
  ig.singular = w.singular_points();
  return ig;
}

CubeIntegrand p_integrand(const Weight& w, const VectorField& f, double p) {
  if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
  if (f.dim() != w.dim() || f.ambient() != w.ambient())
    throw ConfigError("field and weight dimensions do not match");
  CubeIntegrand ig;
  const double alpha = 1.0 / p;
  ig.g = [w, f, p, alpha](const Point& x, std::span<double> out) {
    const CVec v = f(x);
    bool zero = true;
    for (const Complex& c : v)
      if (c != 0.0) zero = false;
    // Skipping zeros also keeps W from being evaluated at its singular point off the support.
    out[0] = zero ? 0.0 : w.power_apply_norm(x, alpha, v, p);
  };
  ig.singular = merge_points(w.singular_points(), f.singular_points());
  ig.support = f.support();
  return ig;
}

namespace {

MultiIntegralResult zero_result(std::size_t components) {
  MultiIntegralResult r;
  r.values.assign(components, 0.0);
  r.errors.assign(components, 0.0);
  r.abs_values.assign(components, 0.0);
  return r;
}

double support_extent(const Bounds& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < b.lo.size(); ++i) e = std::max(e, b.hi[i] - b.lo[i]);
  return e;
}

// A narrow support inside a big cube can fall between every quadrature node of the
// coarse rule, which then reports a confident zero. Bisect down to the support's
// scale first, dropping children that miss it.
void integrate_around_support(const CubeIntegrand& ig, const Box& box, double extent, const QuadratureSpec& q,
                              MultiIntegralResult& acc) {
  if (!ig.support->intersects(box)) return;
  if (!(box.side > 2.0 * extent)) {
    const MultiIntegralResult r = integrate_box(ig.g, ig.components, box, q, ig.singular);
    for (std::size_t c = 0; c < ig.components; ++c) {
      acc.values[c] += r.values[c];
      acc.errors[c] += r.errors[c];
      acc.abs_values[c] += r.abs_values[c];
    }
    acc.cells_used += r.cells_used;
    acc.converged = acc.converged && r.converged;
    return;
  }
  const std::size_t n = box.dim();
  const double h = box.side / 2.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Box child{box.corner, h};
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) child.corner[i] += h;
    integrate_around_support(ig, child, extent, q, acc);
  }
}

}  // namespace

MultiIntegralResult integrate(const CubeIntegrand& ig, const Box& box, const QuadratureSpec& q) {
  if (ig.support && !ig.support->intersects(box)) return zero_result(ig.components);
  if (ig.support) {
    const double extent = support_extent(*ig.support);
    if (std::isfinite(extent) && extent > 0.0 && box.side > 2.0 * extent) {
      MultiIntegralResult acc = zero_result(ig.components);
      integrate_around_support(ig, box, extent, q, acc);
      return acc;
    }
  }
  return integrate_box(ig.g, ig.components, box, q, ig.singular);
}

namespace {

IntegralResult scalar(const MultiIntegralResult& r) { return {r.values[0], r.errors[0], r.cells_used, r.converged}; }

}  // namespace

IntegralResult weight_mass(const Weight& w, const Box& box, const QuadratureSpec& q) {
  return scalar(integrate(mass_integrand(w), box, q));
}

IntegralResult weight_mass(const MatrixWeightSpec& spec, const DyadicIndex& cube, const QuadratureSpec& q) {
  return weight_mass(Weight(spec), to_box(cube), q);
}

IntegralResult p_integral(const Weight& w, const VectorField& f, double p, const Box& box, const QuadratureSpec& q) {
  return scalar(integrate(p_integrand(w, f, p), box, q));
}

IntegralResult p_integral(const MatrixWeightSpec& spec, const VectorField& f, double p, const DyadicIndex& cube,
                          const QuadratureSpec& q) {
  return p_integral(Weight(spec), f, p, to_box(cube), q);
}

}  // namespace bm
