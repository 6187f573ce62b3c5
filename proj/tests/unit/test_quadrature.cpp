#include <cmath>

#include "bmlab/integrals.hpp"
#include "bmlab/lattice.hpp"
#include "bmlab/quadrature.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bm;

namespace {
const Box unit1{Point{0.0}, 1.0};
}

TEST_CASE("constant and linear integrands") {
  QuadratureSpec q;
  CHECK(integrate_box([](const Point&) { return 1.0; }, unit1, q).value == 1.0);
  CHECK(integrate_box([](const Point& x) { return x[0]; }, unit1, q).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("graded integration of an integrable singularity") {
  QuadratureSpec q;
  const Point origin{0.0};
  const auto r = integrate_box([](const Point& x) { return x[0] > 0 ? 1.0 / std::sqrt(x[0]) : 0.0; }, unit1, q,
                               std::span<const Point>(&origin, 1));
  // ∫_0^1 x^{-1/2} = 2√x |_0^1
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("property: Gauss rule exactness on random polynomials") {
  auto g = gen::rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int pts = gen::integer(g, 2, 6);
    const int deg = 2 * pts - 1;
    std::vector<double> c(static_cast<std::size_t>(deg + 1));
    for (auto& v : c) v = gen::uniform(g, -1, 1);
    const GaussRule& rule = gauss_legendre(pts);
    double quad = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double pv = 0.0;
      for (int k = deg; k >= 0; --k) pv = pv * rule.nodes[i] + c[static_cast<std::size_t>(k)];
      quad += rule.weights[i] * pv;
    }
    double exact = 0.0;  // ∫_{-1}^{1} x^k = 2/(k+1) for even k
    for (int k = 0; k <= deg; k += 2) exact += c[static_cast<std::size_t>(k)] * 2.0 / (k + 1);
    CHECK(quad == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("property: integrals over 2d boxes of separable polynomials") {
  auto g = gen::rng(42);
  QuadratureSpec q;
  for (int trial = 0; trial < 30; ++trial) {
    const Box b{gen::point(g, 2, -2, 2), gen::uniform(g, 0.1, 3.0)};
    const double a = gen::uniform(g, -1, 1), c = gen::uniform(g, -1, 1);
    auto antideriv = [](double lo, double hi, int k) { return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (k + 1); };
    const double x0 = b.corner[0], x1 = x0 + b.side, y0 = b.corner[1], y1 = y0 + b.side;
    const double exact = a * antideriv(x0, x1, 3) * antideriv(y0, y1, 1) + c * antideriv(x0, x1, 0) * antideriv(y0, y1, 2);
    const auto r = integrate_box([&](const Point& x) { return a * x[0] * x[0] * x[0] * x[1] + c * x[1] * x[1]; }, b, q);
    CHECK(r.value == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("compensated sum beats naive summation") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 10000; ++i) s.add(1e-16);
  s.add(-1.0);
  CHECK(s.value() == doctest::Approx(1e-12).epsilon(1e-9));
}

TEST_CASE("weight masses") {
  QuadratureSpec q;
  CHECK(weight_mass(Weight(MatrixWeightSpec::identity(2, 2)), Box{Point{0.0, 0.0}, 2.0}, q).value ==
        doctest::Approx(4.0));
  CHECK(weight_mass(Weight(MatrixWeightSpec::scalar_power(1, 1, 1.0)), unit1, q).value ==
        doctest::Approx(0.5).epsilon(1e-10));
  // ‖diag(x, x^{-1/2})‖ = max(x, x^{-1/2}) = x^{-1/2} on (0,1], so the mass is 2.
  const auto spec = MatrixWeightSpec::diagonal_power(1, {1.0, -0.5});
  CHECK(weight_mass(Weight(spec), unit1, q).value == doctest::Approx(2.0).epsilon(1e-6));
  // On [0,2): ∫_0^1 x^{-1/2} + ∫_1^2 x = 2 + 1.5.
  CHECK(weight_mass(Weight(spec), Box{Point{0.0}, 2.0}, q).value == doctest::Approx(3.5).epsilon(1e-6));
}

TEST_CASE("p-integrals") {
  QuadratureSpec q;
  const auto id = Weight(MatrixWeightSpec::identity(2, 1));
  CHECK(p_integral(id, VectorField::constant(1, CVec{1.0, 0.0}), 3.0, unit1, q).value == doctest::Approx(1.0));
  const auto lin = Weight(MatrixWeightSpec::scalar_power(1, 1, 1.0));
  CHECK(p_integral(lin, VectorField::constant(1, CVec{1.0}), 1.0, unit1, q).value ==
        doctest::Approx(0.5).epsilon(1e-10));
  const double d49[] = {4.0, 9.0};
  const auto c = Weight(MatrixWeightSpec::constant(1, CMat::diagonal(std::span<const double>(d49))));
  CHECK(p_integral(c, VectorField::constant(1, CVec{1.0, 1.0}), 2.0, unit1, q).value == doctest::Approx(13.0));
}

TEST_CASE("property: lattice layers are additive across scales") {
  auto g = gen::rng(43);
  QuadratureSpec q;
  for (int trial = 0; trial < 10; ++trial) {
    LatticeWindow w{gen::integer(g, -2, 0), 0, gen::uniform(g, 0.5, 3.0), 1};
    w.j_max = w.j_min + gen::integer(g, 1, 4);
    const Weight wt(MatrixWeightSpec::scalar_power(1, 1, gen::uniform(g, 0.0, 2.0)));
    const LatticeIntegrals li = integrate_lattice(w, mass_integrand(wt), q);
    for (int j = w.j_min; j < w.j_max; ++j) {
      const auto& coarse = li.layer(j);
      for (std::size_t i = 0; i < coarse.cubes.size(); ++i) {
        // Direct integration of the coarse cube as an independent oracle.
        const double direct = weight_mass(wt, to_box(coarse.cubes[i]), q).value;
        CHECK(coarse.values[i] == doctest::Approx(direct).epsilon(1e-6));  // rel_tol is 1e-7 per cell
      }
    }
  }
}
