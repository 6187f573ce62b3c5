#include <cmath>

#include "bmlab/error.hpp"
#include "bmlab/operators.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bm;

namespace {

bool same(const CVec& a, const CVec& b) { return a == b; }

VectorField step(int j, std::int64_t k, Complex v) { return VectorField::indicator({j, LatticeVec{k}}, CVec{v}); }

}  // namespace

TEST_CASE("translation") {
  const auto f = step(0, 0, 1.0);
  const auto t0 = translate(f, Point{0.0});
  const auto t1 = translate(f, Point{1.0});
  for (double x : {-0.5, 0.0, 0.5, 0.99, 1.0, 1.5, 2.0}) {
    CHECK(same(t0(Point{x}), f(Point{x})));
    CHECK(t1(Point{x})[0] == Complex((x >= 1.0 && x < 2.0) ? 1.0 : 0.0));
  }
  auto g = gen::rng(71);
  const auto bump = VectorField::gaussian_bump(Point{0.2, -0.1}, 0.6, CVec{1.0, Complex(0, 2)});
  const auto back = translate(translate(bump, Point{0.5, 0.5}), Point{-0.5, -0.5});
  for (int i = 0; i < 100; ++i) {
    const Point x = gen::point(g, 2, -3, 3);
    const CVec a = back(x), b = bump(x);
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(a[c] - b[c]) <= 1e-14);
  }
}

TEST_CASE("dyadic averages of simple fields") {
  const LatticeWindow w{-1, 3, 2.0, 1};
  const auto c = VectorField::constant(1, CVec{Complex(2.0, -1.0)});
  const auto ec = dyadic_average(c, -1, w);
  // Coverage of this window is [-2, 4).
  for (double x : {-1.9, -1.0, 0.0, 0.3, 3.5}) CHECK(ec(Point{x})[0] == Complex(2.0, -1.0));

  const auto lin = VectorField::affine(Point{1.0}, 0.0, CVec{1.0});
  const auto el = dyadic_average(lin, 0, w);
  CHECK(el(Point{0.3})[0] == Complex(0.5));
  CHECK(el(Point{-1.7})[0] == Complex(-1.5));
  // Outside the window's coverage the average is not defined.
  CHECK_THROWS(el(Point{100.0}));
}

TEST_CASE("property: averaging is idempotent and linear, bit for bit") {
  auto g = gen::rng(72);
  const LatticeWindow w{-1, 4, 2.0, 1};
  for (int trial = 0; trial < 6; ++trial) {
    const int a = -gen::integer(g, 0, 3);
    const auto f = VectorField::gaussian_bump(gen::point(g, 1, -1, 1), gen::uniform(g, 0.2, 0.9), CVec{1.0});
    const auto h = step(gen::integer(g, 0, 4), gen::integer(g, -3, 3), Complex(gen::uniform(g, -1, 1), 1.0));
    const Complex alpha(gen::uniform(g, -2, 2), gen::uniform(g, -2, 2));
    const Complex beta(gen::uniform(g, -2, 2), 0.0);

    const auto ef = dyadic_average(f, a, w);
    const auto eh = dyadic_average(h, a, w);
    const auto eef = dyadic_average(ef, a, w);
    const auto combo = dyadic_average(VectorField::linear_combination({{alpha, f}, {beta, h}}), a, w);
    const auto expected = VectorField::linear_combination({{alpha, ef}, {beta, eh}});
    const Box cov = w.coverage();
    for (int i = 0; i < 100; ++i) {
      const Point x{gen::uniform(g, cov.corner[0], cov.corner[0] + cov.side)};
      CHECK(same(eef(x), ef(x)));
      CHECK(same(combo(x), expected(x)));
    }
  }
}

TEST_CASE("piecewise-constant fields on the averaging grid are fixed points") {
  const LatticeWindow w{-1, 3, 2.0, 1};
  CubeValues vals;
  vals[LatticeVec{-4}] = CVec{1.5};
  vals[LatticeVec{2}] = CVec{Complex(0, -1)};
  const auto f = VectorField::piecewise_constant(1, 1, 1, vals);
  const auto e = dyadic_average(f, -1, w);
  for (double x = -2.0; x < 4.0; x += 0.05) CHECK(same(e(Point{x}), f(Point{x})));
}

TEST_CASE("collection averages") {
  const auto f = step(0, 0, 1.0);
  const auto single = collection_average(VectorField::affine(Point{1.0}, 0.0, CVec{1.0}), {{1, LatticeVec{1}}});
  CHECK(single(Point{0.6})[0] == Complex(0.75));
  CHECK(single(Point{0.2})[0] == Complex(0.0));

  const auto two = collection_average(f, {{0, LatticeVec{0}}, {0, LatticeVec{3}}});
  CHECK(two(Point{0.5})[0] == Complex(1.0));
  CHECK(two(Point{3.5})[0] == Complex(0.0));

  CHECK_THROWS_AS(collection_average(f, {{0, LatticeVec{0}}, {1, LatticeVec{1}}}), ConfigError);

  // The full grid of a window agrees with the dyadic average.
  const LatticeWindow w{0, 2, 1.0, 1};
  const auto bump = VectorField::gaussian_bump(Point{0.1}, 0.5, CVec{1.0});
  const auto plan = averaging_plan(-1, w);
  const auto all = collection_average(bump, plan.cubes());
  const auto e = dyadic_average(bump, -1, w);
  for (double x = plan.coverage.corner[0]; x < plan.coverage.corner[0] + plan.coverage.side; x += 0.1)
    CHECK(all(Point{x})[0] == e(Point{x})[0]);
}

TEST_CASE("Jensen contraction at the identity weight") {
  const Weight id(MatrixWeightSpec::identity(2, 1));
  const LatticeWindow w{-2, 4, 2.0, 1};
  const FieldSuite suite = {
      {"bump", VectorField::gaussian_bump(Point{0.3}, 0.4, CVec{1.0, Complex(0, 1)})},
      {"const", VectorField::constant(1, CVec{1.0, 2.0})},
      {"affine", VectorField::affine(Point{0.5}, 1.0, CVec{1.0, 0.0})},
  };
  for (double p : {1.0, 2.0, 3.0}) {
    const auto rep = avg_lp_bound_check(id, p, suite, {0, -1, -2}, w, {});
    CHECK(rep.max_ratio <= 1.01);
    for (const auto& r : rep.rows)
      if (r.family_id == "const") CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("exponent ledger") {
  CHECK(beta_tilde(3, 1.0, 0.0) == 3.0);
  CHECK(beta_tilde(1, 2.0, 0.5) == doctest::Approx(1.5));
  // Identity: d̃ = 0, β̃ = n, so the finite-r condition is n(1 - r/t) < 0.
  for (double t : {2.0, 3.0}) {
    const auto L = exponent_ledger(2, {1.0, t, 2 * t}, 0.0, std::nullopt);
    CHECK(L.condition_value == doctest::Approx(2.0 * (1.0 - 2.0)));
    CHECK(L.satisfied);
  }
  CHECK_THROWS_AS(exponent_ledger(1, {2.0, 3.0, 4.0}, 0.0, std::nullopt), ConfigError);
  // r = inf, p = t = 1, d̃ = n sits exactly on the boundary.
  const auto inf = exponent_ledger(1, {1.0, 1.0, kInf}, 1.0, std::nullopt);
  CHECK(inf.condition_value == 0.0);
  CHECK(inf.satisfied);
  CHECK(inf.equality);
}

TEST_CASE("Bourgain-Morrey ratio stability at the identity weight") {
  const Weight id(MatrixWeightSpec::identity(1, 1));
  const LatticeWindow w{-4, 6, 4.0, 1};
  const SpaceParams params{1, 2, 4};
  const auto L = exponent_ledger(1, params, 0.0, std::nullopt);
  const FieldSuite suite = {{"bump", VectorField::gaussian_bump(Point{0.0}, 0.5, CVec{1.0})}};
  const auto rep = avg_bm_bound_check(id, params, suite, {0, -1, -2, -3, -4}, L, w, {});
  CHECK(rep.hypothesis_holds);
  CHECK(rep.stable);
  CHECK(rep.tail_variation < 0.2);
}

TEST_CASE("Lebesgue differentiation of x at 0.3") {
  const Weight id(MatrixWeightSpec::identity(1, 1));
  const auto lin = VectorField::affine(Point{1.0}, 0.0, CVec{1.0});
  const auto rep = lebesgue_diff_check(id, 1.0, lin, {Point{0.3}}, 10, {});
  const auto& c = rep.curves.at(0);
  for (std::size_t i = 0; i < c.scales.size(); ++i) {
    // The mean of x on a cube is its midpoint.
    const double side = std::ldexp(1.0, -c.scales[i]);
    const double mid = (std::floor(0.3 / side) + 0.5) * side;
    CHECK(c.errors[i] == doctest::Approx(std::abs(mid - 0.3)).epsilon(1e-12));
  }
  const auto cst = lebesgue_diff_check(id, 1.0, VectorField::constant(1, CVec{3.0}), {Point{0.1}}, 6, {});
  for (double e : cst.curves.at(0).errors) CHECK(e == 0.0);
}

TEST_CASE("Lebesgue differentiation of a bump at seeded points") {
  auto g = gen::rng(73);
  std::vector<Point> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(gen::point(g, 1, -1, 1));
  const Weight id(MatrixWeightSpec::identity(1, 1));
  const auto rep = lebesgue_diff_check(id, 2.0, VectorField::gaussian_bump(Point{0.0}, 0.7, CVec{1.0}), pts, 12, {});
  CHECK(rep.max_final_error < 1e-3);
  CHECK(rep.mean_slope < -0.5);
}
