#include <cmath>

#include "bmlab/error.hpp"
#include "bmlab/fields.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bm;

TEST_CASE("closed-form evaluation") {
  const auto b = VectorField::gaussian_bump(Point{1.0}, 2.0, CVec{Complex(0, 1)});
  CHECK(std::abs(b(Point{3.0})[0] - Complex(0, std::exp(-1.0))) < 1e-15);
  const auto t = VectorField::power_tail(1, -0.5, CVec{2.0});
  CHECK(t(Point{4.0})[0] == Complex(1.0));
  CHECK(t.singular_points().size() == 1);
  const auto a = VectorField::affine(Point{2.0, -1.0}, 0.5, CVec{1.0});
  CHECK(a(Point{1.0, 3.0})[0] == Complex(-0.5));
}

TEST_CASE("indicators and piecewise fields follow the half-open convention") {
  const auto chi = VectorField::indicator({1, LatticeVec{1}}, CVec{3.0});
  CHECK(chi(Point{0.5})[0] == Complex(3.0));
  CHECK(chi(Point{0.999})[0] == Complex(3.0));
  CHECK(chi(Point{1.0})[0] == Complex(0.0));
  CHECK(chi(Point{0.49})[0] == Complex(0.0));
  const auto sup = chi.support();
  REQUIRE(sup);
  CHECK(sup->lo[0] == 0.5);
  CHECK(sup->hi[0] == 1.0);
}

TEST_CASE("truncation and translation compose") {
  const auto f = VectorField::constant(2, CVec{1.0});
  const auto in = f.ball_truncated(1.0);
  const auto out = f.ball_truncated(1.0, false);
  CHECK(in(Point{0.6, 0.6})[0] == Complex(1.0));
  CHECK(in(Point{0.8, 0.8})[0] == Complex(0.0));
  CHECK(out(Point{0.8, 0.8})[0] == Complex(1.0));
  const auto moved = in.translated(Point{5.0, 0.0});
  CHECK(moved(Point{5.5, 0.0})[0] == Complex(1.0));
  CHECK(moved(Point{0.0, 0.0})[0] == Complex(0.0));
}

TEST_CASE("property: analytic gradients match central differences") {
  auto g = gen::rng(91);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen::integer(g, 1, 3));
    const auto f = VectorField::gaussian_bump(gen::point(g, n, -1, 1), gen::uniform(g, 0.3, 2.0), CVec{1.0});
    REQUIRE(f.has_analytic_gradient());
    const auto ga = f.gradient();
    const auto gf = f.finite_difference_gradient(1e-5);
    const Point x = gen::point(g, n, -2, 2);
    const CVec a = ga(x), b = gf(x);
    REQUIRE(a.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-7);
  }
}

TEST_CASE("property: linear combinations evaluate pointwise") {
  auto g = gen::rng(92);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = VectorField::gaussian_bump(gen::point(g, 2, -1, 1), 0.7, gen::cvec(g, 2));
    const auto h = VectorField::affine(gen::point(g, 2, -1, 1), 0.3, gen::cvec(g, 2));
    const Complex a(gen::uniform(g, -1, 1), gen::uniform(g, -1, 1));
    const auto lc = VectorField::linear_combination({{a, f}, {Complex(-1.0), h}});
    const Point x = gen::point(g, 2, -2, 2);
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(lc(x)[c] - (a * f(x)[c] - h(x)[c])) < 1e-14);
    const auto diff = f - f;
    CHECK(std::abs(diff(x)[0]) == 0.0);
  }
}

TEST_CASE("mismatched dimensions are rejected") {
  const auto f = VectorField::constant(1, CVec{1.0});
  const auto h = VectorField::constant(1, CVec{1.0, 2.0});
  CHECK_THROWS_AS(f + h, ConfigError);
  CHECK_THROWS_AS(VectorField::linear_combination({}), ConfigError);
}
