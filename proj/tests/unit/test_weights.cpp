#include <cmath>

#include "bmlab/error.hpp"
#include "bmlab/weights.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bm;

TEST_CASE("identity weight") {
  const auto spec = MatrixWeightSpec::identity(3, 2);
  const WeightPoint wp = eval_weight(spec, Point{0.4, -1.0});
  CHECK(max_abs_diff(wp.w, CMat::identity(3)) == 0.0);
  CHECK(wp.small_w == doctest::Approx(1.0));
  CHECK(wp.big_w == doctest::Approx(1.0));
}

TEST_CASE("scalar power at x = 3") {
  const auto spec = MatrixWeightSpec::scalar_power(1, 1, 2.0);
  const WeightPoint wp = eval_weight(spec, Point{3.0});
  CHECK(wp.w(0, 0).real() == doctest::Approx(9.0));
  CHECK(wp.small_w == doctest::Approx(9.0));
  CHECK(wp.big_w == doctest::Approx(9.0));
  CHECK(Weight(spec).norm(Point{3.0}) == doctest::Approx(9.0));
}

TEST_CASE("diagonal power is componentwise") {
  const auto spec = MatrixWeightSpec::diagonal_power(1, {1.0, -0.5});
  const WeightPoint wp = eval_weight(spec, Point{4.0});
  CHECK(wp.w(0, 0).real() == doctest::Approx(4.0));
  CHECK(wp.w(1, 1).real() == doctest::Approx(0.5));
  CHECK(wp.small_w == doctest::Approx(0.5));
  CHECK(wp.big_w == doctest::Approx(4.0));
}

TEST_CASE("singular points and invalid exponents") {
  const auto spec = MatrixWeightSpec::scalar_power(1, 1, 0.5);
  CHECK_THROWS_AS(eval_weight(spec, Point{0.0}), NumericError);
  CHECK_THROWS_AS(MatrixWeightSpec::scalar_power(1, 1, -1.0).validate(), ConfigError);
  CHECK(Weight(spec).singular_points().size() == 1);
}

TEST_CASE("ellipticity sandwich examples") {
  const auto id = MatrixWeightSpec::identity(2, 1);
  const CVec xi{Complex(0.6, 0.0), Complex(0.0, 0.8)};
  const auto r = ellipticity_check(id, 3.0, Point{0.7}, xi);
  CHECK(r.lhs == doctest::Approx(1.0));
  CHECK(r.mid == doctest::Approx(1.0));
  CHECK(r.rhs == doctest::Approx(1.0));

  const double d41[] = {4.0, 1.0};
  const auto c = MatrixWeightSpec::constant(1, CMat::diagonal(std::span<const double>(d41)));
  const auto e = ellipticity_check(c, 2.0, Point{0.0}, CVec{1.0, 0.0});
  CHECK(e.lhs == doctest::Approx(1.0));
  CHECK(e.mid == doctest::Approx(4.0));
  CHECK(e.rhs == doctest::Approx(4.0));
  CHECK(e.holds);
}

TEST_CASE("property: ellipticity sandwich on conjugated diagonal weights") {
  auto g = gen::rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen::integer(g, 1, 3));
    std::vector<double> gammas(d), coeffs(d);
    for (std::size_t i = 0; i < d; ++i) {
      gammas[i] = gen::uniform(g, -0.8, 2.0);
      coeffs[i] = gen::uniform(g, 0.2, 3.0);
    }
    const auto spec = MatrixWeightSpec::diagonal_power(1, gammas, coeffs, gen::unitary(g, d));
    const double p = std::vector<double>{1.0, 2.0, 3.0}[static_cast<std::size_t>(gen::integer(g, 0, 2))];
    const Point x{gen::uniform(g, 0.1, 4.0) * (gen::integer(g, 0, 1) ? 1 : -1)};
    const CVec xi = gen::cvec(g, d);
    const auto r = ellipticity_check(spec, p, x, xi);
    CHECK(r.holds);
    // Independent middle term through the generic matrix power.
    const CVec y = matrix_power(eval_weight(spec, x).w, 1.0 / p) * xi;
    CHECK(r.mid == doctest::Approx(std::pow(euclidean_norm(y.span()), p)).epsilon(1e-10));
    CHECK(r.lhs <= r.mid * (1 + 1e-10));
    CHECK(r.mid <= r.rhs * (1 + 1e-10));
  }
}

TEST_CASE("property: closed-form powers match the generic eigen path") {
  auto g = gen::rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen::integer(g, 1, 4));
    std::vector<double> gammas(d);
    for (auto& v : gammas) v = gen::uniform(g, -0.5, 1.5);
    const auto spec = MatrixWeightSpec::diagonal_power(2, gammas, {}, gen::unitary(g, d));
    const Weight w(spec);
    const Point x = gen::point(g, 2, -3, 3);
    const double alpha = gen::uniform(g, -1.0, 1.0);
    const CMat generic = matrix_power(eval_weight(spec, x).w, alpha);
    CHECK(max_abs_diff(w.power(x, alpha), generic) <= 1e-10 * std::max(1.0, generic.frobenius_norm()));
  }
}

TEST_CASE("dual weight inverts the power") {
  const auto spec = MatrixWeightSpec::diagonal_power(1, {0.5, -0.25});
  const Weight w(spec);
  const Weight dual = w.dual(3.0);
  const Point x{1.7};
  // W^{-1/(p-1)} at p = 3 is W^{-1/2}.
  CHECK(max_abs_diff(dual.matrix(x), w.power(x, -0.5)) < 1e-12);
  CHECK_THROWS(w.dual(1.0));
}

TEST_CASE("scalar table interpolates and clamps") {
  ScalarTable t;
  t.origin = Point{0.0};
  t.spacing = 1.0;
  t.counts = {3};
  t.values = {1.0, 3.0, 2.0};
  const Weight w(MatrixWeightSpec::scalar_table(t));
  CHECK(w.norm(Point{0.5}) == doctest::Approx(2.0));
  CHECK(w.norm(Point{1.5}) == doctest::Approx(2.5));
  CHECK(w.norm(Point{-4.0}) == doctest::Approx(1.0));
  CHECK(w.norm(Point{9.0}) == doctest::Approx(2.0));
}
