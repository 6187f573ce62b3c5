#include <cmath>
#include <set>

#include "bmlab/dyadic.hpp"
#include "bmlab/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bm;

namespace {
DyadicIndex cube(int j, std::initializer_list<std::int64_t> k) { return {j, LatticeVec(k)}; }
}  // namespace

TEST_CASE("cube geometry on small examples") {
  auto g = cube_geometry(cube(0, {0}));
  CHECK(g.corner[0] == 0.0);
  CHECK(g.side == 1.0);
  CHECK(g.volume == 1.0);

  g = cube_geometry(cube(2, {1}));
  CHECK(g.corner[0] == 0.25);
  CHECK(g.side == 0.25);

  g = cube_geometry(cube(-1, {-1, 0}));
  CHECK(g.corner[0] == -2.0);
  CHECK(g.corner[1] == 0.0);
  CHECK(g.side == 2.0);
  CHECK(g.volume == 4.0);
}

TEST_CASE("scales beyond the supported range are rejected") {
  CHECK_THROWS_AS(cube_geometry(cube(41, {0})), ConfigError);
  CHECK_THROWS_AS(cube_geometry(cube(-41, {0})), ConfigError);
}

TEST_CASE("parent uses floor division") {
  CHECK(dyadic_parent(cube(3, {5}), 1) == cube(2, {2}));
  CHECK(dyadic_parent(cube(3, {-5}), 1) == cube(2, {-3}));
  CHECK(dyadic_parent(cube(3, {-5}), 0) == cube(3, {-5}));
}

TEST_CASE("containing cube") {
  CHECK(containing_cube(Point{0.3}, 2) == cube(2, {1}));
  CHECK(containing_cube(Point{-0.1}, 0) == cube(0, {-1}));
  for (int j = -5; j <= 5; ++j) CHECK(containing_cube(Point{0.0}, j) == cube(j, {0}));
}

TEST_CASE("property: children partition their parent") {
  auto g = gen::rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen::integer(g, 1, 3));
    const DyadicIndex p = gen::cube(g, n, -6, 6, 50);
    const auto kids = dyadic_children(p);
    REQUIRE(kids.size() == (std::size_t{1} << n));
    double vol = 0.0;
    for (const auto& c : kids) {
      CHECK(c.j == p.j + 1);
      CHECK(dyadic_parent(c, 1) == p);
      CHECK(dyadic_contains(p, c));
      vol += to_box(c).volume();
    }
    CHECK(vol == to_box(p).volume());
    for (std::size_t i = 1; i < kids.size(); ++i) CHECK(kids[i - 1] < kids[i]);
  }
}

TEST_CASE("property: a point lies in its containing cube at every scale") {
  auto g = gen::rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen::integer(g, 1, 4));
    const Point x = gen::point(g, n, -100, 100);
    const int j = gen::integer(g, -8, 8);
    const DyadicIndex c = containing_cube(x, j);
    CHECK(to_box(c).contains(x));
    CHECK(dyadic_parent(c, 3) == containing_cube(x, j - 3));
  }
}

// Brute force: every k in a generous range, tested against the closed ball directly.
std::set<std::int64_t> brute_force_window_1d(double radius, int j) {
  std::set<std::int64_t> out;
  const double side = std::ldexp(1.0, -j);
  const auto span = static_cast<std::int64_t>(std::ceil(radius / side)) + 3;
  for (std::int64_t k = -span; k <= span; ++k) {
    const double lo = static_cast<double>(k) * side;
    const double hi = lo + side;
    // [lo, hi) meets [-R, R] iff lo <= R and hi > -R
    if (lo <= radius && hi > -radius) out.insert(k);
  }
  return out;
}

TEST_CASE("window enumeration matches brute force") {
  for (auto [radius, j] : std::vector<std::pair<double, int>>{{1.0, 0}, {1.0, 1}, {0.1, -3}, {2.5, 2}, {0.3, 4}}) {
    LatticeWindow w{j, j, radius, 1};
    std::set<std::int64_t> got;
    for (const auto& c : cubes_in_window(w, j)) got.insert(c.k[0]);
    CHECK(got == brute_force_window_1d(radius, j));
  }
  // radius 1, j = 0 gives {-1, 0, 1}: [1,2) meets the closed ball at x = 1.
  LatticeWindow w{0, 0, 1.0, 1};
  CHECK(cubes_in_window(w, 0).size() == 3);
}

TEST_CASE("property: window coverage contains every window cube") {
  auto g = gen::rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    LatticeWindow w;
    w.n = gen::integer(g, 1, 2);
    w.j_min = gen::integer(g, -4, 1);
    w.j_max = w.j_min + gen::integer(g, 0, 4);
    w.spatial_radius = gen::uniform(g, 0.2, 5.0);
    const Box cov = w.coverage();
    for (int j = w.j_min; j <= w.j_max; ++j)
      for (const auto& c : cubes_in_window(w, j)) {
        const Box b = to_box(c);
        for (std::size_t i = 0; i < b.dim(); ++i) {
          CHECK(b.corner[i] >= cov.corner[i]);
          CHECK(b.corner[i] + b.side <= cov.corner[i] + cov.side);
        }
      }
  }
}

TEST_CASE("box helpers") {
  Box b{Point{0.0, 0.0}, 2.0};
  CHECK(b.volume() == 4.0);
  CHECK(b.contains(Point{0.0, 1.9}));
  CHECK_FALSE(b.contains(Point{2.0, 1.0}));
  CHECK(b.closure_contains(Point{2.0, 1.0}));
  const Box d = b.dilated(2.0);
  CHECK(d.corner[0] == -1.0);
  CHECK(d.side == 4.0);
  CHECK(b.overlaps(Box{Point{1.0, 1.0}, 2.0}));
  CHECK_FALSE(b.overlaps(Box{Point{2.0, 0.0}, 1.0}));
}
