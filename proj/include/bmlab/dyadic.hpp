#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bmlab/small_vector.hpp"

namespace bm {

inline constexpr std::size_t kMaxAmbient = 4;
// 2^{-j} and every corner 2^{-j}k stay exact binary doubles inside this range.
inline constexpr int kMaxScale = 40;
inline constexpr std::size_t kDefaultCubeCap = 20'000'000;

using Point = SmallVec<double, kMaxAmbient>;
using LatticeVec = SmallVec<std::int64_t, kMaxAmbient>;

// Names the half-open cube Q_{j,k} = Π_i [2^{-j}k_i, 2^{-j}(k_i+1)).
struct DyadicIndex {
  int j = 0;
  LatticeVec k;

  std::size_t dim() const { return k.size(); }

  friend bool operator==(const DyadicIndex& a, const DyadicIndex& b) { return a.j == b.j && a.k == b.k; }
  // Lexicographic in (j, k).
  friend bool operator<(const DyadicIndex& a, const DyadicIndex& b) {
    if (a.j != b.j) return a.j < b.j;
    return lex_less(a.k, b.k);
  }
};

// Axis-aligned cube [corner, corner + side)^n; not necessarily dyadic (dilates 2^iQ are not).
struct Box {
  Point corner;
  double side = 0.0;

  std::size_t dim() const { return corner.size(); }
  double volume() const;
  Point center() const;
  // Concentric cube with side multiplied by factor.
  Box dilated(double factor) const;
  bool contains(const Point& x) const;          // half-open membership
  bool closure_contains(const Point& x) const;  // closed membership
  // Half-open interiors overlap in a set of positive measure.
  bool overlaps(const Box& other) const;
};

struct CubeGeometry {
  Point corner;
  double side = 0.0;
  double volume = 0.0;
};

// Throws ConfigError if |j| > kMaxScale or a corner coordinate is not exactly representable.
CubeGeometry cube_geometry(const DyadicIndex& idx);
Box to_box(const DyadicIndex& idx);

DyadicIndex dyadic_parent(const DyadicIndex& idx, int steps);
// The 2^n children at scale j+1, lexicographic.
std::vector<DyadicIndex> dyadic_children(const DyadicIndex& idx);
bool dyadic_contains(const DyadicIndex& outer, const DyadicIndex& inner);

DyadicIndex containing_cube(const Point& x, int j);

struct LatticeWindow {
  int j_min = 0;
  int j_max = 0;
  double spatial_radius = 1.0;
  int n = 1;

  void validate() const;
  // Bounding box of the coarsest-layer cubes; every window cube lies inside it.
  Box coverage() const;
};

// Does the half-open cube meet the closed ball B(0, radius)?
bool cube_meets_ball(const DyadicIndex& idx, double radius);

// Cubes at scale j meeting the closed ball of the window, lexicographic in k.
std::vector<DyadicIndex> cubes_in_window(const LatticeWindow& w, int j, std::size_t cap = kDefaultCubeCap);

}  // namespace bm
