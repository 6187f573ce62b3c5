#include "bmlab/dyadic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bmlab/error.hpp"

namespace bm {

namespace {

constexpr double kExactIntLimit = 9007199254740992.0;  // 2^53

void check_scale(int j) {
  if (j > kMaxScale || j < -kMaxScale)
    throw ConfigError("dyadic scale " + std::to_string(j) + " outside the exact range |j| <= " +
                      std::to_string(kMaxScale));
}

double exact_corner(std::int64_t k, int j) {
  if (std::fabs(static_cast<double>(k)) >= kExactIntLimit)
    throw ConfigError("dyadic position too large for exact corners");
  return std::ldexp(static_cast<double>(k), -j);
}

}  // namespace

double Box::volume() const { return std::pow(side, static_cast<double>(dim())); }

Point Box::center() const {
  Point c = corner;
  for (auto& v : c) v += 0.5 * side;
  return c;
}

Box Box::dilated(double factor) const {
  Box out;
  out.side = side * factor;
  out.corner = center();
  for (auto& v : out.corner) v -= 0.5 * out.side;
  return out;
}

bool Box::contains(const Point& x) const {
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= corner[i] && x[i] < corner[i] + side)) return false;
  return true;
}

bool Box::closure_contains(const Point& x) const {
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= corner[i] && x[i] <= corner[i] + side)) return false;
  return true;
}

bool Box::overlaps(const Box& other) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    if (corner[i] + side <= other.corner[i]) return false;
    if (other.corner[i] + other.side <= corner[i]) return false;
  }
  return true;
}

CubeGeometry cube_geometry(const DyadicIndex& idx) {
  check_scale(idx.j);
  CubeGeometry g;
  g.side = std::ldexp(1.0, -idx.j);
  g.corner = Point(idx.dim());
  for (std::size_t i = 0; i < idx.dim(); ++i) g.corner[i] = exact_corner(idx.k[i], idx.j);
  g.volume = std::ldexp(1.0, -idx.j * static_cast<int>(idx.dim()));
  return g;
}

Box to_box(const DyadicIndex& idx) {
  auto g = cube_geometry(idx);
  return Box{g.corner, g.side};
}

DyadicIndex dyadic_parent(const DyadicIndex& idx, int steps) {
  if (steps < 0) throw ConfigError("dyadic_parent: steps must be nonnegative");
  if (steps >= 63) throw ConfigError("dyadic_parent: steps too large");
  DyadicIndex out{idx.j - steps, idx.k};
  // Arithmetic right shift is floor division by 2^steps, negatives included.
  for (auto& v : out.k) v >>= steps;
  return out;
}

std::vector<DyadicIndex> dyadic_children(const DyadicIndex& idx) {
  const std::size_t n = idx.dim();
  std::vector<DyadicIndex> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    DyadicIndex c{idx.j + 1, idx.k};
    // Highest axis bit first so the list comes out lexicographic in k.
    for (std::size_t i = 0; i < n; ++i) c.k[i] = 2 * idx.k[i] + static_cast<std::int64_t>((mask >> (n - 1 - i)) & 1U);
    out.push_back(c);
  }
  return out;
}

bool dyadic_contains(const DyadicIndex& outer, const DyadicIndex& inner) {
  if (inner.j < outer.j || inner.dim() != outer.dim()) return false;
  return dyadic_parent(inner, inner.j - outer.j) == outer;
}

DyadicIndex containing_cube(const Point& x, int j) {
  check_scale(j);
  DyadicIndex out{j, LatticeVec(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw ConfigError("containing_cube: non-finite coordinate");
    const double scaled = std::floor(std::ldexp(x[i], j));
    if (std::fabs(scaled) >= kExactIntLimit) throw ConfigError("containing_cube: coordinate out of range");
    out.k[i] = static_cast<std::int64_t>(scaled);
  }
  return out;
}

void LatticeWindow::validate() const {
  if (n < 1 || static_cast<std::size_t>(n) > kMaxAmbient)
    throw ConfigError("window: ambient dimension must be in [1, " + std::to_string(kMaxAmbient) + "]");
  if (j_min > j_max) throw ConfigError("window: j_min > j_max");
  check_scale(j_min);
  check_scale(j_max);
  if (!(spatial_radius > 0.0) || !std::isfinite(spatial_radius))
    throw ConfigError("window: spatial_radius must be positive and finite");
}

Box LatticeWindow::coverage() const {
  validate();
  const double side = std::ldexp(1.0, -j_min);
  // Coarse cubes meeting [-R, R] on each axis.
  const double lo = std::floor(-spatial_radius / side) * side;
  const double hi = (std::floor(spatial_radius / side) + 1.0) * side;
  Box b;
  b.corner = Point(static_cast<std::size_t>(n), lo);
  b.side = hi - lo;
  return b;
}

bool cube_meets_ball(const DyadicIndex& idx, double radius) {
  const auto g = cube_geometry(idx);
  // Per axis, the infimum of |x_i| over [a, b) and whether it is attained.
  double dist2 = 0.0;
  bool attained = true;
  for (std::size_t i = 0; i < idx.dim(); ++i) {
    const double a = g.corner[i];
    const double b = a + g.side;
    if (a <= 0.0 && 0.0 < b) continue;
    if (a > 0.0) {
      dist2 += a * a;
    } else {
      dist2 += b * b;
      attained = false;
    }
  }
  const double r2 = radius * radius;
  return attained ? dist2 <= r2 : dist2 < r2;
}

std::vector<DyadicIndex> cubes_in_window(const LatticeWindow& w, int j, std::size_t cap) {
  w.validate();
  if (j < w.j_min || j > w.j_max) throw ConfigError("cubes_in_window: scale outside window");
  const std::size_t n = static_cast<std::size_t>(w.n);
  const double scaled = std::ldexp(w.spatial_radius, j);
  const auto lo = static_cast<std::int64_t>(std::floor(-scaled)) - 1;
  const auto hi = static_cast<std::int64_t>(std::floor(scaled)) + 1;
  const double per_axis = static_cast<double>(hi - lo + 1);
  if (std::pow(per_axis, static_cast<double>(n)) > static_cast<double>(cap) * 4.0 + 64.0)
    throw ConfigError("window too large: scale " + std::to_string(j) + " would enumerate more than " +
                      std::to_string(cap) + " cubes");

  std::vector<DyadicIndex> out;
  DyadicIndex idx{j, LatticeVec(n, lo)};
  while (true) {
    if (cube_meets_ball(idx, w.spatial_radius)) {
      out.push_back(idx);
      if (out.size() > cap) throw ConfigError("window too large: cube count cap exceeded");
    }
    // Odometer increment, last axis fastest: lexicographic order.
    std::size_t axis = n;
    while (axis > 0) {
      --axis;
      if (idx.k[axis] < hi) {
        ++idx.k[axis];
        break;
      }
      idx.k[axis] = lo;
      if (axis == 0) return out;
    }
  }
}

}  // namespace bm
