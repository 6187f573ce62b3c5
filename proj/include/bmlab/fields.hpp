#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmlab/dyadic.hpp"
#include "bmlab/linalg.hpp"

namespace bm {

enum class FieldKind {
  zero,
  constant,
  gaussian_bump,      // v exp(-|x-c|^2/s^2)
  gaussian_gradient,  // analytic gradient of a d = 1 bump
  power_tail,         // |x|^e v
  affine,             // (b + g·x) v
  piecewise_constant,
  translate,
  ball_truncation,
  linear_combination,
  fd_gradient,
};

std::string to_string(FieldKind k);

struct LatticeVecLess {
  bool operator()(const LatticeVec& a, const LatticeVec& b) const { return lex_less(a, b); }
};
using CubeValues = std::map<LatticeVec, CVec, LatticeVecLess>;

// Axis-aligned bounding region [lo, hi] (closed).
struct Bounds {
  Point lo;
  Point hi;
  bool intersects(const Box& b) const;
  static Bounds of(const Box& b);
  Bounds united(const Bounds& other) const;
};

struct FieldNode;

// Immutable ℂ^d-valued function on ℝ^n built from closed-form pieces. Copies share
// the underlying expression tree, so fields are cheap to pass around and safe to
// evaluate from many threads.
class VectorField {
 public:
  static VectorField zero(int d, int n);
  static VectorField constant(int n, const CVec& value);
  static VectorField gaussian_bump(const Point& center, double scale, const CVec& direction);
  static VectorField power_tail(int n, double exponent, const CVec& direction);
  static VectorField affine(const Point& slope, double offset, const CVec& direction);
  // Constant on each cube of scale j listed in values, zero on the others. With a
  // coverage box, evaluation outside it throws instead of returning zero.
  static VectorField piecewise_constant(int d, int n, int scale, CubeValues values,
                                        std::optional<Box> coverage = std::nullopt);
  static VectorField indicator(const DyadicIndex& cube, const CVec& value);
  static VectorField linear_combination(const std::vector<std::pair<Complex, VectorField>>& terms);

  // (τ_y f)(x) = f(x - y).
  VectorField translated(const Point& y) const;
  // f χ_{B(0,R)} (inside) or f χ_{B^c(0,R)} (outside).
  VectorField ball_truncated(double radius, bool inside = true) const;
  VectorField scaled(Complex s) const;
  // ∇f for d = 1 fields as an n-component field: analytic where the tree allows it,
  // central differences with step h otherwise.
  VectorField gradient(double h = 1e-4) const;
  VectorField finite_difference_gradient(double h) const;
  bool has_analytic_gradient() const;

  int dim() const;
  int ambient() const;
  FieldKind kind() const;

  CVec operator()(const Point& x) const;

  // Closed box outside of which f vanishes identically; nullopt if unbounded.
  std::optional<Bounds> support() const;
  // Points near which f is unbounded or jumps in a way quadrature should grade toward.
  std::vector<Point> singular_points() const;
  std::string describe() const;

  const FieldNode& node() const { return *node_; }
  explicit VectorField(std::shared_ptr<const FieldNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<const FieldNode> node_;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);

struct FieldNode {
  FieldKind kind = FieldKind::zero;
  int d = 1;
  int n = 1;
  CVec vec;       // constant value, bump direction, tail direction
  Point center;   // bump center; translation shift
  double scale = 1.0;
  double exponent = 0.0;
  Point slope;  // affine gradient g
  double offset = 0.0;
  double radius = 0.0;
  bool inside = true;
  double step = 0.0;  // finite-difference step
  int cube_scale = 0;
  CubeValues values;
  std::optional<Box> coverage;
  std::vector<std::pair<Complex, VectorField>> terms;
  std::optional<VectorField> child;
};

}  // namespace bm
