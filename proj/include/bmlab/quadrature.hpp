#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bmlab/dyadic.hpp"

namespace bm {

struct QuadratureSpec {
  int points_per_axis = 4;  // Gauss-Legendre nodes per axis in each cell rule
  int max_depth = 50;       // bisection levels below the root box
  double rel_tol = 1e-7;
  double grading_ratio = 0.5;  // only dyadic (1/2) grading is supported
  std::size_t max_cells = 200'000;

  void validate() const;
};

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t cells_used = 0;
  bool converged = true;
};

// Several integrals over the same box sharing one adaptive mesh.
struct MultiIntegralResult {
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> abs_values;  // ∫|g_c|
  std::size_t cells_used = 0;
  bool converged = true;
};

// Writes all components of the integrand at x into out.
using MultiIntegrand = std::function<void(const Point& x, std::span<double> out)>;
using ScalarIntegrand = std::function<double(const Point& x)>;

// 1-d Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int points);

// Adaptive cubature on a box. Cells whose closure contains one of the singular
// points are refined toward it regardless of their local error estimate.
MultiIntegralResult integrate_box(const MultiIntegrand& g, std::size_t components, const Box& box,
                                  const QuadratureSpec& q, std::span<const Point> singular = {});

IntegralResult integrate_box(const ScalarIntegrand& g, const Box& box, const QuadratureSpec& q,
                             std::span<const Point> singular = {});

IntegralResult integrate_cube(const ScalarIntegrand& g, const DyadicIndex& cube, const QuadratureSpec& q,
                              std::span<const Point> singular = {});

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace bm
