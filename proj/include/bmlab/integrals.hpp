#pragma once

#include <optional>
#include <vector>

#include "bmlab/fields.hpp"
#include "bmlab/quadrature.hpp"
#include "bmlab/weights.hpp"

namespace bm {

// A multi-component integrand plus what the cubature needs to know about it.
struct CubeIntegrand {
  MultiIntegrand g;
  std::size_t components = 1;
  std::vector<Point> singular;
  std::optional<Bounds> support;  // nullopt: may be nonzero anywhere
};

// ‖W(x)‖ (or ‖W^s(x)‖ for a rescaled Weight).
CubeIntegrand mass_integrand(const Weight& w);
// |W^{1/p}(x) f(x)|^p.
CubeIntegrand p_integrand(const Weight& w, const VectorField& f, double p);

// Integral over a box, short-circuiting to zero when the support misses it.
MultiIntegralResult integrate(const CubeIntegrand& ig, const Box& box, const QuadratureSpec& q);

// W(Q) = ∫_Q ‖W(y)‖ dy.
IntegralResult weight_mass(const Weight& w, const Box& box, const QuadratureSpec& q);
IntegralResult weight_mass(const MatrixWeightSpec& spec, const DyadicIndex& cube, const QuadratureSpec& q);

// ∫_Q |W^{1/p}(x) f(x)|^p dx.
IntegralResult p_integral(const Weight& w, const VectorField& f, double p, const Box& box, const QuadratureSpec& q);
IntegralResult p_integral(const MatrixWeightSpec& spec, const VectorField& f, double p, const DyadicIndex& cube,
                          const QuadratureSpec& q);

std::vector<Point> merge_points(const std::vector<Point>& a, const std::vector<Point>& b);

}  // namespace bm
