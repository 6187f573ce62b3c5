#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmlab/dyadic.hpp"
#include "bmlab/linalg.hpp"
#include "bmlab/quadrature.hpp"
#include "bmlab/weights.hpp"

namespace bm {

// Radical inverse of i in the axis-th prime base (axis < 16).
double halton_coordinate(std::uint64_t i, std::size_t axis);

// Quasi-uniform unit vectors of ℂ^d: a Cranley-Patterson shifted Halton sequence
// pushed through Box-Muller, optionally preceded by the standard basis.
std::vector<CVec> sample_directions(int d, std::size_t count, std::uint64_t seed, bool include_basis);

// ρ_Q(z) = (|Q|^{-1} ∫_Q |W^{1/p}(x) z|^p dx)^{1/p} for every z in dirs, on one shared mesh.
std::vector<double> rho_values(const Weight& w, const Box& box, double p, const std::vector<CVec>& dirs,
                               const QuadratureSpec& q, bool* converged = nullptr);

enum class ReducingMethod { exact_p2, mvee };
std::string to_string(ReducingMethod m);
ReducingMethod reducing_method_from_string(const std::string& s);

struct MveeOptions {
  double tol = 1e-7;
  std::size_t max_iterations = 100'000;
  std::size_t directions_per_d2 = 64;
  std::uint64_t seed = 0x5eedULL;
  // At the iteration cap the current ellipsoid still encloses every point; it is
  // accepted (flagged non-converged) when its optimality gap is below this.
  double accept_gap = 1e-3;
};

struct ReducingOperator {
  Box cube;
  CMat A;
  double p = 2.0;
  ReducingMethod method = ReducingMethod::exact_p2;
  double certified_c1 = 1.0;
  double certified_c2 = 1.0;
  std::size_t directions = 0;
  std::size_t iterations = 0;
  double fit_gap = 0.0;
  bool converged = true;
};

ReducingOperator reducing_operator(const Weight& w, const Box& cube, double p, ReducingMethod method,
                                   const QuadratureSpec& q, const MveeOptions& opts = {});
ReducingOperator reducing_operator(const MatrixWeightSpec& spec, const DyadicIndex& cube, double p,
                                   ReducingMethod method, const QuadratureSpec& q, const MveeOptions& opts = {});

// exact_p2 when p = 2, closed form when d = 1, minimum-volume ellipsoid otherwise.
ReducingMethod default_method(const Weight& w, double p);

struct ReducingConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

// Tight constants over fresh directions (seeded differently from the fit).
ReducingConstants verify_reducing(const ReducingOperator& r, const Weight& w, std::size_t n_dirs,
                                  const QuadratureSpec& q, std::uint64_t seed = 0xfeedULL);

struct MveeResult {
  CMat H;  // ellipsoid {z : z* H z <= 1} containing every point
  std::size_t iterations = 0;
  double optimality_gap = 0.0;  // max_i x_i* X^{-1} x_i / d - 1 at exit
  bool converged = false;
};

// Minimum-volume centered ellipsoid enclosing the circled hull of complex points,
// via barycentric coordinate ascent with away steps.
MveeResult mvee(const std::vector<CVec>& points, double tol, std::size_t max_iterations);

// ‖A_Q‖^p |Q| / W(Q).
double norm_mass_equiv(const Weight& w, const Box& cube, double p, const QuadratureSpec& q,
                       const MveeOptions& opts = {});

// A region is a finite union of disjoint boxes.
using Region = std::vector<Box>;
double region_volume(const Region& r);

struct ApCubeValue {
  Box cube;
  double value = 0.0;
  bool converged = true;
};

struct ApEstimate {
  double p = 2.0;
  double characteristic = 0.0;  // max over the family: a lower bound for the true supremum
  std::vector<ApCubeValue> per_cube;
  std::string cube_family;
  std::string ess_sup_rule;  // how the essential supremum was approximated (p <= 1)
  bool converged = true;
};

// The A_p quantity of W on one region with averages taken over it (p > 1 double
// integral; p <= 1 ess-sup over quadrature nodes of the region and its children).
double ap_quantity(const Weight& w, double p, const Region& region, const QuadratureSpec& q, bool* converged = nullptr);

ApEstimate ap_characteristic(const Weight& w, double p, const std::vector<Box>& family, const QuadratureSpec& q);
ApEstimate ap_characteristic(const Weight& w, double p, const std::vector<DyadicIndex>& family,
                             const QuadratureSpec& q);

// A_p quantity on [0,1)^n with the corner sub-cube [0,2^{-ℓ})^n removed, ℓ = 1..levels.
// For weights failing A_p at the origin this grows without bound in ℓ.
struct ExcisionSweep {
  std::vector<int> levels;
  std::vector<double> values;
  double growth = 0.0;  // last / first
  bool monotone = false;
};
ExcisionSweep ap_excision_sweep(const Weight& w, double p, int levels, const QuadratureSpec& q);

// Quantity defining the A_p-dimension for base cube Q and dilate 2^i Q.
double ap_dimension_quantity(const Weight& w, double p, const Box& base, int i, const QuadratureSpec& q);

struct DimensionFit {
  Box base;
  std::vector<double> log2_values;  // i = 0..i_max
  double slope = 0.0;
  double residual = 0.0;  // RMS residual of the least-squares line
};

// Dimensions are admissible exponents, so they are reported as max(0, fitted slope);
// the raw slopes are kept alongside.
struct DimensionEstimate {
  double d_tilde = 0.0;
  double dual_d_tilde = 0.0;  // only for p > 1
  double raw_slope = 0.0;
  double raw_dual_slope = 0.0;
  bool has_dual = false;
  double beta = 0.0;
  double regression_residual = 0.0;
  std::vector<DimensionFit> fits;
  std::vector<DimensionFit> dual_fits;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

DimensionEstimate ap_dimension(const Weight& w, double p, const std::vector<Box>& base_cubes, int i_max,
                               const QuadratureSpec& q);

struct DoublingEstimate {
  double beta = 0.0;
  double max_ratio = 0.0;
  std::size_t directions = 0;
};

// β̂ = log_2 max ∫_{2Q} w_y / ∫_Q w_y over cubes and directions, 2Q the concentric double.
DoublingEstimate doubling_exponent(const Weight& w, double p, const std::vector<Box>& cubes, std::size_t n_dirs,
                                   const QuadratureSpec& q, std::uint64_t seed = 0xd0b1ULL);

struct RatioRecord {
  Box q_cube;
  Box r_cube;
  double lhs = 0.0;  // ‖A_Q A_R^{-1}‖
  double rhs = 0.0;  // bound without the constant
};

struct RatioCheck {
  std::vector<RatioRecord> records;
  double fitted_c = 0.0;  // max lhs/rhs
};

double reducing_ratio_bound(double p, double d_tilde, double dual_d_tilde, const Box& q_cube, const Box& r_cube);

RatioCheck reducing_ratio_check(const Weight& w, double p, const std::vector<std::pair<Box, Box>>& pairs,
                                const DimensionEstimate& dims, const QuadratureSpec& q, const MveeOptions& opts = {});

}  // namespace bm
