#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bmlab/fields.hpp"
#include "bmlab/quadrature.hpp"
#include "bmlab/reducing.hpp"
#include "bmlab/spaces.hpp"
#include "bmlab/weights.hpp"

namespace bm {

using FieldSuite = std::vector<std::pair<std::string, VectorField>>;

// (τ_y f)(x) = f(x - y).
VectorField translate(const VectorField& f, const Point& y);

// The 𝒟_{-a} cubes (side 2^a) tiling the coverage box of a window.
struct AveragingPlan {
  int a = 0;
  int scale = 0;  // -a
  LatticeVec k_lo;
  std::int64_t per_axis = 0;
  Box coverage;

  std::size_t cube_count() const;
  std::vector<DyadicIndex> cubes() const;
};

AveragingPlan averaging_plan(int a, const LatticeWindow& window);

// |Q|^{-1} ∫_Q f, componentwise.
CVec cube_mean(const VectorField& f, const Box& cube, const QuadratureSpec& q);

// Means of f on distinct same-scale dyadic cubes. Exact for constant, affine and
// piecewise-constant fields (and linear combinations of them); quadrature otherwise.
std::vector<CVec> cube_means(const VectorField& f, int scale, const std::vector<DyadicIndex>& cubes,
                             const QuadratureSpec& q);

// E_{d,a} f on the window: constant on each 𝒟_{-a} cube with the cube mean of f.
// Results are cached per (field, a, window, quadrature). Piecewise-constant inputs
// and linear combinations are handled without quadrature, which makes the operator
// exactly idempotent and exactly linear on cached values.
VectorField dyadic_average(const VectorField& f, int a, const LatticeWindow& window, const QuadratureSpec& q = {});

// A_𝒬 f for a pairwise disjoint list of dyadic cubes (zero off their union).
VectorField collection_average(const VectorField& f, const std::vector<DyadicIndex>& cubes,
                               const QuadratureSpec& q = {});

struct RatioRow {
  std::string family_id;
  int a = 0;
  double ratio = 0.0;
  bool converged = true;
};

struct AvgLpReport {
  std::vector<RatioRow> rows;
  std::vector<std::pair<int, double>> max_by_a;  // in the order the a values were given
  double max_ratio = 0.0;
  bool growth_flag = false;  // max grows monotonically by more than 10x along the a-range
  std::vector<std::string> skipped;
};

// ‖E_{d,a} f‖_{L^p(W)} / ‖f‖_{L^p(W)} over the window region, for each member and a.
AvgLpReport avg_lp_bound_check(const Weight& w, double p, const FieldSuite& suite, const std::vector<int>& a_values,
                               const LatticeWindow& window, const QuadratureSpec& q);

struct ExponentLedger {
  int n = 1;
  double p = 1.0;
  double t = 2.0;
  double r = kInf;
  double d_tilde = 0.0;
  double dual_d_tilde = 0.0;
  double beta_tilde = 0.0;
  double condition_value = 0.0;
  bool satisfied = false;
  bool equality = false;  // r = ∞ boundary case: reported, never asserted
};

// β̃ = n (p = 1) or n + d̃*·p/p' (p > 1).
double beta_tilde(int n, double p, double dual_d_tilde);
// -nr/p + d̃r/p + n - β̃r(1/t - 1/p) for finite r, d̃/p - n/p - β̃(1/t - 1/p) for r = ∞.
double ledger_condition(int n, double p, double t, double r, double d_tilde, double beta_tilde);

ExponentLedger exponent_ledger(int n, const SpaceParams& params, double d_tilde, std::optional<double> dual_d_tilde);
ExponentLedger exponent_ledger(int n, const SpaceParams& params, const DimensionEstimate& dims);

struct AvgBmReport {
  std::vector<RatioRow> rows;
  std::vector<std::pair<int, double>> c_obs;  // max ratio per a, a descending
  double c_obs_max = 0.0;
  double tail_variation = 0.0;  // (max - min)/max of C_obs over the last three a
  bool stable = false;
  bool hypothesis_holds = false;
  std::string label;  // "hypothesis-satisfied" or "hypothesis-violated"
  std::vector<std::string> skipped;
};

AvgBmReport avg_bm_bound_check(const Weight& w, const SpaceParams& params, const FieldSuite& suite,
                               const std::vector<int>& a_values, const ExponentLedger& ledger,
                               const LatticeWindow& window, const QuadratureSpec& q);

struct DiffCurve {
  Point x;
  std::vector<int> scales;
  std::vector<double> errors;           // |E_Q f(x) - f(x)|
  std::vector<double> weighted_errors;  // |W^{1/p}(x)(E_Q f(x) - f(x))|
  double slope = 0.0;                   // least-squares slope of log2 e_j (nonzero entries)
};

struct LebesgueDiffReport {
  std::vector<DiffCurve> curves;
  std::vector<Point> excluded;       // singular points of f or W
  std::vector<double> mean_errors;   // average of e_j over the sample points
  double mean_slope = 0.0;           // slope of log2 mean_errors; first order means ≈ -1
  double mean_ratio = 0.0;           // 2^{mean_slope}
  double max_final_error = 0.0;
};

LebesgueDiffReport lebesgue_diff_check(const Weight& w, double p, const VectorField& f,
                                       const std::vector<Point>& points, int j_max, const QuadratureSpec& q);

}  // namespace bm
