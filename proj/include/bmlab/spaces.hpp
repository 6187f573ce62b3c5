#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bmlab/fields.hpp"
#include "bmlab/lattice.hpp"
#include "bmlab/quadrature.hpp"
#include "bmlab/weights.hpp"

namespace bm {

enum class Regime { finite_r, infinite_r };

// Exponents of M_p^{t,r}: either 1 <= p < t < r < ∞ or 1 <= p <= t, r = ∞.
struct SpaceParams {
  double p = 1.0;
  double t = 2.0;
  double r = kInf;

  Regime regime() const;  // throws ConfigError when neither regime holds
  bool infinite_r() const { return r == kInf; }
  void validate() const { (void)regime(); }
};

// W(Q) for every window cube, computed once per (weight, window, quadrature).
class MassTable {
 public:
  static std::shared_ptr<const MassTable> get(const Weight& w, const LatticeWindow& win, const QuadratureSpec& q);
  const LatticeIntegrals& integrals() const { return integrals_; }
  double mass(int j, std::size_t index) const { return integrals_.layer(j).values[index]; }

  explicit MassTable(LatticeIntegrals li) : integrals_(std::move(li)) {}

 private:
  LatticeIntegrals integrals_;
};

struct NormOptions {
  // A layer "contributes nothing" when its share of the total is below this.
  double window_tol = 1e-3;
  // Keep every nonzero cube term (for CSV output).
  bool keep_terms = false;
  // Replacement for W(Q), e.g. ‖A_Q‖^p |Q| for the reducing-operator variant.
  std::function<double(const DyadicIndex&)> mass_override;
};

struct ScaleEntry {
  int j = 0;
  double partial = 0.0;   // Σ_k T^r (finite r) or max_k T (r = ∞)
  double max_term = 0.0;
  std::size_t cubes = 0;  // window cubes at this scale
};

struct CubeTerm {
  DyadicIndex cube;
  double term = 0.0;
};

struct NormReport {
  double value = 0.0;
  std::vector<ScaleEntry> per_scale;  // ascending j
  double tail_estimate = 0.0;         // extrapolated missing mass beyond the window (added to value)
  LatticeWindow window;
  SpaceParams params;
  bool converged = false;             // both edge layer pairs negligible
  bool quadrature_converged = true;
  std::vector<CubeTerm> terms;
};

// Aggregates cube terms T_Q into the ℓ^r norm and the convergence diagnostics.
NormReport aggregate_terms(const LatticeWindow& w, const SpaceParams& params,
                           const std::vector<std::vector<double>>& layer_terms,
                           const std::vector<std::vector<DyadicIndex>>& layer_cubes, const NormOptions& opts);

NormReport bm_norm(const VectorField& f, const Weight& w, const SpaceParams& params, const LatticeWindow& win,
                   const QuadratureSpec& q, const NormOptions& opts = {});
NormReport bm_norm(const VectorField& f, const MatrixWeightSpec& spec, const SpaceParams& params,
                   const LatticeWindow& win, const QuadratureSpec& q, const NormOptions& opts = {});

// Scalar weight ω(x) = ‖W(x)‖, which for d = 1 is the weight itself.
class ScalarWeight {
 public:
  explicit ScalarWeight(Weight base) : base_(std::move(base)) {}
  double operator()(const Point& x) const { return base_.norm(x); }
  const Weight& base() const { return base_; }

 private:
  Weight base_;
};

// Independent evaluation of ‖f‖_{M_p^{t,r}(ω)} for scalar f through |f|^p ω.
NormReport scalar_bm_norm(const VectorField& f, const ScalarWeight& omega, const SpaceParams& params,
                          const LatticeWindow& win, const QuadratureSpec& q, const NormOptions& opts = {});

// (Σ_Q ∫_Q |W^{1/p} f|^p)^{1/p} over pairwise disjoint cubes.
double lp_norm(const VectorField& f, const Weight& w, double p, const std::vector<DyadicIndex>& region,
               const QuadratureSpec& q);
double lp_norm(const VectorField& f, const Weight& w, double p, const Box& region, const QuadratureSpec& q);

// Coarsest-layer cubes of a window; their union contains every window cube.
std::vector<DyadicIndex> window_region(const LatticeWindow& win);

struct SobolevNorm {
  double value = 0.0;
  double function_term = 0.0;  // ‖f‖_{M(ω)}, ω = ‖W‖
  double gradient_term = 0.0;  // ‖∇f‖_{M(W)}
  double step = 0.0;           // finite-difference step (0 when the gradient is analytic)
  bool analytic_gradient = false;
  bool converged = false;
};

// f scalar, W an n×n weight.
SobolevNorm sobolev_norm(const VectorField& f, const Weight& w, const SpaceParams& params, const LatticeWindow& win,
                         const QuadratureSpec& q, double h = 1e-4);

struct EmbeddingCases {
  std::vector<std::pair<SpaceParams, SpaceParams>> r_pairs;  // same p, t; first r < second r
  std::vector<std::pair<SpaceParams, SpaceParams>> p_pairs;  // same t, r; first p < second p
  std::vector<SpaceParams> chain;                            // r = ∞ cases for (iii)
  double slack = 1.01;
};

struct EmbeddingRecord {
  std::string member;
  std::string kind;  // "r_monotone", "p_monotone", "lt_bound", "lp_local"
  SpaceParams params;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct EmbeddingReport {
  std::vector<EmbeddingRecord> records;
  bool all_hold = true;
  double worst_ratio = 0.0;  // max lhs/rhs over records with rhs > 0
};

EmbeddingReport embedding_check(const std::vector<std::pair<std::string, VectorField>>& suite, const Weight& w,
                                const EmbeddingCases& cases, const LatticeWindow& win, const QuadratureSpec& q);

}  // namespace bm
