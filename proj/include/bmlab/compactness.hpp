#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmlab/fields.hpp"
#include "bmlab/operators.hpp"
#include "bmlab/spaces.hpp"
#include "bmlab/weights.hpp"

namespace bm {

struct FamilyMember {
  std::string id;
  VectorField field;
};

// A finite, explicitly generated subset of the space.
struct FunctionFamily {
  std::string generator;
  std::vector<FamilyMember> members;

  void validate() const;  // nonempty, unique ids, common (d, n)
  int dim() const;
  int ambient() const;

  static FunctionFamily singleton(const std::string& id, const VectorField& f);
  // τ_{y_k} g for each shift, ids prefix1, prefix2, ...
  static FunctionFamily translates(const VectorField& g, const std::vector<Point>& shifts,
                                   const std::string& prefix = "tau");
  // f χ_{B(0,R_k)} for each radius.
  static FunctionFamily truncations(const VectorField& f, const std::vector<double>& radii,
                                    const std::string& prefix = "trunc");
};

// Partition of R_m = [-2^m, 2^m)^n into the N = 2^{(m+1-a)n} cubes of 𝒟_{-a}.
struct ProjectionSpec {
  int m = 0;
  int a = -1;

  void validate() const;  // a < 0 <= m
  std::size_t cube_count(int n) const;
  Box box(int n) const;
  std::vector<DyadicIndex> cubes(int n) const;
};

// Φ(f): cube means of f on the partition of R_m, zero outside R_m.
VectorField project_phi(const VectorField& f, const ProjectionSpec& ps, const QuadratureSpec& q = {});

enum class NormKind { bourgain_morrey, sobolev };

// Everything needed to measure a member: the norm and its discretization.
struct NormContext {
  Weight weight;
  SpaceParams params;
  LatticeWindow window;
  QuadratureSpec quadrature;
  NormKind kind = NormKind::bourgain_morrey;
  double sobolev_step = 1e-4;
};

struct Measured {
  double value = 0.0;
  bool converged = true;
};
Measured measure(const NormContext& ctx, const VectorField& f);

// Window rule for compactly supported families: radius 4x the support radius,
// scales [-m-2, max(a+6, -a)].
LatticeWindow default_window(const FunctionFamily& family, const ProjectionSpec& ps);

enum class ModulusMode { dyadic_average, translation };
std::string to_string(ModulusMode m);
ModulusMode modulus_mode_from_string(const std::string& s);

struct Schedule {
  std::vector<double> radii;      // tail radii R
  std::vector<int> a_values;      // dyadic averaging scales
  std::vector<double> b_values;   // translation bounds
  std::size_t translation_samples = 8;  // low-discrepancy points in B(0,b), plus 2n axis points
};

// Plateau = last three curve values within plateau_variation of each other and all
// above plateau_factor * tolerance. A curve passes when its last value is <= tolerance.
struct Thresholds {
  double tolerance = 0.025;
  double plateau_variation = 0.2;
  double plateau_factor = 10.0;
  double audit_slack = 0.05;
};

struct CurvePoint {
  double parameter = 0.0;
  double value = 0.0;  // max over members
  std::string argmax;
  bool converged = true;
};

enum class Verdict { certified, condition_ii_fails, condition_iii_fails, inconclusive };
std::string to_string(Verdict v);

struct NetResult {
  bool accepted = false;
  double epsilon = 0.0;
  ProjectionSpec projection;
  double projection_error = 0.0;              // max_f ‖f - Φ f‖
  std::vector<std::string> net_ids;           // centers, in selection order
  std::vector<std::string> assigned;          // per member (member order), its center id
  std::vector<double> projected_distance;     // ‖Φ f - Φ f_k‖
  std::vector<double> audit_distance;         // ‖f - Φ f_k‖, measured directly
  double audit_max = 0.0;
  bool audit_passed = false;
  std::map<double, std::size_t> net_sizes;    // every requested ε with a valid precondition
};

struct CompactnessReport {
  std::vector<std::pair<std::string, double>> member_norms;
  double bound_sup = 0.0;
  bool bounded = true;
  std::vector<CurvePoint> tail_curve;     // R ascending
  std::vector<CurvePoint> modulus_curve;  // a descending, or b descending
  ModulusMode mode = ModulusMode::dyadic_average;
  std::vector<Point> translation_shifts;  // the sampled y for the largest b
  Thresholds thresholds;
  bool tail_passes = false;
  bool tail_plateau = false;
  bool modulus_passes = false;
  bool modulus_plateau = false;
  double phi_distance = 0.0;
  std::map<double, std::size_t> net_sizes;
  std::optional<NetResult> net;
  std::optional<std::size_t> direct_net_size;  // greedy net on raw member distances
  bool necessity_consistent = true;
  bool iff_applicable = true;  // finite r; r = ∞ carries sufficiency only
  Verdict verdict = Verdict::inconclusive;
  std::string evidence;
  std::string schedule_label;  // "certified at schedule ..."
};

CompactnessReport check_conditions(const FunctionFamily& family, const NormContext& ctx, const Schedule& schedule,
                                   ModulusMode mode, const Thresholds& thresholds = {});

// Greedy farthest-point cover at the given radius; ties broken by position (ids
// are pre-sorted). Returns the selected indices.
std::vector<std::size_t> greedy_net(const std::vector<std::vector<double>>& dist, double radius);

NetResult epsilon_net(const FunctionFamily& family, const NormContext& ctx, const ProjectionSpec& ps, double epsilon,
                      const std::vector<double>& extra_epsilons = {}, double audit_slack = 0.05);

struct CertifyOptions {
  double epsilon = 0.1;
  std::vector<double> extra_epsilons;
  // Nonpositive: use epsilon / 4 (half of the ε/2 projection budget for each of tail and modulus).
  double tolerance = 0.0;
  double plateau_variation = 0.2;
  double plateau_factor = 10.0;
  double audit_slack = 0.05;
};

CompactnessReport certify(const FunctionFamily& family, const NormContext& ctx, const Schedule& schedule,
                          const CertifyOptions& opts = {});

struct WindowNorm {
  LatticeWindow window;
  double value = 0.0;
  bool converged = true;
};

struct LowerBoundRow {
  int j = 0;
  double x1 = 0.0;
  double s = 0.0;
  double lower_bound = 0.0;   // the ball quantity
  double dyadic_term = 0.0;   // T_Q on the 𝒟_{2-j} cube containing x; any single term bounds the norm below
  bool converged = true;
};

struct CounterexampleReport {
  int n = 1;
  double p = 1.0;
  double t = 2.0;
  std::vector<WindowNorm> norms;
  double norm_variation = 0.0;
  bool norm_stable = false;
  std::vector<LowerBoundRow> lower_bounds;
  double c = 0.0;         // min ball lower bound
  double c_dyadic = 0.0;  // min dyadic term
  double lower_bound_variation = 0.0;
  bool lower_bounds_stable = false;
};

// f = |x|^{-n/t} in M_p^{t,∞}: windowed norms and ball lower bounds on ‖f - f χ_{B(0,2^j)}‖.
CounterexampleReport counterexample_remark(int n, double p, double t, const std::vector<int>& j_values,
                                           const std::vector<LatticeWindow>& windows, const QuadratureSpec& q);

// |B(x,s)|^{1/t-1/p} (∫_{B(x,s)} |f|^p)^{1/p} with x = (x1, 0, ..., 0).
double ball_lower_bound(const VectorField& f, int n, double p, double t, double x1, double s, const QuadratureSpec& q,
                        bool* converged = nullptr);

}  // namespace bm
