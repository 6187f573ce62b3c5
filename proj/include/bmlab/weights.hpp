#pragma once

#include <span>
#include <string>
#include <vector>

#include "bmlab/dyadic.hpp"
#include "bmlab/linalg.hpp"

namespace bm {

enum class WeightFamily { identity, scalar_power, diagonal_power, scalar_table };

std::string to_string(WeightFamily f);
WeightFamily weight_family_from_string(const std::string& s);

// d = 1 weight sampled on a regular grid, multilinear in between and
// clamped to the boundary values outside.
struct ScalarTable {
  Point origin;
  double spacing = 1.0;
  std::vector<int> counts;     // nodes per axis
  std::vector<double> values;  // row-major, last axis fastest
};

// Closed-form matrix weight families:
//   identity           W(x) = I_d
//   scalar_power(γ)    W(x) = |x|^γ I_d
//   diagonal_power     W(x) = U_0 diag(c_i |x|^{γ_i}) U_0*
//   scalar_table       d = 1, W(x) = table(x)
// Power families need γ_i > -n for local integrability and declare the origin singular.
struct MatrixWeightSpec {
  WeightFamily family = WeightFamily::identity;
  int d = 1;
  int n = 1;
  std::vector<double> gammas;        // scalar_power: one entry; diagonal_power: d entries
  std::vector<double> coefficients;  // diagonal_power: d positive entries (empty = all 1)
  CMat conjugator;                   // diagonal_power: unitary U_0 (0×0 = identity)
  ScalarTable table;

  static MatrixWeightSpec identity(int d, int n);
  static MatrixWeightSpec scalar_power(int d, int n, double gamma);
  static MatrixWeightSpec diagonal_power(int n, std::vector<double> gammas, std::vector<double> coefficients = {},
                                         CMat conjugator = {});
  // Constant Hermitian PD weight, stored as its eigendecomposition with γ = 0.
  static MatrixWeightSpec constant(int n, const CMat& w0);
  static MatrixWeightSpec scalar_table(ScalarTable table);

  void validate() const;
  friend bool operator==(const MatrixWeightSpec&, const MatrixWeightSpec&);
};

// Evaluation engine for W^s where W is a spec's weight and s a fixed exponent
// (s = 1 for the weight itself, s = -1/(p-1) for the dual weight). Every family is
// U diag(μ_i(x)) U* with a constant unitary U, which gives closed forms for W^α.
class Weight {
 public:
  explicit Weight(MatrixWeightSpec spec, double exponent = 1.0);

  const MatrixWeightSpec& spec() const { return spec_; }
  double exponent() const { return exponent_; }
  int dim() const { return spec_.d; }
  int ambient() const { return spec_.n; }
  bool is_identity() const { return spec_.family == WeightFamily::identity; }
  // W(x) is diagonal in the standard basis for every x.
  bool is_diagonal() const { return !has_basis_; }

  // W^{-1/(p-1)}, the weight dual to W at exponent p > 1.
  Weight dual(double p) const;

  // Eigenvalues of W(x), in the fixed eigenbasis order (not sorted).
  RVec spectrum(const Point& x) const;
  CMat matrix(const Point& x) const;
  CMat power(const Point& x, double alpha) const;
  CVec apply_power(const Point& x, double alpha, const CVec& v) const;
  // |W^α(x) v|^q without allocating the matrix.
  double power_apply_norm(const Point& x, double alpha, const CVec& v, double q) const;
  // out[i] = |W^α(x) dirs[i]|^q for many vectors sharing one spectrum evaluation.
  void power_apply_norms(const Point& x, double alpha, std::span<const CVec> dirs, double q,
                         std::span<double> out) const;
  double norm(const Point& x) const;           // ‖W(x)‖
  double small_norm(const Point& x) const;     // ‖W(x)^{-1}‖^{-1}
  // ‖W^α(x) W^β(y)‖; the factors commute because they share an eigenbasis.
  double product_norm(const Point& x, double alpha, const Point& y, double beta) const;

  const std::vector<Point>& singular_points() const { return singular_; }
  // ‖W^s(x)‖ is the same constant everywhere (identity or constant weights).
  bool has_constant_norm() const;
  // Exact textual identity of (spec, exponent), used to key memoized tables.
  std::string cache_key() const;

 private:
  double table_value(const Point& x) const;

  MatrixWeightSpec spec_;
  double exponent_ = 1.0;
  bool has_basis_ = false;
  CMat basis_;
  std::vector<Point> singular_;
};

struct WeightPoint {
  CMat w;
  CMat w_inv;
  double small_w = 0.0;  // ‖W^{-1}(x)‖^{-1}
  double big_w = 0.0;    // ‖W(x)‖
};

// Generic-path evaluation through hermitian_eig; throws NumericError at singular points.
WeightPoint eval_weight(const MatrixWeightSpec& spec, const Point& x);

struct EllipticityResult {
  double lhs = 0.0;  // w(x)|ξ|^p
  double mid = 0.0;  // |W^{1/p}(x)ξ|^p
  double rhs = 0.0;  // ‖W(x)‖|ξ|^p
  bool holds = false;
};

EllipticityResult ellipticity_check(const MatrixWeightSpec& spec, double p, const Point& x, const CVec& xi);

}  // namespace bm
