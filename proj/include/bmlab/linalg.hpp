#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>

#include "bmlab/small_vector.hpp"

namespace bm {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxDim = 8;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

using CVec = SmallVec<Complex, kMaxDim>;
using RVec = SmallVec<double, kMaxDim>;

// Dense complex matrix with at most 8 rows and 8 columns, stored inline.
class CMat {
 public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols);

  static CMat identity(std::size_t d);
  static CMat diagonal(std::span<const double> values);
  static CMat diagonal(std::span<const Complex> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  Complex& operator()(std::size_t i, std::size_t j) { return a_[i * kMaxDim + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return a_[i * kMaxDim + j]; }

  CMat adjoint() const;
  double frobenius_norm() const;

  CMat& operator+=(const CMat& other);
  CMat& operator-=(const CMat& other);
  CMat& operator*=(Complex s);

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(CMat a, Complex s) { return a *= s; }
  friend CMat operator*(Complex s, CMat a) { return a *= s; }
  friend CMat operator*(const CMat& a, const CMat& b);
  friend CVec operator*(const CMat& a, const CVec& v);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::array<Complex, kMaxDim * kMaxDim> a_{};
};

// A = U diag(values) U*, values ascending.
struct EigenPair {
  RVec values;
  CMat basis;
};

bool is_hermitian(const CMat& a, double tol);

// Cyclic complex Jacobi. Throws ConfigError for non-Hermitian input and
// NumericError if the sweep cap is hit.
EigenPair hermitian_eig(const CMat& a);

// U diag(λ^α) U*. Throws NumericError when λ_min ≤ floor·λ_max (not PD).
CMat matrix_power(const CMat& a, double alpha);

// Largest singular value of a (possibly rectangular) matrix.
double spectral_norm(const CMat& a);

// ℓ^q norm on ℂ^d; q = kInf gives the max norm. Throws ConfigError for q < 1.
double vector_norm(std::span<const Complex> x, double q);

// Euclidean norm, the default |·| on ℂ^d.
double euclidean_norm(std::span<const Complex> x);

}  // namespace bm
