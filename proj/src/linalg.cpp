#include "bmlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bmlab/error.hpp"
#include "bmlab/numeric_policy.hpp"

namespace bm {

CMat::CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows > kMaxDim || cols > kMaxDim) throw ConfigError("matrix dimension exceeds " + std::to_string(kMaxDim));
}

CMat CMat::identity(std::size_t d) {
  CMat m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::diagonal(std::span<const double> values) {
  CMat m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

CMat CMat::diagonal(std::span<const Complex> values) {
  CMat m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

CMat CMat::adjoint() const {
  CMat out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

double CMat::frobenius_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) s += std::norm((*this)(i, j));
  return std::sqrt(s);
}

CMat& CMat::operator+=(const CMat& other) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) += other(i, j);
  return *this;
}

CMat& CMat::operator-=(const CMat& other) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) -= other(i, j);
  return *this;
}

CMat& CMat::operator*=(Complex s) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) *= s;
  return *this;
}

CMat operator*(const CMat& a, const CMat& b) {
  if (a.cols_ != b.rows_) throw ConfigError("matrix product: shape mismatch");
  CMat out(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Complex aik = a(i, k);
      for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

CVec operator*(const CMat& a, const CVec& v) {
  if (a.cols_ != v.size()) throw ConfigError("matrix-vector product: shape mismatch");
  CVec out(a.rows_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    Complex s = 0.0;
    for (std::size_t k = 0; k < a.cols_; ++k) s += a(i, k) * v[k];
    out[i] = s;
  }
  return out;
}

bool is_hermitian(const CMat& a, double tol) {
  if (!a.square()) return false;
  return (a - a.adjoint()).frobenius_norm() <= tol * a.frobenius_norm();
}

EigenPair hermitian_eig(const CMat& input) {
  if (!input.square()) throw ConfigError("hermitian_eig: matrix is not square");
  const std::size_t d = input.rows();
  const double scale = input.frobenius_norm();
  if (!std::isfinite(scale)) throw NumericError("hermitian_eig: non-finite entries");
  const double residual = (input - input.adjoint()).frobenius_norm();
  if (residual > kNumericPolicy.hermitian_tol * scale)
    throw ConfigError("hermitian_eig: input is not Hermitian (residual " + std::to_string(residual) + ")");

  // Work on the exactly Hermitian part.
  CMat a = input + input.adjoint();
  a *= 0.5;
  CMat u = CMat::identity(d);

  auto off_mass = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) s += std::norm(a(p, q));
    return s;
  };
  const double total = scale * scale;

  int sweep = 0;
  while (off_mass() > kNumericPolicy.jacobi_tol * total && total > 0.0) {
    if (++sweep > kNumericPolicy.jacobi_max_sweeps) throw NumericError("hermitian_eig: Jacobi sweeps did not converge");
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const Complex apq = a(p, q);
        const double g = std::abs(apq);
        if (g == 0.0) continue;
        // V = D·J: the phase D makes a_pq real, J is the real rotation that kills it.
        const Complex phase = apq / g;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * g);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex vpp = c;
        const Complex vpq = s;
        const Complex vqp = -s * std::conj(phase);
        const Complex vqq = c * std::conj(phase);
        for (std::size_t k = 0; k < d; ++k) {  // A ← A V
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * vpp + akq * vqp;
          a(k, q) = akp * vpq + akq * vqq;
        }
        for (std::size_t k = 0; k < d; ++k) {  // A ← V* A
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(vpp) * apk + std::conj(vqp) * aqk;
          a(q, k) = std::conj(vpq) * apk + std::conj(vqq) * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {  // U ← U V
          const Complex ukp = u(k, p);
          const Complex ukq = u(k, q);
          u(k, p) = ukp * vpp + ukq * vqp;
          u(k, q) = ukp * vpq + ukq * vqq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::array<std::size_t, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d), std::size_t{0});
  std::stable_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigenPair out{RVec(d), CMat(d, d)};
  for (std::size_t i = 0; i < d; ++i) {
    out.values[i] = a(order[i], order[i]).real();
    for (std::size_t k = 0; k < d; ++k) out.basis(k, i) = u(k, order[i]);
  }
  return out;
}

CMat matrix_power(const CMat& a, double alpha) {
  const EigenPair eig = hermitian_eig(a);
  const std::size_t d = a.rows();
  if (d == 0) return a;
  const double lmax = eig.values[d - 1];
  const double lmin = eig.values[0];
  if (!(lmin > 0.0) || lmin <= kNumericPolicy.eigen_floor * lmax)
    throw NumericError("matrix_power: matrix is not positive definite (λ_min = " + std::to_string(lmin) + ")");
  RVec powered(d);
  for (std::size_t i = 0; i < d; ++i) powered[i] = std::pow(eig.values[i], alpha);
  return eig.basis * CMat::diagonal(powered.span()) * eig.basis.adjoint();
}

double spectral_norm(const CMat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const CMat gram = a.cols() <= a.rows() ? a.adjoint() * a : a * a.adjoint();
  const EigenPair eig = hermitian_eig(gram);
  return std::sqrt(std::max(0.0, eig.values[eig.values.size() - 1]));
}

double vector_norm(std::span<const Complex> x, double q) {
  if (!(q >= 1.0)) throw ConfigError("vector_norm: exponent must be >= 1");
  if (q == kInf) {
    double m = 0.0;
    for (const auto& v : x) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (const auto& v : x) s += std::pow(std::abs(v), q);
  return std::pow(s, 1.0 / q);
}

double euclidean_norm(std::span<const Complex> x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace bm
