#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bmlab/dyadic.hpp"
#include "bmlab/linalg.hpp"

// Hand-rolled generators for property tests. Every generator is driven by an
// explicit seed so failures reproduce.
namespace gen {

using bm::CMat;
using bm::Complex;
using bm::CVec;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int integer(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline CVec cvec(std::mt19937_64& g, std::size_t d) {
  CVec v(d);
  for (auto& z : v) z = Complex(uniform(g, -1, 1), uniform(g, -1, 1));
  return v;
}

inline CMat matrix(std::mt19937_64& g, std::size_t d) {
  CMat m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = Complex(uniform(g, -1, 1), uniform(g, -1, 1));
  return m;
}

inline CMat hermitian(std::mt19937_64& g, std::size_t d) {
  const CMat m = matrix(g, d);
  return (m + m.adjoint()) * Complex(0.5);
}

// B B* + shift I: spectrum bounded below by shift.
inline CMat spd(std::mt19937_64& g, std::size_t d, double shift = 0.1) {
  const CMat b = matrix(g, d);
  return b * b.adjoint() + CMat::identity(d) * Complex(shift);
}

inline CMat unitary(std::mt19937_64& g, std::size_t d) {
  // Gram-Schmidt on random columns.
  CMat m = matrix(g, d);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      Complex dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += std::conj(m(i, prev)) * m(i, c);
      for (std::size_t i = 0; i < d; ++i) m(i, c) -= dot * m(i, prev);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < d; ++i) nrm += std::norm(m(i, c));
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < d; ++i) m(i, c) /= nrm;
  }
  return m;
}

inline bm::Point point(std::mt19937_64& g, std::size_t n, double lo, double hi) {
  bm::Point x(n);
  for (auto& c : x) c = uniform(g, lo, hi);
  return x;
}

inline bm::DyadicIndex cube(std::mt19937_64& g, std::size_t n, int j_lo, int j_hi, int k_range) {
  bm::DyadicIndex c;
  c.j = integer(g, j_lo, j_hi);
  for (std::size_t i = 0; i < n; ++i) c.k.push_back(integer(g, -k_range, k_range));
  return c;
}

}  // namespace gen

inline double max_abs_diff(const bm::CMat& a, const bm::CMat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}
