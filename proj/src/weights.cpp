#include "bmlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmlab/error.hpp"
#include "bmlab/numeric_policy.hpp"

namespace bm {

namespace {

double radius(const Point& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

bool is_unitary(const CMat& u) {
  return u.square() && (u * u.adjoint() - CMat::identity(u.rows())).frobenius_norm() <= 1e-10;
}

}  // namespace

std::string to_string(WeightFamily f) {
  switch (f) {
    case WeightFamily::identity: return "identity";
    case WeightFamily::scalar_power: return "scalar_power";
    case WeightFamily::diagonal_power: return "diagonal_power";
    case WeightFamily::scalar_table: return "scalar_table";
  }
  return "unknown";
}

WeightFamily weight_family_from_string(const std::string& s) {
  if (s == "identity") return WeightFamily::identity;
  if (s == "scalar_power") return WeightFamily::scalar_power;
  if (s == "diagonal_power") return WeightFamily::diagonal_power;
  if (s == "scalar_table") return WeightFamily::scalar_table;
  throw ConfigError("unknown weight family '" + s + "'");
}

MatrixWeightSpec MatrixWeightSpec::identity(int d, int n) {
  MatrixWeightSpec s;
  s.family = WeightFamily::identity;
  s.d = d;
  s.n = n;
  s.validate();
  return s;
}

MatrixWeightSpec MatrixWeightSpec::scalar_power(int d, int n, double gamma) {
  MatrixWeightSpec s;
  s.family = WeightFamily::scalar_power;
  s.d = d;
  s.n = n;
  s.gammas = {gamma};
  s.validate();
  return s;
}

MatrixWeightSpec MatrixWeightSpec::diagonal_power(int n, std::vector<double> gammas, std::vector<double> coefficients,
                                                  CMat conjugator) {
  MatrixWeightSpec s;
  s.family = WeightFamily::diagonal_power;
  s.d = static_cast<int>(gammas.size());
  s.n = n;
  s.gammas = std::move(gammas);
  s.coefficients = std::move(coefficients);
  s.conjugator = conjugator;
  s.validate();
  return s;
}

MatrixWeightSpec MatrixWeightSpec::constant(int n, const CMat& w0) {
  const EigenPair eig = hermitian_eig(w0);
  std::vector<double> coeffs(eig.values.begin(), eig.values.end());
  for (double c : coeffs)
    if (!(c > 0.0)) throw ConfigError("constant weight must be positive definite");
  const bool diagonal = [&] {
    for (std::size_t i = 0; i < w0.rows(); ++i)
      for (std::size_t j = 0; j < w0.cols(); ++j)
        if (i != j && w0(i, j) != Complex(0.0)) return false;
    return true;
  }();
  if (diagonal) {
    coeffs.clear();
    for (std::size_t i = 0; i < w0.rows(); ++i) coeffs.push_back(w0(i, i).real());
    return diagonal_power(n, std::vector<double>(w0.rows(), 0.0), coeffs);
  }
  return diagonal_power(n, std::vector<double>(w0.rows(), 0.0), coeffs, eig.basis);
}

MatrixWeightSpec MatrixWeightSpec::scalar_table(ScalarTable table) {
  MatrixWeightSpec s;
  s.family = WeightFamily::scalar_table;
  s.d = 1;
  s.n = static_cast<int>(table.origin.size());
  s.table = std::move(table);
  s.validate();
  return s;
}

void MatrixWeightSpec::validate() const {
  if (d < 1 || static_cast<std::size_t>(d) > kMaxDim) throw ConfigError("weight: d must be in [1, 8]");
  if (n < 1 || static_cast<std::size_t>(n) > kMaxAmbient) throw ConfigError("weight: n must be in [1, 4]");
  auto check_gamma = [&](double g) {
    if (!std::isfinite(g) || !(g > -static_cast<double>(n)))
      throw ConfigError("weight: exponent " + std::to_string(g) + " violates local integrability (gamma > -n)");
  };
  switch (family) {
    case WeightFamily::identity: break;
    case WeightFamily::scalar_power:
      if (gammas.size() != 1) throw ConfigError("scalar_power: exactly one exponent required");
      check_gamma(gammas[0]);
      break;
    case WeightFamily::diagonal_power:
      if (gammas.size() != static_cast<std::size_t>(d)) throw ConfigError("diagonal_power: need d exponents");
      for (double g : gammas) check_gamma(g);
      if (!coefficients.empty()) {
        if (coefficients.size() != static_cast<std::size_t>(d)) throw ConfigError("diagonal_power: need d coefficients");
        for (double c : coefficients)
          if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("diagonal_power: coefficients must be positive");
      }
      if (conjugator.rows() != 0) {
        if (conjugator.rows() != static_cast<std::size_t>(d) || !is_unitary(conjugator))
          throw ConfigError("diagonal_power: conjugator must be a d×d unitary matrix");
      }
      break;
    case WeightFamily::scalar_table: {
      if (d != 1) throw ConfigError("scalar_table: only d = 1 is supported");
      if (table.origin.size() != static_cast<std::size_t>(n) || table.counts.size() != static_cast<std::size_t>(n))
        throw ConfigError("scalar_table: origin and counts must have n entries");
      if (!(table.spacing > 0.0)) throw ConfigError("scalar_table: spacing must be positive");
      std::size_t total = 1;
      for (int c : table.counts) {
        if (c < 2) throw ConfigError("scalar_table: need at least two nodes per axis");
        total *= static_cast<std::size_t>(c);
      }
      if (table.values.size() != total) throw ConfigError("scalar_table: value count does not match grid");
      for (double v : table.values)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("scalar_table: values must be positive and finite");
      break;
    }
  }
}

bool operator==(const MatrixWeightSpec& a, const MatrixWeightSpec& b) {
  auto same_mat = [](const CMat& x, const CMat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j)
        if (x(i, j) != y(i, j)) return false;
    return true;
  };
  return a.family == b.family && a.d == b.d && a.n == b.n && a.gammas == b.gammas &&
         a.coefficients == b.coefficients && same_mat(a.conjugator, b.conjugator) &&
         a.table.origin == b.table.origin && a.table.spacing == b.table.spacing && a.table.counts == b.table.counts &&
         a.table.values == b.table.values;
}

Weight::Weight(MatrixWeightSpec spec, double exponent) : spec_(std::move(spec)), exponent_(exponent) {
  spec_.validate();
  if (!std::isfinite(exponent_)) throw ConfigError("weight exponent must be finite");
  if (spec_.family == WeightFamily::diagonal_power && spec_.conjugator.rows() != 0) {
    has_basis_ = true;
    basis_ = spec_.conjugator;
  }
  const bool power_family =
      spec_.family == WeightFamily::scalar_power || spec_.family == WeightFamily::diagonal_power;
  if (power_family && std::any_of(spec_.gammas.begin(), spec_.gammas.end(), [](double g) { return g != 0.0; }))
    singular_.push_back(Point(static_cast<std::size_t>(spec_.n), 0.0));
}

Weight Weight::dual(double p) const {
  if (!(p > 1.0)) throw ConfigError("dual weight requires p > 1");
  return Weight(spec_, -exponent_ / (p - 1.0));
}

double Weight::table_value(const Point& x) const {
  const auto& t = spec_.table;
  const std::size_t n = t.origin.size();
  SmallVec<std::size_t, kMaxAmbient> base(n);
  SmallVec<double, kMaxAmbient> frac(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::clamp((x[i] - t.origin[i]) / t.spacing, 0.0, static_cast<double>(t.counts[i] - 1));
    auto b = static_cast<std::size_t>(std::floor(u));
    if (b >= static_cast<std::size_t>(t.counts[i] - 1)) b = static_cast<std::size_t>(t.counts[i] - 2);
    base[i] = b;
    frac[i] = u - static_cast<double>(b);
  }
  double value = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double wgt = 1.0;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool up = (mask >> i) & 1U;
      wgt *= up ? frac[i] : 1.0 - frac[i];
      offset = offset * static_cast<std::size_t>(t.counts[i]) + base[i] + (up ? 1 : 0);
    }
    if (wgt != 0.0) value += wgt * t.values[offset];
  }
  return value;
}

RVec Weight::spectrum(const Point& x) const {
  const auto d = static_cast<std::size_t>(spec_.d);
  RVec mu(d, 1.0);
  switch (spec_.family) {
    case WeightFamily::identity: break;
    case WeightFamily::scalar_power: {
      const double v = std::pow(radius(x), spec_.gammas[0] * exponent_);
      for (auto& m : mu) m = v;
      break;
    }
    case WeightFamily::diagonal_power: {
      const double r = radius(x);
      for (std::size_t i = 0; i < d; ++i) {
        const double c = spec_.coefficients.empty() ? 1.0 : spec_.coefficients[i];
        mu[i] = std::pow(c * std::pow(r, spec_.gammas[i]), exponent_);
      }
      break;
    }
    case WeightFamily::scalar_table: mu[0] = std::pow(table_value(x), exponent_); break;
  }
  return mu;
}

CMat Weight::matrix(const Point& x) const { return power(x, 1.0); }

CMat Weight::power(const Point& x, double alpha) const {
  RVec mu = spectrum(x);
  for (auto& m : mu) m = std::pow(m, alpha);
  const CMat diag = CMat::diagonal(mu.span());
  if (!has_basis_) return diag;
  return basis_ * diag * basis_.adjoint();
}

CVec Weight::apply_power(const Point& x, double alpha, const CVec& v) const {
  const RVec mu = spectrum(x);
  if (!has_basis_) {
    CVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::pow(mu[i], alpha) * v[i];
    return out;
  }
  const std::size_t d = v.size();
  CVec coords(d);
  for (std::size_t i = 0; i < d; ++i) {
    Complex s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += std::conj(basis_(k, i)) * v[k];
    coords[i] = std::pow(mu[i], alpha) * s;
  }
  return basis_ * coords;
}

double Weight::power_apply_norm(const Point& x, double alpha, const CVec& v, double q) const {
  const RVec mu = spectrum(x);
  const std::size_t d = v.size();
  // |U diag(μ^α) U* v| = |diag(μ^α) U* v| since U is unitary.
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    Complex c = v[i];
    if (has_basis_) {
      c = 0.0;
      for (std::size_t k = 0; k < d; ++k) c += std::conj(basis_(k, i)) * v[k];
    }
    s += std::pow(mu[i], 2.0 * alpha) * std::norm(c);
  }
  return std::pow(s, 0.5 * q);
}

void Weight::power_apply_norms(const Point& x, double alpha, std::span<const CVec> dirs, double q,
                               std::span<double> out) const {
  const RVec mu = spectrum(x);
  RVec scale(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) scale[i] = std::pow(mu[i], 2.0 * alpha);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const CVec& v = dirs[k];
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      Complex c = v[i];
      if (has_basis_) {
        c = 0.0;
        for (std::size_t m = 0; m < v.size(); ++m) c += std::conj(basis_(m, i)) * v[m];
      }
      s += scale[i] * std::norm(c);
    }
    out[k] = std::pow(s, 0.5 * q);
  }
}

double Weight::norm(const Point& x) const {
  const RVec mu = spectrum(x);
  return *std::max_element(mu.begin(), mu.end());
}

double Weight::small_norm(const Point& x) const {
  const RVec mu = spectrum(x);
  return *std::min_element(mu.begin(), mu.end());
}

double Weight::product_norm(const Point& x, double alpha, const Point& y, double beta) const {
  const RVec mx = spectrum(x);
  const RVec my = spectrum(y);
  double best = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) best = std::max(best, std::pow(mx[i], alpha) * std::pow(my[i], beta));
  return best;
}

bool Weight::has_constant_norm() const {
  switch (spec_.family) {
    case WeightFamily::identity: return true;
    case WeightFamily::scalar_power: return spec_.gammas[0] == 0.0 || exponent_ == 0.0;
    case WeightFamily::diagonal_power:
      return exponent_ == 0.0 || std::all_of(spec_.gammas.begin(), spec_.gammas.end(), [](double g) { return g == 0.0; });
    case WeightFamily::scalar_table: return exponent_ == 0.0;
  }
  return false;
}

std::string Weight::cache_key() const {
  std::ostringstream os;
  os << std::hexfloat << to_string(spec_.family) << '|' << spec_.d << '|' << spec_.n << '|' << exponent_ << '|';
  for (double g : spec_.gammas) os << g << ',';
  os << '|';
  for (double c : spec_.coefficients) os << c << ',';
  os << '|';
  for (std::size_t i = 0; i < spec_.conjugator.rows(); ++i)
    for (std::size_t j = 0; j < spec_.conjugator.cols(); ++j)
      os << spec_.conjugator(i, j).real() << ':' << spec_.conjugator(i, j).imag() << ',';
  os << '|';
  for (double o : spec_.table.origin) os << o << ',';
  os << spec_.table.spacing << '|';
  for (int c : spec_.table.counts) os << c << ',';
  for (double v : spec_.table.values) os << v << ',';
  return os.str();
}

WeightPoint eval_weight(const MatrixWeightSpec& spec, const Point& x) {
  if (x.size() != static_cast<std::size_t>(spec.n)) throw ConfigError("eval_weight: point dimension mismatch");
  const Weight weight(spec);
  for (const auto& s : weight.singular_points())
    if (s == x) throw NumericError("eval_weight: x is a singular point of the weight");
  WeightPoint out;
  out.w = weight.matrix(x);
  for (std::size_t i = 0; i < out.w.rows(); ++i)
    for (std::size_t j = 0; j < out.w.cols(); ++j)
      if (!std::isfinite(out.w(i, j).real()) || !std::isfinite(out.w(i, j).imag()))
        throw NumericError("eval_weight: non-finite weight value");
  out.w_inv = matrix_power(out.w, -1.0);
  out.big_w = spectral_norm(out.w);
  out.small_w = 1.0 / spectral_norm(out.w_inv);
  return out;
}

EllipticityResult ellipticity_check(const MatrixWeightSpec& spec, double p, const Point& x, const CVec& xi) {
  if (!(p >= 1.0)) throw ConfigError("ellipticity_check: p must be >= 1");
  if (xi.size() != static_cast<std::size_t>(spec.d)) throw ConfigError("ellipticity_check: vector dimension mismatch");
  const WeightPoint wp = eval_weight(spec, x);
  const double xi_p = std::pow(euclidean_norm(xi.span()), p);
  const CVec image = matrix_power(wp.w, 1.0 / p) * xi;
  EllipticityResult r;
  r.lhs = wp.small_w * xi_p;
  r.mid = std::pow(euclidean_norm(image.span()), p);
  r.rhs = wp.big_w * xi_p;
  const double slack = kNumericPolicy.ellipticity_slack;
  r.holds = r.lhs <= r.mid * (1.0 + slack) + 1e-300 && r.mid <= r.rhs * (1.0 + slack) + 1e-300;
  return r;
}

}  // namespace bm
