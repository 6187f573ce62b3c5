#include "bmlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmlab/error.hpp"

namespace bm {

namespace {

// exp(-t) underflows to exactly zero for t > 745, so a bump vanishes beyond 28 scales.
constexpr double kBumpReach = 28.0;

std::shared_ptr<FieldNode> make(FieldKind kind, int d, int n) {
  if (d < 1 || static_cast<std::size_t>(d) > kMaxDim) throw ConfigError("field: d must be in [1, 8]");
  if (n < 1 || static_cast<std::size_t>(n) > kMaxAmbient) throw ConfigError("field: n must be in [1, 4]");
  auto node = std::make_shared<FieldNode>();
  node->kind = kind;
  node->d = d;
  node->n = n;
  return node;
}

Bounds empty_bounds(int n) {
  const auto sz = static_cast<std::size_t>(n);
  return {Point(sz, kInf), Point(sz, -kInf)};
}

double norm2(const Point& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::zero: return "zero";
    case FieldKind::constant: return "constant";
    case FieldKind::gaussian_bump: return "gaussian_bump";
    case FieldKind::gaussian_gradient: return "gaussian_gradient";
    case FieldKind::power_tail: return "power_tail";
    case FieldKind::affine: return "affine";
    case FieldKind::piecewise_constant: return "piecewise_constant";
    case FieldKind::translate: return "translate";
    case FieldKind::ball_truncation: return "ball_truncation";
    case FieldKind::linear_combination: return "linear_combination";
    case FieldKind::fd_gradient: return "fd_gradient";
  }
  return "unknown";
}

bool Bounds::intersects(const Box& b) const {
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (!(lo[i] < b.corner[i] + b.side && hi[i] >= b.corner[i])) return false;
  return true;
}

Bounds Bounds::of(const Box& b) {
  Bounds out{b.corner, b.corner};
  for (auto& v : out.hi) v += b.side;
  return out;
}

Bounds Bounds::united(const Bounds& other) const {
  Bounds out = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    out.lo[i] = std::min(lo[i], other.lo[i]);
    out.hi[i] = std::max(hi[i], other.hi[i]);
  }
  return out;
}

VectorField VectorField::zero(int d, int n) { return VectorField(make(FieldKind::zero, d, n)); }

VectorField VectorField::constant(int n, const CVec& value) {
  auto node = make(FieldKind::constant, static_cast<int>(value.size()), n);
  node->vec = value;
  return VectorField(node);
}

VectorField VectorField::gaussian_bump(const Point& center, double scale, const CVec& direction) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("gaussian_bump: scale must be positive");
  auto node = make(FieldKind::gaussian_bump, static_cast<int>(direction.size()), static_cast<int>(center.size()));
  node->center = center;
  node->scale = scale;
  node->vec = direction;
  return VectorField(node);
}

VectorField VectorField::power_tail(int n, double exponent, const CVec& direction) {
  if (!std::isfinite(exponent)) throw ConfigError("power_tail: exponent must be finite");
  auto node = make(FieldKind::power_tail, static_cast<int>(direction.size()), n);
  node->exponent = exponent;
  node->vec = direction;
  return VectorField(node);
}

VectorField VectorField::affine(const Point& slope, double offset, const CVec& direction) {
  if (!std::isfinite(offset) || !std::all_of(slope.begin(), slope.end(), [](double v) { return std::isfinite(v); }))
    throw ConfigError("affine: coefficients must be finite");
  auto node = make(FieldKind::affine, static_cast<int>(direction.size()), static_cast<int>(slope.size()));
  node->slope = slope;
  node->offset = offset;
  node->vec = direction;
  return VectorField(node);
}

VectorField VectorField::piecewise_constant(int d, int n, int scale, CubeValues values, std::optional<Box> coverage) {
  if (std::abs(scale) > kMaxScale) throw ConfigError("piecewise_constant: scale out of range");
  auto node = make(FieldKind::piecewise_constant, d, n);
  for (const auto& [k, v] : values)
    if (k.size() != static_cast<std::size_t>(n) || v.size() != static_cast<std::size_t>(d))
      throw ConfigError("piecewise_constant: entry dimension mismatch");
  node->cube_scale = scale;
  node->values = std::move(values);
  node->coverage = coverage;
  return VectorField(node);
}

VectorField VectorField::indicator(const DyadicIndex& cube, const CVec& value) {
  CubeValues values;
  values.emplace(cube.k, value);
  return piecewise_constant(static_cast<int>(value.size()), static_cast<int>(cube.dim()), cube.j, std::move(values));
}

VectorField VectorField::linear_combination(const std::vector<std::pair<Complex, VectorField>>& terms) {
  if (terms.empty()) throw ConfigError("linear_combination: no terms");
  const int d = terms.front().second.dim();
  const int n = terms.front().second.ambient();
  auto node = make(FieldKind::linear_combination, d, n);
  for (const auto& [c, f] : terms) {
    if (f.dim() != d || f.ambient() != n) throw ConfigError("linear_combination: dimension mismatch");
    if (f.kind() == FieldKind::linear_combination) {
      for (const auto& [c2, g] : f.node().terms) node->terms.emplace_back(c * c2, g);
    } else {
      node->terms.emplace_back(c, f);
    }
  }
  return VectorField(node);
}

VectorField VectorField::translated(const Point& y) const {
  if (y.size() != static_cast<std::size_t>(ambient())) throw ConfigError("translate: shift dimension mismatch");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) return *this;
  if (kind() == FieldKind::zero || kind() == FieldKind::constant) return *this;
  if (kind() == FieldKind::translate) {
    Point total = node_->center;
    for (std::size_t i = 0; i < y.size(); ++i) total[i] += y[i];
    return node_->child->translated(total);
  }
  auto node = make(FieldKind::translate, dim(), ambient());
  node->center = y;
  node->child = *this;
  return VectorField(node);
}

VectorField VectorField::ball_truncated(double radius, bool inside) const {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ConfigError("ball_truncation: radius must be finite and >= 0");
  auto node = make(FieldKind::ball_truncation, dim(), ambient());
  node->radius = radius;
  node->inside = inside;
  node->child = *this;
  return VectorField(node);
}

VectorField VectorField::scaled(Complex s) const { return linear_combination({{s, *this}}); }

VectorField operator+(const VectorField& a, const VectorField& b) {
  return VectorField::linear_combination({{1.0, a}, {1.0, b}});
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  return VectorField::linear_combination({{1.0, a}, {-1.0, b}});
}

bool VectorField::has_analytic_gradient() const {
  switch (kind()) {
    case FieldKind::zero:
    case FieldKind::constant:
    case FieldKind::affine:
    case FieldKind::gaussian_bump: return true;
    case FieldKind::translate: return node_->child->has_analytic_gradient();
    case FieldKind::linear_combination:
      return std::all_of(node_->terms.begin(), node_->terms.end(),
                         [](const auto& t) { return t.second.has_analytic_gradient(); });
    default: return false;
  }
}

VectorField VectorField::finite_difference_gradient(double h) const {
  if (dim() != 1) throw ConfigError("gradient: only scalar (d = 1) fields have a gradient here");
  if (!(h > 0.0)) throw ConfigError("gradient: step must be positive");
  auto node = make(FieldKind::fd_gradient, ambient(), ambient());
  node->step = h;
  node->child = *this;
  return VectorField(node);
}

VectorField VectorField::gradient(double h) const {
  if (dim() != 1) throw ConfigError("gradient: only scalar (d = 1) fields have a gradient here");
  if (!has_analytic_gradient()) return finite_difference_gradient(h);
  const int n = ambient();
  switch (kind()) {
    case FieldKind::zero:
    case FieldKind::constant: return zero(n, n);
    case FieldKind::affine: {
      CVec g(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = node_->slope[i] * node_->vec[0];
      return constant(n, g);
    }
    case FieldKind::gaussian_bump: {
      auto node = make(FieldKind::gaussian_gradient, n, n);
      node->center = node_->center;
      node->scale = node_->scale;
      node->vec = node_->vec;
      return VectorField(node);
    }
    case FieldKind::translate: return node_->child->gradient(h).translated(node_->center);
    case FieldKind::linear_combination: {
      std::vector<std::pair<Complex, VectorField>> terms;
      for (const auto& [c, f] : node_->terms) terms.emplace_back(c, f.gradient(h));
      return linear_combination(terms);
    }
    default: return finite_difference_gradient(h);
  }
}

int VectorField::dim() const { return node_->d; }
int VectorField::ambient() const { return node_->n; }
FieldKind VectorField::kind() const { return node_->kind; }

CVec VectorField::operator()(const Point& x) const {
  const FieldNode& nd = *node_;
  const auto d = static_cast<std::size_t>(nd.d);
  switch (nd.kind) {
    case FieldKind::zero: return CVec(d, 0.0);
    case FieldKind::constant: return nd.vec;
    case FieldKind::gaussian_bump: {
      double r2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - nd.center[i]) / nd.scale;
        r2 += u * u;
      }
      const double e = std::exp(-r2);
      CVec out = nd.vec;
      for (auto& v : out) v *= e;
      return out;
    }
    case FieldKind::gaussian_gradient: {
      double r2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - nd.center[i]) / nd.scale;
        r2 += u * u;
      }
      const double e = std::exp(-r2);
      CVec out(d);
      for (std::size_t i = 0; i < d; ++i) out[i] = nd.vec[0] * (-2.0 * (x[i] - nd.center[i]) / (nd.scale * nd.scale) * e);
      return out;
    }
    case FieldKind::power_tail: {
      const double f = std::pow(std::sqrt(norm2(x)), nd.exponent);
      CVec out = nd.vec;
      for (auto& v : out) v *= f;
      return out;
    }
    case FieldKind::affine: {
      double s = nd.offset;
      for (std::size_t i = 0; i < x.size(); ++i) s += nd.slope[i] * x[i];
      CVec out = nd.vec;
      for (auto& v : out) v *= s;
      return out;
    }
    case FieldKind::piecewise_constant: {
      if (nd.coverage && !nd.coverage->contains(x))
        throw ConfigError("piecewise-constant field evaluated outside its cached window");
      const DyadicIndex idx = containing_cube(x, nd.cube_scale);
      const auto it = nd.values.find(idx.k);
      return it == nd.values.end() ? CVec(d, 0.0) : it->second;
    }
    case FieldKind::translate: {
      Point y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] -= nd.center[i];
      return (*nd.child)(y);
    }
    case FieldKind::ball_truncation: {
      const bool in_ball = norm2(x) <= nd.radius * nd.radius;
      if (in_ball != nd.inside) return CVec(d, 0.0);
      return (*nd.child)(x);
    }
    case FieldKind::linear_combination: {
      CVec out(d, 0.0);
      for (const auto& [c, f] : nd.terms) {
        const CVec v = f(x);
        for (std::size_t i = 0; i < d; ++i) out[i] += c * v[i];
      }
      return out;
    }
    case FieldKind::fd_gradient: {
      CVec out(d);
      Point y = x;
      for (std::size_t i = 0; i < d; ++i) {
        y[i] = x[i] + nd.step;
        const Complex fp = (*nd.child)(y)[0];
        y[i] = x[i] - nd.step;
        const Complex fm = (*nd.child)(y)[0];
        y[i] = x[i];
        out[i] = (fp - fm) / (2.0 * nd.step);
      }
      return out;
    }
  }
  return CVec(d, 0.0);
}

std::optional<Bounds> VectorField::support() const {
  const FieldNode& nd = *node_;
  const auto n = static_cast<std::size_t>(nd.n);
  switch (nd.kind) {
    case FieldKind::zero: return empty_bounds(nd.n);
    case FieldKind::constant:
      if (std::all_of(nd.vec.begin(), nd.vec.end(), [](Complex v) { return v == 0.0; })) return empty_bounds(nd.n);
      return std::nullopt;
    case FieldKind::power_tail:
    case FieldKind::affine: return std::nullopt;
    case FieldKind::gaussian_bump:
    case FieldKind::gaussian_gradient: {
      Bounds b{nd.center, nd.center};
      for (std::size_t i = 0; i < n; ++i) {
        b.lo[i] -= kBumpReach * nd.scale;
        b.hi[i] += kBumpReach * nd.scale;
      }
      return b;
    }
    case FieldKind::piecewise_constant: {
      Bounds b = empty_bounds(nd.n);
      for (const auto& [k, v] : nd.values) {
        if (std::all_of(v.begin(), v.end(), [](Complex c) { return c == 0.0; })) continue;
        b = b.united(Bounds::of(to_box({nd.cube_scale, k})));
      }
      return b;
    }
    case FieldKind::translate: {
      auto b = nd.child->support();
      if (!b) return b;
      for (std::size_t i = 0; i < n; ++i) {
        b->lo[i] += nd.center[i];
        b->hi[i] += nd.center[i];
      }
      return b;
    }
    case FieldKind::ball_truncation: {
      auto b = nd.child->support();
      if (!nd.inside) return b;
      Bounds ball{Point(n, -nd.radius), Point(n, nd.radius)};
      if (!b) return ball;
      for (std::size_t i = 0; i < n; ++i) {
        b->lo[i] = std::max(b->lo[i], ball.lo[i]);
        b->hi[i] = std::min(b->hi[i], ball.hi[i]);
      }
      return b;
    }
    case FieldKind::linear_combination: {
      Bounds b = empty_bounds(nd.n);
      for (const auto& [c, f] : nd.terms) {
        if (c == 0.0) continue;
        const auto s = f.support();
        if (!s) return std::nullopt;
        b = b.united(*s);
      }
      return b;
    }
    case FieldKind::fd_gradient: {
      auto b = nd.child->support();
      if (!b) return b;
      for (std::size_t i = 0; i < n; ++i) {
        b->lo[i] -= nd.step;
        b->hi[i] += nd.step;
      }
      return b;
    }
  }
  return std::nullopt;
}

std::vector<Point> VectorField::singular_points() const {
  const FieldNode& nd = *node_;
  const auto n = static_cast<std::size_t>(nd.n);
  std::vector<Point> out;
  switch (nd.kind) {
    case FieldKind::power_tail:
      if (nd.exponent < 0.0) out.emplace_back(n, 0.0);
      break;
    case FieldKind::translate:
      for (Point p : nd.child->singular_points()) {
        for (std::size_t i = 0; i < n; ++i) p[i] += nd.center[i];
        out.push_back(p);
      }
      break;
    case FieldKind::ball_truncation:
      out = nd.child->singular_points();
      // In one dimension the sphere is two points, and the jump there is worth grading toward.
      if (n == 1) {
        out.push_back(Point{-nd.radius});
        out.push_back(Point{nd.radius});
      }
      break;
    case FieldKind::linear_combination:
      for (const auto& [c, f] : nd.terms) {
        if (c == 0.0) continue;
        for (const Point& p : f.singular_points()) out.push_back(p);
      }
      break;
    case FieldKind::fd_gradient: out = nd.child->singular_points(); break;
    default: break;
  }
  std::sort(out.begin(), out.end(), [](const Point& a, const Point& b) { return lex_less(a, b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string VectorField::describe() const {
  const FieldNode& nd = *node_;
  std::ostringstream os;
  os << to_string(nd.kind);
  switch (nd.kind) {
    case FieldKind::gaussian_bump:
    case FieldKind::gaussian_gradient: os << "(scale=" << nd.scale << ")"; break;
    case FieldKind::power_tail: os << "(exponent=" << nd.exponent << ")"; break;
    case FieldKind::piecewise_constant: os << "(scale=" << nd.cube_scale << ", cubes=" << nd.values.size() << ")"; break;
    case FieldKind::translate: os << "[" << nd.child->describe() << "]"; break;
    case FieldKind::ball_truncation:
      os << "(R=" << nd.radius << (nd.inside ? ", inside" : ", outside") << ")[" << nd.child->describe() << "]";
      break;
    case FieldKind::linear_combination: os << "(terms=" << nd.terms.size() << ")"; break;
    case FieldKind::fd_gradient: os << "(h=" << nd.step << ")[" << nd.child->describe() << "]"; break;
    default: break;
  }
  return os.str();
}

}  // namespace bm
