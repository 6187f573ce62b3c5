#include "bmlab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

#include "bmlab/error.hpp"

namespace bm {

void QuadratureSpec::validate() const {
  if (points_per_axis < 1 || points_per_axis > 32) throw ConfigError("quadrature: points_per_axis must be in [1, 32]");
  if (max_depth < 0 || max_depth > 60) throw ConfigError("quadrature: max_depth must be in [0, 60]");
  if (!(rel_tol > 0.0)) throw ConfigError("quadrature: rel_tol must be positive");
  if (grading_ratio != 0.5) throw ConfigError("quadrature: only grading_ratio 0.5 is supported");
  if (max_cells < 1) throw ConfigError("quadrature: max_cells must be positive");
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

namespace {

GaussRule build_rule(int m) {
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(m));
  r.weights.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pm = m == 1 ? x : p1;
      const double pm1 = m == 1 ? 1.0 : p0;
      dp = m * (x * pm - pm1) / (x * x - 1.0);
      const double dx = pm / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(m - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // Absorb the rounding residue into the last weight so that summing the weights
  // in node order gives exactly 2 (constants integrate exactly).
  double partial = 0.0;
  for (int i = 0; i + 1 < m; ++i) partial += r.weights[static_cast<std::size_t>(i)];
  r.weights.back() = 2.0 - partial;
  return r;
}

struct Cell {
  Box box;
  int depth = 0;
  bool singular = false;
  std::vector<double> value;  // refined (children) rule
  std::vector<double> error;
  std::vector<double> abs_value;
  double priority = 0.0;
};

class Integrator {
 public:
  Integrator(const MultiIntegrand& g, std::size_t components, const QuadratureSpec& q, std::span<const Point> singular)
      : g_(g), m_(components), q_(q), singular_(singular), rule_(gauss_legendre(q.points_per_axis)), buf_(components) {}

  // Tensor Gauss rule on one box; accumulates signed and absolute integrals.
  void rule(const Box& b, std::vector<double>& val, std::vector<double>& absval) {
    const std::size_t n = b.dim();
    const std::size_t pts = rule_.nodes.size();
    std::fill(val.begin(), val.end(), 0.0);
    std::fill(absval.begin(), absval.end(), 0.0);
    const double half = 0.5 * b.side;
    const double jac = std::pow(half, static_cast<double>(n));
    SmallVec<std::size_t, kMaxAmbient> idx(n, 0);
    Point x(n);
    while (true) {
      double w = jac;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = b.corner[i] + half * (1.0 + rule_.nodes[idx[i]]);
        w *= rule_.weights[idx[i]];
      }
      std::fill(buf_.begin(), buf_.end(), 0.0);
      g_(x, buf_);
      for (std::size_t c = 0; c < m_; ++c) {
        if (!std::isfinite(buf_[c])) throw NumericError("quadrature: integrand is not finite at a node");
        val[c] += w * buf_[c];
        absval[c] += w * std::abs(buf_[c]);
      }
      std::size_t axis = 0;
      while (axis < n && ++idx[axis] == pts) idx[axis++] = 0;
      if (axis == n) break;
    }
  }

  bool touches_singular(const Box& b) const {
    return std::any_of(singular_.begin(), singular_.end(), [&](const Point& s) {
      return s.size() == b.dim() && b.closure_contains(s);
    });
  }

  std::vector<Box> children(const Box& b) const {
    const std::size_t n = b.dim();
    const double h = 0.5 * b.side;
    std::vector<Box> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      Box c{b.corner, h};
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1U) c.corner[i] += h;
      out.push_back(c);
    }
    return out;
  }

  Cell make_cell(const Box& b, int depth) {
    Cell cell;
    cell.box = b;
    cell.depth = depth;
    cell.singular = touches_singular(b);
    std::vector<double> coarse(m_), coarse_abs(m_), v(m_), a(m_);
    rule(b, coarse, coarse_abs);
    cell.value.assign(m_, 0.0);
    cell.abs_value.assign(m_, 0.0);
    for (const Box& c : children(b)) {
      rule(c, v, a);
      for (std::size_t k = 0; k < m_; ++k) {
        cell.value[k] += v[k];
        cell.abs_value[k] += a[k];
      }
    }
    cell.error.assign(m_, 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      double e = std::abs(cell.value[k] - coarse[k]);
      // A vanishing two-level difference near a singularity is not trustworthy.
      if (cell.singular) e = std::max(e, 1e-3 * cell.abs_value[k]);
      cell.error[k] = e;
    }
    return cell;
  }

  MultiIntegralResult run(const Box& root) {
    std::vector<Cell> cells;
    std::vector<bool> alive;
    cells.push_back(make_cell(root, 0));
    alive.push_back(true);
    std::vector<double> scale = cells[0].abs_value;
    auto set_priority = [&](Cell& c) {
      double pr = 0.0;
      for (std::size_t k = 0; k < m_; ++k)
        if (scale[k] > 0.0) pr = std::max(pr, c.error[k] / scale[k]);
      c.priority = pr;
    };
    set_priority(cells[0]);

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;
    heap.emplace(cells[0].priority, 0);

    std::vector<double> err_total = cells[0].error;
    std::vector<double> abs_total = cells[0].abs_value;
    auto add_cell = [&](const Cell& c, double sign) {
      for (std::size_t k = 0; k < m_; ++k) {
        err_total[k] += sign * c.error[k];
        abs_total[k] += sign * c.abs_value[k];
      }
    };
    auto recompute = [&]() {
      std::fill(err_total.begin(), err_total.end(), 0.0);
      std::fill(abs_total.begin(), abs_total.end(), 0.0);
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (alive[i]) add_cell(cells[i], 1.0);
    };
    // Leaves at the depth cap cannot improve; once the rest is within tolerance we stop.
    std::vector<double> frozen_err(m_, 0.0);
    auto within_tol = [&](bool include_frozen) {
      for (std::size_t k = 0; k < m_; ++k) {
        const double e = include_frozen ? err_total[k] : err_total[k] - frozen_err[k];
        if (e > 0.0 && e > q_.rel_tol * abs_total[k]) return false;
      }
      return true;
    };

    const std::size_t fanout = std::size_t{1} << root.dim();
    std::size_t leaves = 1;
    bool capped = false;
    while (!heap.empty()) {
      if (within_tol(false)) {
        recompute();
        if (within_tol(false)) break;
      }
      const std::size_t top = heap.top().second;
      heap.pop();
      if (cells[top].depth >= q_.max_depth) {
        for (std::size_t k = 0; k < m_; ++k) frozen_err[k] += cells[top].error[k];
        continue;
      }
      if (leaves + fanout - 1 > q_.max_cells) {
        capped = true;
        break;
      }
      alive[top] = false;
      add_cell(cells[top], -1.0);
      const Box parent = cells[top].box;
      const int depth = cells[top].depth + 1;
      for (const Box& kb : children(parent)) {
        cells.push_back(make_cell(kb, depth));
        alive.push_back(true);
        set_priority(cells.back());
        add_cell(cells.back(), 1.0);
        heap.emplace(cells.back().priority, cells.size() - 1);
      }
      leaves += fanout - 1;
    }
    recompute();
    const bool converged = !capped && within_tol(true);

    std::vector<const Cell*> leaf_cells;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (alive[i]) leaf_cells.push_back(&cells[i]);
    std::sort(leaf_cells.begin(), leaf_cells.end(), [](const Cell* a, const Cell* b) {
      if (a->box.corner == b->box.corner) return a->box.side < b->box.side;
      return lex_less(a->box.corner, b->box.corner);
    });
    MultiIntegralResult res;
    res.values.assign(m_, 0.0);
    res.errors.assign(m_, 0.0);
    res.abs_values.assign(m_, 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      CompensatedSum v, e, a;
      for (const Cell* c : leaf_cells) {
        v.add(c->value[k]);
        e.add(c->error[k]);
        a.add(c->abs_value[k]);
      }
      res.values[k] = v.value();
      res.errors[k] = e.value();
      res.abs_values[k] = a.value();
    }
    res.cells_used = leaf_cells.size();
    res.converged = converged;
    return res;
  }

 private:
  const MultiIntegrand& g_;
  std::size_t m_;
  const QuadratureSpec& q_;
  std::span<const Point> singular_;
  const GaussRule& rule_;
  std::vector<double> buf_;
};

}  // namespace

const GaussRule& gauss_legendre(int points) {
  if (points < 1 || points > 32) throw ConfigError("gauss_legendre: points must be in [1, 32]");
  static const std::array<GaussRule, 33> table = [] {
    std::array<GaussRule, 33> t;
    for (int m = 1; m <= 32; ++m) t[static_cast<std::size_t>(m)] = build_rule(m);
    return t;
  }();
  return table[static_cast<std::size_t>(points)];
}

MultiIntegralResult integrate_box(const MultiIntegrand& g, std::size_t components, const Box& box,
                                  const QuadratureSpec& q, std::span<const Point> singular) {
  q.validate();
  if (components == 0) throw ConfigError("integrate_box: need at least one component");
  if (!(box.side > 0.0) || box.dim() == 0) throw ConfigError("integrate_box: empty box");
  Integrator it(g, components, q, singular);
  return it.run(box);
}

IntegralResult integrate_box(const ScalarIntegrand& g, const Box& box, const QuadratureSpec& q,
                             std::span<const Point> singular) {
  const MultiIntegrand wrapped = [&g](const Point& x, std::span<double> out) { out[0] = g(x); };
  const MultiIntegralResult r = integrate_box(wrapped, 1, box, q, singular);
  return {r.values[0], r.errors[0], r.cells_used, r.converged};
}

IntegralResult integrate_cube(const ScalarIntegrand& g, const DyadicIndex& cube, const QuadratureSpec& q,
                              std::span<const Point> singular) {
  return integrate_box(g, to_box(cube), q, singular);
}

}  // namespace bm
