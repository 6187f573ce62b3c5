#include "bmlab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bmlab/compactness.hpp"
#include "bmlab/error.hpp"
#include "bmlab/integrals.hpp"
#include "bmlab/operators.hpp"
#include "bmlab/parallel.hpp"
#include "bmlab/reducing.hpp"
#include "bmlab/spaces.hpp"

#ifndef BMLAB_VERSION
#define BMLAB_VERSION "unknown"
#endif

namespace bm {

std::string version_string() { return BMLAB_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return Json(v).dump();
}

std::string canonical_json(const Json& j) { return j.dump(2) + "\n"; }

std::string csv_text(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

void emit_report(const ScenarioOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << text;
    if (!f) throw Error("write failed for " + (dir / name).string());
  };
  write("report.json", canonical_json(out.report));
  for (const auto& c : out.curves) write(c.name, csv_text(c));
}

namespace {

// ---- JSON helpers --------------------------------------------------------------

Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

// Reads one config object, records every value it resolves (defaults included),
// and rejects keys nobody asked for.
class Node {
 public:
  Node(const Json& in, Json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) fail("expected an object");
    if (!out_.is_object()) out_ = Json::object();
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key = "") const {
    throw ConfigError("config " + (key.empty() ? path_ : path_ + "." + key) + ": " + msg);
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  const Json& raw(const std::string& key) {
    if (!has(key)) fail("missing required key", key);
    used_.insert(key);
    out_[key] = in_.at(key);
    return in_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (!def) fail("missing required number", key);
      out_[key] = num(*def);
      return *def;
    }
    const Json& v = in_.at(key);
    double x = 0.0;
    if (v.is_number()) {
      x = v.get<double>();
    } else if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
      x = kInf;
    } else {
      fail("expected a number", key);
    }
    out_[key] = num(x);
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (!def) fail("missing required integer", key);
      out_[key] = *def;
      return *def;
    }
    const Json& v = in_.at(key);
    if (!v.is_number_integer()) fail("expected an integer", key);
    out_[key] = v;
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t def) {
    used_.insert(key);
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const Json& v = in_.at(key);
    if (!v.is_number_unsigned()) fail("expected a nonnegative integer", key);
    out_[key] = v;
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    used_.insert(key);
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    if (!in_.at(key).is_boolean()) fail("expected a boolean", key);
    out_[key] = in_.at(key);
    return in_.at(key).get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (!def) fail("missing required string", key);
      out_[key] = *def;
      return *def;
    }
    if (!in_.at(key).is_string()) fail("expected a string", key);
    out_[key] = in_.at(key);
    return in_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (!def) fail("missing required array", key);
      Json arr = Json::array();
      for (double x : *def) arr.push_back(num(x));
      out_[key] = arr;
      return *def;
    }
    const Json& v = in_.at(key);
    if (!v.is_array()) fail("expected an array of numbers", key);
    std::vector<double> xs;
    for (const Json& e : v) {
      if (!e.is_number()) fail("expected an array of numbers", key);
      xs.push_back(e.get<double>());
    }
    out_[key] = v;
    return xs;
  }

  std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> def = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (!def) fail("missing required array", key);
      out_[key] = *def;
      return *def;
    }
    const Json& v = in_.at(key);
    if (!v.is_array()) fail("expected an array of integers", key);
    std::vector<int> xs;
    for (const Json& e : v) {
      if (!e.is_number_integer()) fail("expected an array of integers", key);
      xs.push_back(e.get<int>());
    }
    out_[key] = v;
    return xs;
  }

  // Absent optional sections still get their defaults recorded.
  Node section(const std::string& key) {
    static const Json kEmpty = Json::object();
    used_.insert(key);
    if (!has(key)) return Node(kEmpty, out_[key], path_ + "." + key);
    return Node(in_.at(key), out_[key], path_ + "." + key);
  }

  Node child(const std::string& key) {
    if (!has(key)) fail("missing required object", key);
    used_.insert(key);
    return Node(in_.at(key), out_[key], path_ + "." + key);
  }

  // Child objects of an array-valued key, each resolved in place.
  template <class F>
  void each(const std::string& key, F&& body) {
    if (!has(key)) fail("missing required array", key);
    used_.insert(key);
    const Json& arr = in_.at(key);
    if (!arr.is_array()) fail("expected an array", key);
    out_[key] = Json::array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out_[key].push_back(Json::object());
      Node n(arr[i], out_[key][i], path_ + "." + key + "[" + std::to_string(i) + "]");
      body(n);
      n.finish();
    }
  }

  void record(const std::string& key, Json value) {
    used_.insert(key);
    out_[key] = std::move(value);
  }

  void finish() const {
    for (const auto& [k, v] : in_.items())
      if (!used_.count(k)) fail("unknown key", k);
  }

  const std::string& path() const { return path_; }

 private:
  const Json& in_;
  Json& out_;
  std::string path_;
  std::set<std::string> used_;
};

Complex parse_complex(const Json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError("config " + where + ": expected a number or [re, im]");
}

CVec parse_cvec(Node& node, const std::string& key) {
  const Json& v = node.raw(key);
  if (!v.is_array() || v.empty() || v.size() > kMaxDim) node.fail("expected a nonempty vector (length <= 8)", key);
  CVec out;
  for (const Json& e : v) out.push_back(parse_complex(e, node.path() + "." + key));
  return out;
}

Point parse_point(Node& node, const std::string& key) {
  const std::vector<double> xs = node.numbers(key);
  if (xs.empty() || xs.size() > kMaxAmbient) node.fail("expected a point with 1..4 coordinates", key);
  return Point::from(std::span<const double>(xs));
}

CMat parse_matrix(Node& node, const std::string& key) {
  const Json& v = node.raw(key);
  if (!v.is_array() || v.empty() || v.size() > kMaxDim) node.fail("expected a square matrix", key);
  const std::size_t d = v.size();
  CMat m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!v[i].is_array() || v[i].size() != d) node.fail("expected a square matrix", key);
    for (std::size_t j = 0; j < d; ++j) m(i, j) = parse_complex(v[i][j], node.path() + "." + key);
  }
  return m;
}

Json to_json(const Complex& c) {
  if (c.imag() == 0.0) return num(c.real());
  return Json::array({num(c.real()), num(c.imag())});
}

Json to_json(const CMat& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const Point& p) {
  Json a = Json::array();
  for (double x : p) a.push_back(num(x));
  return a;
}

Json to_json(const LatticeVec& k) {
  Json a = Json::array();
  for (auto x : k) a.push_back(x);
  return a;
}

Json to_json(const Box& b) { return {{"corner", to_json(b.corner)}, {"side", num(b.side)}}; }
Json to_json(const DyadicIndex& c) { return {{"j", c.j}, {"k", to_json(c.k)}}; }
Json to_json(const LatticeWindow& w) {
  return {{"j_min", w.j_min}, {"j_max", w.j_max}, {"spatial_radius", num(w.spatial_radius)}, {"n", w.n}};
}
Json to_json(const SpaceParams& s) { return {{"p", num(s.p)}, {"t", num(s.t)}, {"r", num(s.r)}}; }

std::string k_text(const LatticeVec& k) {
  std::ostringstream os;
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? " " : "") << k[i];
  return os.str();
}

std::string k_hash(const LatticeVec& k) {
  std::string bytes;
  for (auto v : k) bytes.append(reinterpret_cast<const char*>(&v), sizeof v);
  return hex64(fnv1a64(bytes));
}

std::string point_text(const Point& p) {
  std::ostringstream os;
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << format_double(p[i]);
  return os.str();
}

// ---- config sections -------------------------------------------------------------

QuadratureSpec parse_quadrature(Node& root) {
  QuadratureSpec q;
  Node n = root.section("quadrature");
  q.points_per_axis = static_cast<int>(n.integer("points_per_axis", q.points_per_axis));
  q.max_depth = static_cast<int>(n.integer("max_depth", q.max_depth));
  q.rel_tol = n.number("rel_tol", q.rel_tol);
  q.grading_ratio = n.number("grading_ratio", q.grading_ratio);
  q.max_cells = static_cast<std::size_t>(n.integer("max_cells", static_cast<std::int64_t>(q.max_cells)));
  n.finish();
  q.validate();
  return q;
}

MatrixWeightSpec parse_weight(Node n) {
  const std::string fam = n.text("family");
  MatrixWeightSpec spec;
  if (fam == "identity") {
    spec = MatrixWeightSpec::identity(static_cast<int>(n.integer("d", 1)), static_cast<int>(n.integer("n", 1)));
  } else if (fam == "scalar_power") {
    const int d = static_cast<int>(n.integer("d", 1));
    const int nn = static_cast<int>(n.integer("n", 1));
    spec = MatrixWeightSpec::scalar_power(d, nn, n.number("gamma"));
  } else if (fam == "diagonal_power") {
    const int nn = static_cast<int>(n.integer("n", 1));
    const std::vector<double> gammas = n.numbers("gammas");
    const std::vector<double> coeffs = n.numbers("coefficients", std::vector<double>{});
    CMat u;
    if (n.has("conjugator")) u = parse_matrix(n, "conjugator");
    spec = MatrixWeightSpec::diagonal_power(nn, gammas, coeffs, u);
  } else if (fam == "constant") {
    const int nn = static_cast<int>(n.integer("n", 1));
    spec = MatrixWeightSpec::constant(nn, parse_matrix(n, "matrix"));
  } else if (fam == "scalar_table") {
    ScalarTable t;
    t.origin = parse_point(n, "origin");
    t.spacing = n.number("spacing");
    t.counts = n.integers("counts");
    t.values = n.numbers("values");
    spec = MatrixWeightSpec::scalar_table(t);
  } else {
    n.fail("unknown weight family '" + fam + "'", "family");
  }
  n.finish();
  spec.validate();
  return spec;
}

SpaceParams parse_params(Node n) {
  SpaceParams s;
  s.p = n.number("p");
  s.t = n.number("t");
  s.r = n.number("r", kInf);
  n.finish();
  s.validate();
  return s;
}

LatticeWindow parse_window(Node n) {
  LatticeWindow w;
  w.j_min = static_cast<int>(n.integer("j_min"));
  w.j_max = static_cast<int>(n.integer("j_max"));
  w.spatial_radius = n.number("spatial_radius");
  w.n = static_cast<int>(n.integer("n", 1));
  n.finish();
  w.validate();
  return w;
}

MveeOptions parse_mvee(Node& root, std::uint64_t seed) {
  MveeOptions o;
  o.seed = seed;
  if (!root.has("mvee")) return o;
  Node n = root.child("mvee");
  o.tol = n.number("tol", o.tol);
  o.max_iterations = static_cast<std::size_t>(n.integer("max_iterations", static_cast<std::int64_t>(o.max_iterations)));
  o.directions_per_d2 =
      static_cast<std::size_t>(n.integer("directions_per_d2", static_cast<std::int64_t>(o.directions_per_d2)));
  o.accept_gap = n.number("accept_gap", o.accept_gap);
  n.finish();
  return o;
}

VectorField parse_field(Node n);

VectorField parse_field_child(Node& parent, const std::string& key) { return parse_field(parent.child(key)); }

VectorField parse_field(Node n) {
  const std::string kind = n.text("kind");
  VectorField f = VectorField::zero(1, 1);
  if (kind == "zero") {
    f = VectorField::zero(static_cast<int>(n.integer("d", 1)), static_cast<int>(n.integer("n", 1)));
  } else if (kind == "constant") {
    const int nn = static_cast<int>(n.integer("n", 1));
    f = VectorField::constant(nn, parse_cvec(n, "value"));
  } else if (kind == "gaussian_bump") {
    const Point c = parse_point(n, "center");
    const double s = n.number("scale");
    f = VectorField::gaussian_bump(c, s, parse_cvec(n, "direction"));
  } else if (kind == "power_tail") {
    const int nn = static_cast<int>(n.integer("n", 1));
    const double e = n.number("exponent");
    f = VectorField::power_tail(nn, e, parse_cvec(n, "direction"));
  } else if (kind == "affine") {
    const Point g = parse_point(n, "slope");
    const double b = n.number("offset", 0.0);
    f = VectorField::affine(g, b, parse_cvec(n, "direction"));
  } else if (kind == "indicator") {
    DyadicIndex c;
    c.j = static_cast<int>(n.integer("j"));
    for (int k : n.integers("k")) c.k.push_back(k);
    f = VectorField::indicator(c, parse_cvec(n, "value"));
  } else if (kind == "piecewise_constant") {
    const int d = static_cast<int>(n.integer("d", 1));
    const int nn = static_cast<int>(n.integer("n", 1));
    const int scale = static_cast<int>(n.integer("scale"));
    CubeValues values;
    n.each("cubes", [&](Node& c) {
      LatticeVec k;
      for (int v : c.integers("k")) k.push_back(v);
      if (static_cast<int>(k.size()) != nn) c.fail("cube index dimension mismatch", "k");
      values[k] = parse_cvec(c, "value");
    });
    f = VectorField::piecewise_constant(d, nn, scale, std::move(values));
  } else if (kind == "translate") {
    const Point y = parse_point(n, "shift");
    f = translate(parse_field_child(n, "field"), y);
  } else if (kind == "ball_truncation") {
    const double r = n.number("radius");
    const bool inside = n.boolean("inside", true);
    f = parse_field_child(n, "field").ball_truncated(r, inside);
  } else if (kind == "linear_combination") {
    std::vector<std::pair<Complex, VectorField>> terms;
    n.each("terms", [&](Node& t) {
      const Complex c = parse_complex(t.raw("coefficient"), t.path() + ".coefficient");
      terms.emplace_back(c, parse_field_child(t, "field"));
    });
    if (terms.empty()) n.fail("a linear combination needs at least one term", "terms");
    f = VectorField::linear_combination(terms);
  } else {
    n.fail("unknown field kind '" + kind + "'", "kind");
  }
  n.finish();
  return f;
}

FunctionFamily parse_family(Node n) {
  const std::string gen = n.text("generator");
  FunctionFamily fam;
  if (gen == "list") {
    n.each("members", [&](Node& m) {
      const std::string id = m.text("id");
      fam.members.push_back({id, parse_field_child(m, "field")});
    });
    fam.generator = "list";
  } else if (gen == "singleton") {
    const std::string id = n.text("id", std::string("f"));
    fam = FunctionFamily::singleton(id, parse_field_child(n, "field"));
  } else if (gen == "translates") {
    const VectorField g = parse_field_child(n, "field");
    std::vector<Point> shifts;
    n.each("shifts", [&](Node& s) { shifts.push_back(parse_point(s, "y")); });
    fam = FunctionFamily::translates(g, shifts, n.text("prefix", std::string("tau")));
  } else if (gen == "truncations") {
    const VectorField f = parse_field_child(n, "field");
    fam = FunctionFamily::truncations(f, n.numbers("radii"), n.text("prefix", std::string("trunc")));
  } else {
    n.fail("unknown family generator '" + gen + "'", "generator");
  }
  n.finish();
  fam.validate();
  return fam;
}

FieldSuite to_suite(const FunctionFamily& fam) {
  FieldSuite s;
  for (const auto& m : fam.members) s.emplace_back(m.id, m.field);
  return s;
}

DyadicIndex parse_cube(Node& c) {
  DyadicIndex idx;
  idx.j = static_cast<int>(c.integer("j"));
  for (int k : c.integers("k")) idx.k.push_back(k);
  return idx;
}

std::vector<Box> parse_boxes(Node& n, const std::string& key) {
  std::vector<Box> out;
  n.each(key, [&](Node& c) {
    if (c.has("j")) {
      out.push_back(to_box(parse_cube(c)));
    } else {
      Box b;
      b.corner = parse_point(c, "corner");
      b.side = c.number("side");
      if (!(b.side > 0.0)) c.fail("side must be positive", "side");
      out.push_back(b);
    }
  });
  if (out.empty()) n.fail("at least one cube is required", key);
  return out;
}

// ---- tasks -----------------------------------------------------------------------

struct Context {
  Json result = Json::object();
  std::vector<CsvTable> curves;
};

Json norm_report_json(const NormReport& r) {
  Json per = Json::array();
  for (const auto& s : r.per_scale)
    per.push_back({{"j", s.j}, {"partial", num(s.partial)}, {"max_term", num(s.max_term)}, {"cubes", s.cubes}});
  return {{"value", num(r.value)},
          {"tail_estimate", num(r.tail_estimate)},
          {"converged", r.converged},
          {"quadrature_converged", r.quadrature_converged},
          {"window", to_json(r.window)},
          {"params", to_json(r.params)},
          {"per_scale", per}};
}

void task_norm(Node& root, Context& ctx, std::uint64_t seed) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const SpaceParams params = parse_params(root.child("params"));
  const LatticeWindow win = parse_window(root.child("window"));
  const QuadratureSpec q = parse_quadrature(root);
  const VectorField f = parse_field_child(root, "field");
  const std::string variant = root.text("variant", std::string("mass"));
  const MveeOptions mo = parse_mvee(root, seed);
  const Weight w(spec);
  NormOptions opts;
  opts.keep_terms = true;
  if (variant == "reducing") {
    const ReducingMethod m = default_method(w, params.p);
    opts.mass_override = [w, params, q, mo, m](const DyadicIndex& c) {
      const Box b = to_box(c);
      const ReducingOperator r = reducing_operator(w, b, params.p, m, q, mo);
      return std::pow(spectral_norm(r.A), params.p) * b.volume();
    };
  } else if (variant != "mass") {
    root.fail("variant must be 'mass' or 'reducing'", "variant");
  }
  const NormReport rep = bm_norm(f, w, params, win, q, opts);
  ctx.result = norm_report_json(rep);
  ctx.result["variant"] = variant;
  ctx.result["field"] = f.describe();

  CsvTable scales{"per_scale.csv", {"j", "partial", "max_term", "cubes"}, {}};
  for (const auto& s : rep.per_scale)
    scales.rows.push_back({std::to_string(s.j), format_double(s.partial), format_double(s.max_term),
                           std::to_string(s.cubes)});
  CsvTable terms{"terms.csv", {"j", "k_hash", "term"}, {}};
  for (const auto& t : rep.terms)
    terms.rows.push_back({std::to_string(t.cube.j), k_hash(t.cube.k), format_double(t.term)});
  ctx.curves.push_back(std::move(scales));
  ctx.curves.push_back(std::move(terms));
}

void task_reduce(Node& root, Context& ctx, std::uint64_t seed) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const double p = root.number("p");
  if (!(p >= 1.0)) root.fail("p must be >= 1", "p");
  const QuadratureSpec q = parse_quadrature(root);
  const std::string method_name = root.text("method", std::string("auto"));
  const MveeOptions mo = parse_mvee(root, seed);
  const auto verify_dirs = static_cast<std::size_t>(root.integer("verify_directions", 256));
  const Weight w(spec);
  std::vector<DyadicIndex> cubes;
  root.each("cubes", [&](Node& c) { cubes.push_back(parse_cube(c)); });
  if (cubes.empty()) root.fail("at least one cube is required", "cubes");

  Json rows = Json::array();
  CsvTable csv{"reduce.csv", {"j", "k", "method", "c1", "c2", "ratio", "norm_mass_equiv", "converged"}, {}};
  ctx.result["cubes"] = Json::array();
  double worst = 0.0;
  for (const auto& c : cubes) {
    if (static_cast<int>(c.dim()) != spec.n) root.fail("cube dimension does not match the weight", "cubes");
    const Box b = to_box(c);
    const ReducingMethod m = method_name == "auto" ? default_method(w, p) : reducing_method_from_string(method_name);
    const ReducingOperator r = reducing_operator(w, b, p, m, q, mo);
    const ReducingConstants v = verify_reducing(r, w, verify_dirs, q, seed + 1);
    const IntegralResult mass = weight_mass(w, b, q);
    const double equiv = std::pow(spectral_norm(r.A), p) * b.volume() / mass.value;
    const double ratio = r.certified_c2 / r.certified_c1;
    worst = std::max(worst, ratio);
    ctx.result["cubes"].push_back({{"cube", to_json(c)},
                                   {"method", to_string(r.method)},
                                   {"A", to_json(r.A)},
                                   {"certified_c1", num(r.certified_c1)},
                                   {"certified_c2", num(r.certified_c2)},
                                   {"ratio", num(ratio)},
                                   {"verified_c1", num(v.c1)},
                                   {"verified_c2", num(v.c2)},
                                   {"directions", r.directions},
                                   {"iterations", r.iterations},
                                   {"fit_gap", num(r.fit_gap)},
                                   {"converged", r.converged},
                                   {"norm_mass_equiv", num(equiv)}});
    csv.rows.push_back({std::to_string(c.j), k_text(c.k), to_string(r.method), format_double(r.certified_c1),
                        format_double(r.certified_c2), format_double(ratio), format_double(equiv),
                        r.converged ? "1" : "0"});
  }
  ctx.result["worst_ratio"] = num(worst);
  ctx.result["john_bound"] = num(std::sqrt(static_cast<double>(spec.d)));
  ctx.curves.push_back(std::move(csv));
}

Json dimension_json(const DimensionEstimate& d) {
  auto fits = [](const std::vector<DimensionFit>& v) {
    Json a = Json::array();
    for (const auto& f : v) {
      Json lv = Json::array();
      for (double x : f.log2_values) lv.push_back(num(x));
      a.push_back({{"base", to_json(f.base)}, {"log2_values", lv}, {"slope", num(f.slope)},
                   {"residual", num(f.residual)}});
    }
    return a;
  };
  return {{"d_tilde", num(d.d_tilde)},
          {"dual_d_tilde", num(d.dual_d_tilde)},
          {"raw_slope", num(d.raw_slope)},
          {"raw_dual_slope", num(d.raw_dual_slope)},
          {"has_dual", d.has_dual},
          {"beta", num(d.beta)},
          {"regression_residual", num(d.regression_residual)},
          {"fits", fits(d.fits)},
          {"dual_fits", fits(d.dual_fits)}};
}

Json ledger_json(const ExponentLedger& L) {
  return {{"n", L.n},
          {"p", num(L.p)},
          {"t", num(L.t)},
          {"r", num(L.r)},
          {"d_tilde", num(L.d_tilde)},
          {"dual_d_tilde", num(L.dual_d_tilde)},
          {"beta_tilde", num(L.beta_tilde)},
          {"condition_value", num(L.condition_value)},
          {"satisfied", L.satisfied},
          {"equality", L.equality}};
}

void task_apclass(Node& root, Context& ctx, std::uint64_t) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const double p = root.number("p");
  const QuadratureSpec q = parse_quadrature(root);
  const Weight w(spec);

  const std::vector<Box> cubes = parse_boxes(root, "cubes");
  const ApEstimate est = ap_characteristic(w, p, cubes, q);
  Json per = Json::array();
  CsvTable csv{"ap_cubes.csv", {"corner", "side", "value"}, {}};
  for (const auto& v : est.per_cube) {
    per.push_back({{"cube", to_json(v.cube)}, {"value", num(v.value)}, {"converged", v.converged}});
    csv.rows.push_back({point_text(v.cube.corner), format_double(v.cube.side), format_double(v.value)});
  }
  ctx.result["characteristic"] = {{"value", num(est.characteristic)},
                                  {"per_cube", per},
                                  {"cube_family", est.cube_family},
                                  {"ess_sup_rule", est.ess_sup_rule},
                                  {"converged", est.converged}};
  ctx.curves.push_back(std::move(csv));

  const int levels = static_cast<int>(root.integer("excision_levels", 0));
  if (levels > 0) {
    const ExcisionSweep sw = ap_excision_sweep(w, p, levels, q);
    Json vals = Json::array();
    CsvTable ex{"excision.csv", {"level", "value"}, {}};
    for (std::size_t i = 0; i < sw.levels.size(); ++i) {
      vals.push_back({{"level", sw.levels[i]}, {"value", num(sw.values[i])}});
      ex.rows.push_back({std::to_string(sw.levels[i]), format_double(sw.values[i])});
    }
    ctx.result["excision"] = {{"values", vals}, {"growth", num(sw.growth)}, {"monotone", sw.monotone}};
    ctx.curves.push_back(std::move(ex));
  }

  if (root.has("dimension")) {
    Node dn = root.child("dimension");
    const std::vector<Box> bases = parse_boxes(dn, "base_cubes");
    const int i_max = static_cast<int>(dn.integer("i_max", 4));
    dn.finish();
    const DimensionEstimate dims = ap_dimension(w, p, bases, i_max, q);
    ctx.result["dimension"] = dimension_json(dims);
    CsvTable dc{"dimension.csv", {"base_corner", "base_side", "i", "log2_value", "dual"}, {}};
    for (int dual = 0; dual < 2; ++dual)
      for (const auto& f : dual ? dims.dual_fits : dims.fits)
        for (std::size_t i = 0; i < f.log2_values.size(); ++i)
          dc.rows.push_back({point_text(f.base.corner), format_double(f.base.side), std::to_string(i),
                             format_double(f.log2_values[i]), std::to_string(dual)});
    ctx.curves.push_back(std::move(dc));
    if (root.has("params")) {
      const SpaceParams params = parse_params(root.child("params"));
      ctx.result["ledger"] = ledger_json(exponent_ledger(spec.n, params, dims));
    }
  }
}

CsvTable ratio_csv(const std::string& name, const std::vector<RatioRow>& rows) {
  CsvTable t{name, {"family_id", "a", "ratio"}, {}};
  for (const auto& r : rows) t.rows.push_back({r.family_id, std::to_string(r.a), format_double(r.ratio)});
  return t;
}

Json ratio_rows_json(const std::vector<RatioRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"family_id", r.family_id}, {"a", r.a}, {"ratio", num(r.ratio)}, {"converged", r.converged}});
  return a;
}

void task_avgop(Node& root, Context& ctx, std::uint64_t) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const SpaceParams params = parse_params(root.child("params"));
  const LatticeWindow win = parse_window(root.child("window"));
  const QuadratureSpec q = parse_quadrature(root);
  const FunctionFamily fam = parse_family(root.child("family"));
  const std::vector<int> as = root.integers("a_values");
  const Weight w(spec);
  const FieldSuite suite = to_suite(fam);

  ExponentLedger ledger;
  {
    Node ln = root.child("ledger");
    const double dt = ln.number("d_tilde");
    std::optional<double> dual;
    if (ln.has("dual_d_tilde")) dual = ln.number("dual_d_tilde");
    ln.finish();
    ledger = exponent_ledger(spec.n, params, dt, dual);
  }
  ctx.result["ledger"] = ledger_json(ledger);

  const AvgLpReport lp = avg_lp_bound_check(w, params.p, suite, as, win, q);
  Json lp_max = Json::array();
  for (const auto& [a, m] : lp.max_by_a) lp_max.push_back({{"a", a}, {"max_ratio", num(m)}});
  ctx.result["lp"] = {{"rows", ratio_rows_json(lp.rows)},
                      {"max_by_a", lp_max},
                      {"max_ratio", num(lp.max_ratio)},
                      {"growth_flag", lp.growth_flag},
                      {"skipped", lp.skipped}};
  ctx.curves.push_back(ratio_csv("lp_ratios.csv", lp.rows));

  const AvgBmReport bmr = avg_bm_bound_check(w, params, suite, as, ledger, win, q);
  Json cobs = Json::array();
  for (const auto& [a, c] : bmr.c_obs) cobs.push_back({{"a", a}, {"c_obs", num(c)}});
  ctx.result["bm"] = {{"rows", ratio_rows_json(bmr.rows)},
                      {"c_obs", cobs},
                      {"c_obs_max", num(bmr.c_obs_max)},
                      {"tail_variation", num(bmr.tail_variation)},
                      {"stable", bmr.stable},
                      {"label", bmr.label},
                      {"skipped", bmr.skipped}};
  ctx.curves.push_back(ratio_csv("bm_ratios.csv", bmr.rows));

  if (root.has("lebesgue")) {
    Node ln = root.child("lebesgue");
    const VectorField f = parse_field_child(ln, "field");
    std::vector<Point> pts;
    ln.each("points", [&](Node& pn) { pts.push_back(parse_point(pn, "x")); });
    const int j_max = static_cast<int>(ln.integer("j_max", 12));
    ln.finish();
    const LebesgueDiffReport ld = lebesgue_diff_check(w, params.p, f, pts, j_max, q);
    Json curves = Json::array();
    CsvTable lc{"lebesgue.csv", {"point", "j", "error", "weighted_error"}, {}};
    for (std::size_t i = 0; i < ld.curves.size(); ++i) {
      const auto& c = ld.curves[i];
      Json errs = Json::array();
      for (std::size_t s = 0; s < c.errors.size(); ++s) {
        errs.push_back(num(c.errors[s]));
        lc.rows.push_back({point_text(c.x), std::to_string(c.scales[s]), format_double(c.errors[s]),
                           format_double(c.weighted_errors[s])});
      }
      curves.push_back({{"x", to_json(c.x)}, {"errors", errs}, {"slope", num(c.slope)}});
    }
    Json mean = Json::array();
    for (double m : ld.mean_errors) mean.push_back(num(m));
    Json excluded = Json::array();
    for (const auto& x : ld.excluded) excluded.push_back(to_json(x));
    ctx.result["lebesgue"] = {{"curves", curves},
                              {"mean_errors", mean},
                              {"mean_slope", num(ld.mean_slope)},
                              {"mean_ratio", num(ld.mean_ratio)},
                              {"max_final_error", num(ld.max_final_error)},
                              {"excluded", excluded}};
    ctx.curves.push_back(std::move(lc));
  }
}

Json curve_json(const std::vector<CurvePoint>& c) {
  Json a = Json::array();
  for (const auto& p : c)
    a.push_back({{"parameter", num(p.parameter)}, {"value", num(p.value)}, {"argmax", p.argmax},
                 {"converged", p.converged}});
  return a;
}

CsvTable curve_csv(const std::string& name, const std::string& param, const std::vector<CurvePoint>& c) {
  CsvTable t{name, {param, "sup_value", "argmax"}, {}};
  for (const auto& p : c) t.rows.push_back({format_double(p.parameter), format_double(p.value), p.argmax});
  return t;
}

Json net_sizes_json(const std::map<double, std::size_t>& m) {
  Json a = Json::array();
  for (const auto& [e, s] : m) a.push_back({{"epsilon", num(e)}, {"size", s}});
  return a;
}

void task_compactness(Node& root, Context& ctx, std::uint64_t) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const SpaceParams params = parse_params(root.child("params"));
  const QuadratureSpec q = parse_quadrature(root);
  const FunctionFamily fam = parse_family(root.child("family"));

  Schedule sched;
  {
    Node sn = root.child("schedule");
    sched.radii = sn.numbers("radii");
    sched.a_values = sn.integers("a_values", std::vector<int>{});
    sched.b_values = sn.numbers("b_values", std::vector<double>{});
    sched.translation_samples = static_cast<std::size_t>(sn.integer("translation_samples", 8));
    sn.finish();
  }
  LatticeWindow win;
  if (root.has("window")) {
    win = parse_window(root.child("window"));
  } else {
    Node pn = root.child("projection");
    ProjectionSpec ps{static_cast<int>(pn.integer("m")), static_cast<int>(pn.integer("a"))};
    pn.finish();
    win = default_window(fam, ps);
  }
  const std::string mode = root.text("mode", std::string("certify"));
  const std::string norm_kind = root.text("norm", std::string("bourgain_morrey"));
  NormContext nc{Weight(spec), params, win, q};
  if (norm_kind == "sobolev")
    nc.kind = NormKind::sobolev;
  else if (norm_kind != "bourgain_morrey")
    root.fail("norm must be 'bourgain_morrey' or 'sobolev'", "norm");

  CertifyOptions co;
  co.epsilon = root.number("epsilon", co.epsilon);
  co.extra_epsilons = root.numbers("extra_epsilons", std::vector<double>{});
  if (root.has("thresholds")) {
    Node tn = root.child("thresholds");
    co.tolerance = tn.number("tolerance", 0.0);
    co.plateau_variation = tn.number("plateau_variation", co.plateau_variation);
    co.plateau_factor = tn.number("plateau_factor", co.plateau_factor);
    co.audit_slack = tn.number("audit_slack", co.audit_slack);
    tn.finish();
  }
  Thresholds th;
  th.tolerance = co.tolerance > 0.0 ? co.tolerance : co.epsilon / 4.0;
  th.plateau_variation = co.plateau_variation;
  th.plateau_factor = co.plateau_factor;
  th.audit_slack = co.audit_slack;

  CompactnessReport rep;
  if (mode == "certify")
    rep = certify(fam, nc, sched, co);
  else if (mode == "check_dyadic")
    rep = check_conditions(fam, nc, sched, ModulusMode::dyadic_average, th);
  else if (mode == "check_translation")
    rep = check_conditions(fam, nc, sched, ModulusMode::translation, th);
  else
    root.fail("mode must be certify, check_dyadic or check_translation", "mode");

  Json norms = Json::array();
  for (const auto& [id, v] : rep.member_norms) norms.push_back({{"id", id}, {"norm", num(v)}});
  Json shifts = Json::array();
  for (const auto& y : rep.translation_shifts) shifts.push_back(to_json(y));
  Json r = {{"member_norms", norms},
            {"bound_sup", num(rep.bound_sup)},
            {"bounded", rep.bounded},
            {"tail_curve", curve_json(rep.tail_curve)},
            {"modulus_curve", curve_json(rep.modulus_curve)},
            {"modulus_mode", to_string(rep.mode)},
            {"translation_shifts", shifts},
            {"thresholds",
             {{"tolerance", num(rep.thresholds.tolerance)},
              {"plateau_variation", num(rep.thresholds.plateau_variation)},
              {"plateau_factor", num(rep.thresholds.plateau_factor)},
              {"audit_slack", num(rep.thresholds.audit_slack)}}},
            {"tail_passes", rep.tail_passes},
            {"tail_plateau", rep.tail_plateau},
            {"modulus_passes", rep.modulus_passes},
            {"modulus_plateau", rep.modulus_plateau},
            {"phi_distance", num(rep.phi_distance)},
            {"net_sizes", net_sizes_json(rep.net_sizes)},
            {"necessity_consistent", rep.necessity_consistent},
            {"iff_applicable", rep.iff_applicable},
            {"verdict", mode == "certify" ? to_string(rep.verdict) : "curves-only"},
            {"evidence", rep.evidence},
            {"schedule_label", rep.schedule_label},
            {"window", to_json(win)},
            {"generator", fam.generator}};
  if (rep.direct_net_size) r["direct_net_size"] = *rep.direct_net_size;
  if (rep.net) {
    const NetResult& n = *rep.net;
    Json members = Json::array();
    for (std::size_t i = 0; i < n.assigned.size(); ++i)
      members.push_back({{"id", fam.members[i].id},
                         {"center", n.assigned[i]},
                         {"projected_distance", num(n.projected_distance[i])},
                         {"audit_distance", num(n.audit_distance[i])}});
    r["net"] = {{"accepted", n.accepted},
                {"epsilon", num(n.epsilon)},
                {"projection", {{"m", n.projection.m}, {"a", n.projection.a},
                                {"cubes", n.projection.cube_count(fam.ambient())}}},
                {"projection_error", num(n.projection_error)},
                {"net_ids", n.net_ids},
                {"members", members},
                {"audit_max", num(n.audit_max)},
                {"audit_passed", n.audit_passed}};
  }
  ctx.result = r;
  ctx.curves.push_back(curve_csv("tail_curve.csv", "R", rep.tail_curve));
  ctx.curves.push_back(curve_csv("modulus_curve.csv", rep.mode == ModulusMode::translation ? "b" : "a",
                                 rep.modulus_curve));
}

void task_counterexample(Node& root, Context& ctx, std::uint64_t) {
  const int n = static_cast<int>(root.integer("n", 1));
  const double p = root.number("p", 1.0);
  const double t = root.number("t", 2.0);
  const std::vector<int> js = root.integers("j_values", std::vector<int>{1, 2, 3, 4, 5, 6});
  const QuadratureSpec q = parse_quadrature(root);
  std::vector<LatticeWindow> wins;
  if (root.has("windows")) {
    root.each("windows", [&](Node& wn) {
      LatticeWindow w;
      w.j_min = static_cast<int>(wn.integer("j_min"));
      w.j_max = static_cast<int>(wn.integer("j_max"));
      w.spatial_radius = wn.number("spatial_radius");
      w.n = static_cast<int>(wn.integer("n", n));
      w.validate();
      wins.push_back(w);
    });
  } else {
    wins = {{-2, 6, 4.0, n}, {-4, 8, 8.0, n}, {-6, 10, 16.0, n}};
    root.record("windows", [&] {
      Json a = Json::array();
      for (const auto& w : wins) a.push_back(to_json(w));
      return a;
    }());
  }
  const CounterexampleReport rep = counterexample_remark(n, p, t, js, wins, q);
  Json norms = Json::array();
  CsvTable nc{"window_norms.csv", {"j_min", "j_max", "spatial_radius", "norm"}, {}};
  for (const auto& w : rep.norms) {
    norms.push_back({{"window", to_json(w.window)}, {"value", num(w.value)}, {"converged", w.converged}});
    nc.rows.push_back({std::to_string(w.window.j_min), std::to_string(w.window.j_max),
                       format_double(w.window.spatial_radius), format_double(w.value)});
  }
  Json lbs = Json::array();
  CsvTable lc{"lower_bounds.csv", {"j", "x1", "s", "lower_bound", "dyadic_term"}, {}};
  for (const auto& r : rep.lower_bounds) {
    lbs.push_back({{"j", r.j}, {"x1", num(r.x1)}, {"s", num(r.s)}, {"lower_bound", num(r.lower_bound)},
                   {"dyadic_term", num(r.dyadic_term)}, {"converged", r.converged}});
    lc.rows.push_back({std::to_string(r.j), format_double(r.x1), format_double(r.s), format_double(r.lower_bound),
                       format_double(r.dyadic_term)});
  }
  ctx.result = {{"norms", norms},
                {"norm_variation", num(rep.norm_variation)},
                {"norm_stable", rep.norm_stable},
                {"lower_bounds", lbs},
                {"c", num(rep.c)},
                {"c_dyadic", num(rep.c_dyadic)},
                {"lower_bound_variation", num(rep.lower_bound_variation)},
                {"lower_bounds_stable", rep.lower_bounds_stable}};
  ctx.curves.push_back(std::move(nc));
  ctx.curves.push_back(std::move(lc));
}

void task_embeddings(Node& root, Context& ctx, std::uint64_t) {
  const MatrixWeightSpec spec = parse_weight(root.child("weight"));
  const LatticeWindow win = parse_window(root.child("window"));
  const QuadratureSpec q = parse_quadrature(root);
  const FunctionFamily fam = parse_family(root.child("family"));
  EmbeddingCases cases;
  {
    Node cn = root.child("cases");
    auto pairs = [&](const std::string& key, std::vector<std::pair<SpaceParams, SpaceParams>>& out) {
      if (!cn.has(key)) return;
      cn.each(key, [&](Node& pn) {
        out.emplace_back(parse_params(pn.child("lhs")), parse_params(pn.child("rhs")));
      });
    };
    pairs("r_pairs", cases.r_pairs);
    pairs("p_pairs", cases.p_pairs);
    if (cn.has("chain")) cn.each("chain", [&](Node& pn) {
        SpaceParams s;
        s.p = pn.number("p");
        s.t = pn.number("t");
        s.r = pn.number("r", kInf);
        s.validate();
        cases.chain.push_back(s);
      });
    cases.slack = cn.number("slack", cases.slack);
    cn.finish();
  }
  const EmbeddingReport rep = embedding_check(to_suite(fam), Weight(spec), cases, win, q);
  Json recs = Json::array();
  CsvTable csv{"embeddings.csv", {"member", "kind", "p", "t", "r", "lhs", "rhs", "holds"}, {}};
  for (const auto& r : rep.records) {
    recs.push_back({{"member", r.member}, {"kind", r.kind}, {"params", to_json(r.params)}, {"lhs", num(r.lhs)},
                    {"rhs", num(r.rhs)}, {"holds", r.holds}});
    csv.rows.push_back({r.member, r.kind, format_double(r.params.p), format_double(r.params.t),
                        format_double(r.params.r), format_double(r.lhs), format_double(r.rhs),
                        r.holds ? "1" : "0"});
  }
  ctx.result = {{"records", recs}, {"all_hold", rep.all_hold}, {"worst_ratio", num(rep.worst_ratio)}};
  ctx.curves.push_back(std::move(csv));
}

using TaskFn = void (*)(Node&, Context&, std::uint64_t);

const std::map<std::string, TaskFn>& tasks() {
  static const std::map<std::string, TaskFn> t = {
      {"norm", task_norm},           {"reduce", task_reduce},
      {"apclass", task_apclass},     {"avgop", task_avgop},
      {"compactness", task_compactness}, {"counterexample", task_counterexample},
      {"embeddings", task_embeddings}};
  return t;
}

}  // namespace

ScenarioOutput run_scenario(const Json& config, const ScenarioOverrides& overrides) {
  ScenarioOutput out;
  Json resolved = Json::object();
  Context ctx;
  std::string task;
  try {
    if (!config.is_object()) throw ConfigError("config: top level must be an object");
    Json cfg = config;
    if (overrides.task) {
      if (cfg.contains("task") && cfg["task"] != *overrides.task)
        throw ConfigError("config: task '" + cfg["task"].dump() + "' does not match the requested task '" +
                          *overrides.task + "'");
      cfg["task"] = *overrides.task;
    }
    if (overrides.seed) cfg["seed"] = *overrides.seed;
    std::optional<std::size_t> workers = overrides.workers;
    if (cfg.contains("workers")) {
      if (!cfg["workers"].is_number_unsigned() || cfg["workers"].get<std::size_t>() == 0)
        throw ConfigError("config $.workers: expected a positive integer");
      if (!workers) workers = cfg["workers"].get<std::size_t>();
      cfg.erase("workers");
    }
    if (workers) set_worker_count(*workers);
    Node root(cfg, resolved, "$");
    task = root.text("task");
    const auto it = tasks().find(task);
    if (it == tasks().end()) root.fail("unknown task '" + task + "'", "task");
    const std::uint64_t seed = root.unsigned64("seed", 0x5eedULL);
    it->second(root, ctx, seed);
    root.finish();
    out.report["status"] = "ok";
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.report["status"] = "config_error";
    out.report["error"] = e.what();
  } catch (const Json::exception& e) {
    out.exit_code = kExitConfig;
    out.report["status"] = "config_error";
    out.report["error"] = std::string("config: ") + e.what();
  } catch (const NumericError& e) {
    out.exit_code = kExitNumeric;
    out.report["status"] = "numeric_failure";
    out.report["error"] = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitNumeric;
    out.report["status"] = "execution_failure";
    out.report["error"] = e.what();
  }
  out.report["task"] = task;
  out.report["config"] = resolved;
  out.report["config_hash"] = hex64(fnv1a64(resolved.dump()));
  out.report["version"] = version_string();
  out.report["result"] = ctx.result;
  Json files = Json::array();
  for (const auto& c : ctx.curves) files.push_back(c.name);
  out.report["csv_files"] = files;
  out.curves = std::move(ctx.curves);
  return out;
}

}  // namespace bm
