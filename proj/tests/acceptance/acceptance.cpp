// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bmlab/compactness.hpp"
#include "bmlab/error.hpp"
#include "bmlab/integrals.hpp"
#include "bmlab/operators.hpp"
#include "bmlab/parallel.hpp"
#include "bmlab/reducing.hpp"
#include "bmlab/scenario.hpp"
#include "bmlab/spaces.hpp"

using namespace bm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double max_abs_diff(const CMat& a, const CMat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

CMat random_matrix(std::mt19937_64& g, std::size_t d) {
  std::uniform_real_distribution<double> u(-1, 1);
  CMat m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = Complex(u(g), u(g));
  return m;
}

// Weights and cubes shared by the reducing-operator criteria.
struct ReducingCase {
  std::string name;
  MatrixWeightSpec spec;
};

std::vector<ReducingCase> reducing_weights() {
  std::mt19937_64 g(3);
  CMat sym = random_matrix(g, 3);
  sym = sym + sym.adjoint();
  const CMat u3 = hermitian_eig(sym).basis;
  CMat sym2 = random_matrix(g, 2);
  sym2 = sym2 + sym2.adjoint();
  const CMat u2 = hermitian_eig(sym2).basis;
  return {
      {"scalar_power(d=2, 0.5)", MatrixWeightSpec::scalar_power(2, 1, 0.5)},
      {"diagonal_power(0.5,-0.3)", MatrixWeightSpec::diagonal_power(1, {0.5, -0.3})},
      {"diagonal_power(0.8,-0.4) conj", MatrixWeightSpec::diagonal_power(1, {0.8, -0.4}, {1.0, 2.0}, u2)},
      {"diagonal_power(1,0.2,-0.4) conj", MatrixWeightSpec::diagonal_power(1, {1.0, 0.2, -0.4}, {}, u3)},
      {"diagonal_power n=2 (0.6,-0.5)", MatrixWeightSpec::diagonal_power(2, {0.6, -0.5})},
  };
}

std::vector<DyadicIndex> reducing_cubes(int n) {
  std::vector<DyadicIndex> out;
  for (int j : {-1, 0, 2}) {
    for (std::int64_t k : {-1, 0, 3}) {
      DyadicIndex c{j, LatticeVec(static_cast<std::size_t>(n), k)};
      out.push_back(c);
    }
  }
  return out;
}

// ---- criteria ------------------------------------------------------------------------

Outcome closed_form_norm() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = VectorField::indicator({0, LatticeVec{0}}, CVec{1.0});
  const auto rep = bm_norm(f, MatrixWeightSpec::identity(1, 1), {1, 2, 4}, {-18, 18, 1.0, 1}, {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double exact = std::pow(7.0 / 3.0, 0.25);
  const double rel = std::abs(rep.value / exact - 1.0);
  return {rel <= 1e-6 && secs < 5.0,
          "value " + fmt("%.12f", rep.value) + ", rel err " + fmt("%.2e", rel) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome matrix_power_algebra() {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  double worst_cube = 0.0, worst_id = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t d = static_cast<std::size_t>(dim(g));
    const CMat b = random_matrix(g, d);
    const CMat a = b * b.adjoint() + CMat::identity(d) * Complex(0.1);
    worst_cube = std::max(worst_cube, max_abs_diff(matrix_power(matrix_power(a, 1.0 / 3.0), 3.0), a) /
                                          std::max(1.0, a.frobenius_norm()));
    worst_id = std::max(worst_id, max_abs_diff(matrix_power(a, 0.5) * matrix_power(a, -0.5), CMat::identity(d)));
  }
  return {worst_cube <= 1e-10 && worst_id <= 1e-10,
          "200 matrices, max |(A^1/3)^3 - A| " + fmt("%.1e", worst_cube) + ", max |A^1/2 A^-1/2 - I| " +
              fmt("%.1e", worst_id)};
}

Outcome reducing_operators() {
  std::mt19937_64 g(7);
  double worst_exact = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t d = 1 + static_cast<std::size_t>(i % 4);
    const CMat b = random_matrix(g, d);
    const CMat w0 = b * b.adjoint() + CMat::identity(d) * Complex(0.2);
    const auto r = reducing_operator(MatrixWeightSpec::constant(1, w0), DyadicIndex{i % 3 - 1, LatticeVec{i - 10}},
                                     2.0, ReducingMethod::exact_p2, {});
    worst_exact = std::max(worst_exact, max_abs_diff(r.A, matrix_power(w0, 0.5)));
  }
  double worst_ratio_excess = 0.0;
  int fits = 0, bad = 0;
  for (const auto& c : reducing_weights()) {
    const Weight w(c.spec);
    const double bound = std::sqrt(static_cast<double>(c.spec.d)) * 1.05;
    for (double p : {1.0, 2.0, 3.0})
      for (const auto& cube : reducing_cubes(c.spec.n)) {
        const auto r = reducing_operator(w, to_box(cube), p, ReducingMethod::mvee, {});
        const double ratio = r.certified_c2 / r.certified_c1;
        worst_ratio_excess = std::max(worst_ratio_excess, ratio / bound);
        ++fits;
        if (ratio > bound) ++bad;
      }
  }
  return {worst_exact <= 1e-10 && bad == 0,
          "exact_p2 max err " + fmt("%.1e", worst_exact) + "; " + std::to_string(fits) +
              " mvee fits, worst (c2/c1)/(sqrt(d)*1.05) = " + fmt("%.4f", worst_ratio_excess)};
}

Outcome norm_mass_equivalence() {
  // Each ratio is reported in units of its own band: lo = ratio·1.1d must be >= 1, hi = ratio/(1.1d) <= 1.
  double lo = kInf, hi = 0.0;
  int total = 0;
  std::vector<ReducingCase> cases = reducing_weights();
  cases.push_back({"identity(d=3)", MatrixWeightSpec::identity(3, 1)});
  const double d49[] = {4.0, 9.0};
  cases.push_back({"constant diag(4,9)", MatrixWeightSpec::constant(1, CMat::diagonal(std::span<const double>(d49)))});
  for (const auto& c : cases) {
    const Weight w(c.spec);
    const double band = static_cast<double>(c.spec.d) * 1.1;
    for (double p : {1.0, 2.0, 3.0})
      for (const auto& cube : reducing_cubes(c.spec.n)) {
        const double ratio = norm_mass_equiv(w, to_box(cube), p, {});
        lo = std::min(lo, ratio * band);
        hi = std::max(hi, ratio / band);
        ++total;
      }
  }
  return {lo >= 1.0 && hi <= 1.0, std::to_string(total) + " cube/weight/p cases, min ratio*1.1d " + fmt("%.4f", lo) +
                                      ", max ratio/(1.1d) " + fmt("%.4f", hi)};
}

Outcome class_estimators() {
  const Weight id(MatrixWeightSpec::identity(1, 1));
  const Box unit{Point{0.0}, 1.0};
  const std::vector<Box> fam{unit, Box{Point{-2.0}, 0.5}, Box{Point{3.0}, 4.0}};
  double ap_err = 0.0;
  for (double p : {1.0, 2.0, 3.0}) ap_err = std::max(ap_err, std::abs(ap_characteristic(id, p, fam, {}).characteristic - 1.0));
  const auto dims = ap_dimension(id, 2.0, fam, 5, {});
  const double beta1 = doubling_exponent(id, 2.0, fam, 16, {}).beta;
  const Weight id2(MatrixWeightSpec::identity(1, 2));
  const double beta2 = doubling_exponent(id2, 2.0, {Box{Point{0.0, 0.0}, 1.0}}, 16, {}).beta;
  const auto sweep = ap_excision_sweep(Weight(MatrixWeightSpec::scalar_power(1, 1, 1.5)), 2.0, 8, {});
  const bool ok = ap_err <= 1e-3 && std::abs(dims.d_tilde) <= 0.05 && std::abs(dims.dual_d_tilde) <= 0.05 &&
                  std::abs(beta1 - 1.0) <= 0.05 && std::abs(beta2 - 2.0) <= 0.05 && sweep.monotone &&
                  sweep.growth >= 10.0;
  return {ok, "identity: |A_p - 1| " + fmt("%.1e", ap_err) + ", d~ " + fmt("%.3f", dims.d_tilde) + ", d~* " +
                  fmt("%.3f", dims.dual_d_tilde) + ", beta(n=1) " + fmt("%.3f", beta1) + ", beta(n=2) " +
                  fmt("%.3f", beta2) + "; |x|^1.5 sweep growth " + fmt("%.1f", sweep.growth) + "x" +
                  (sweep.monotone ? " monotone" : " NOT monotone")};
}

Outcome embeddings() {
  std::vector<std::pair<std::string, VectorField>> suite;
  auto add = [&](const std::string& id, const VectorField& f) { suite.emplace_back(id, f); };
  add("zero", VectorField::zero(1, 1));
  add("bump_wide", VectorField::gaussian_bump(Point{0.0}, 1.0, CVec{1.0}));
  add("bump_narrow", VectorField::gaussian_bump(Point{0.3}, 0.1, CVec{1.0}));
  add("bump_complex", VectorField::gaussian_bump(Point{-0.7}, 0.4, CVec{Complex(1, -2)}));
  add("chi_unit", VectorField::indicator({0, LatticeVec{0}}, CVec{1.0}));
  add("chi_small", VectorField::indicator({3, LatticeVec{-2}}, CVec{Complex(0, 4)}));
  CubeValues steps;
  steps[LatticeVec{-2}] = CVec{1.0};
  steps[LatticeVec{0}] = CVec{-2.0};
  steps[LatticeVec{1}] = CVec{0.5};
  add("staircase", VectorField::piecewise_constant(1, 1, 1, steps));
  add("affine_ball", VectorField::affine(Point{1.0}, 0.5, CVec{1.0}).ball_truncated(1.5));
  add("tail_ball", VectorField::power_tail(1, -0.25, CVec{1.0}).ball_truncated(2.0));
  add("tail_annulus", VectorField::power_tail(1, -0.25, CVec{1.0}).ball_truncated(0.5, false).ball_truncated(3.0));
  add("translate", translate(VectorField::gaussian_bump(Point{0.0}, 0.3, CVec{1.0}), Point{1.25}));
  add("mixture", VectorField::linear_combination({{Complex(1.0), suite[1].second}, {Complex(0, 1), suite[4].second}}));

  EmbeddingCases cases;
  cases.r_pairs = {{{1, 2, 3}, {1, 2, 6}}, {{1.5, 3, 4}, {1.5, 3, 8}}};
  cases.p_pairs = {{{1, 3, 6}, {2, 3, 6}}, {{1, 2, kInf}, {1.5, 2, kInf}}};
  cases.chain = {{1, 2, kInf}, {1.5, 3, kInf}};
  cases.slack = 1.01;
  const LatticeWindow win{-4, 8, 4.0, 1};
  int records = 0, bad = 0;
  double worst = 0.0;
  for (const auto& spec : {MatrixWeightSpec::identity(1, 1), MatrixWeightSpec::scalar_power(1, 1, 0.5),
                           MatrixWeightSpec::scalar_power(1, 1, -0.3)}) {
    const auto rep = embedding_check(suite, Weight(spec), cases, win, {});
    records += static_cast<int>(rep.records.size());
    for (const auto& r : rep.records)
      if (!r.holds) {
        ++bad;
        std::fprintf(stderr, "  embedding violated: %s %s p=%g t=%g r=%g lhs=%.17g rhs=%.17g\n", r.member.c_str(),
                     r.kind.c_str(), r.params.p, r.params.t, r.params.r, r.lhs, r.rhs);
      }
    worst = std::max(worst, rep.worst_ratio);
  }
  return {bad == 0, std::to_string(suite.size()) + " members x 3 weights, " + std::to_string(records) +
                        " inequalities, worst lhs/rhs " + fmt("%.6f", worst) + " (slack 1.01)"};
}

Outcome averaging_operators() {
  // Exactness of idempotence and linearity on cached averages.
  const LatticeWindow w{-2, 5, 3.0, 1};
  const Box cov = w.coverage();
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> ux(cov.corner[0], cov.corner[0] + cov.side);
  int mismatches = 0, checks = 0;
  const auto f = VectorField::gaussian_bump(Point{0.2}, 0.6, CVec{1.0, Complex(0, 1)});
  const auto h = VectorField::indicator({2, LatticeVec{1}}, CVec{Complex(2, 1), 0.5});
  const Complex alpha(0.7, -1.3), beta(-2.0, 0.25);
  for (int a : {0, -1, -2, -3}) {
    const auto ef = dyadic_average(f, a, w);
    const auto eh = dyadic_average(h, a, w);
    const auto eef = dyadic_average(ef, a, w);
    const auto lin = dyadic_average(VectorField::linear_combination({{alpha, f}, {beta, h}}), a, w);
    const auto expect = VectorField::linear_combination({{alpha, ef}, {beta, eh}});
    for (int i = 0; i < 100; ++i) {
      const Point x{ux(g)};
      checks += 2;
      if (!(eef(x) == ef(x))) ++mismatches;
      if (!(lin(x) == expect(x))) ++mismatches;
    }
  }

  // Jensen contraction at the identity weight.
  const FieldSuite gauss = {
      {"g1", VectorField::gaussian_bump(Point{0.0}, 0.5, CVec{1.0})},
      {"g2", VectorField::gaussian_bump(Point{0.7}, 0.2, CVec{1.0})},
      {"g3", VectorField::gaussian_bump(Point{-1.1}, 1.0, CVec{Complex(0, 1)})},
  };
  const std::vector<int> as{0, -1, -2, -3, -4, -5};
  const LatticeWindow bw{-5, 6, 4.0, 1};
  double jensen = 0.0;
  for (double p : {1.0, 2.0, 3.0})
    jensen = std::max(jensen, avg_lp_bound_check(Weight(MatrixWeightSpec::identity(1, 1)), p, gauss, as, bw, {}).max_ratio);

  // Ratio stability on hypothesis-satisfying scenarios.
  struct BmCase {
    std::string name;
    MatrixWeightSpec spec;
    SpaceParams params;
  };
  const std::vector<BmCase> bm_cases = {
      {"identity (1,2,4)", MatrixWeightSpec::identity(1, 1), {1, 2, 4}},
      {"identity (2,3,inf)", MatrixWeightSpec::identity(1, 1), {2, 3, kInf}},
      {"|x|^0.2 (1,2,4)", MatrixWeightSpec::scalar_power(1, 1, 0.2), {1, 2, 4}},
      {"|x|^0.5 (1,2,4)", MatrixWeightSpec::scalar_power(1, 1, 0.5), {1, 2, 4}},
  };
  std::string bm_detail;
  bool bm_ok = true;
  int satisfied = 0;
  for (const auto& c : bm_cases) {
    const Weight wt(c.spec);
    const std::vector<Box> bases{Box{Point{0.0}, 1.0}, Box{Point{-1.0}, 1.0}, Box{Point{2.0}, 0.5}};
    const auto dims = ap_dimension(wt, c.params.p, bases, 5, {});
    const auto ledger = exponent_ledger(1, c.params, dims);
    if (!ledger.satisfied) {
      bm_detail += "; " + c.name + " ledger not satisfied (skipped)";
      continue;
    }
    ++satisfied;
    const auto rep = avg_bm_bound_check(wt, c.params, gauss, as, ledger, bw, {});
    bm_ok = bm_ok && rep.tail_variation < 0.2;
    bm_detail += "; " + c.name + " C_obs var " + fmt("%.3f", rep.tail_variation);
  }
  const bool ok = mismatches == 0 && jensen <= 1.01 && bm_ok && satisfied > 0;
  return {ok, std::to_string(mismatches) + "/" + std::to_string(checks) + " exactness mismatches, Jensen max " +
                  fmt("%.6f", jensen) + bm_detail};
}

Outcome compactness_certifier() {
  const NormContext ctx{Weight(MatrixWeightSpec::identity(1, 1)), {1, 2, 4}, {-3, 4, 28.0, 1}, {}};
  Schedule s;
  s.radii = {1, 2, 4, 8};
  s.a_values = {-1, -2, -3, -4, -5, -6};
  const auto single = certify(
      FunctionFamily::singleton("bump", VectorField::gaussian_bump(Point{0.0}, 0.25, CVec{1.0})), ctx, s);
  const bool single_ok = single.verdict == Verdict::certified && single.net && single.net->net_ids.size() == 1;
  const bool audit_ok = single.net && single.net->audit_passed && single.net->audit_max <= 0.1 * 1.05;

  std::vector<Point> shifts;
  for (int k = 1; k <= 8; ++k) shifts.push_back(Point{static_cast<double>(k)});
  const auto fam = FunctionFamily::translates(VectorField::gaussian_bump(Point{0.0}, 0.25, CVec{4.0}), shifts);
  const NormContext ectx{Weight(MatrixWeightSpec::identity(1, 1)), {1, 2, 4}, {-5, 4, 12.0, 1}, {}};
  Schedule es;
  es.radii = {1, 2, 3, 4};
  es.a_values = {-1, -2, -3, -4};
  const auto esc = certify(fam, ectx, es);
  const bool esc_ok = esc.verdict == Verdict::condition_ii_fails;
  return {single_ok && audit_ok && esc_ok,
          "singleton: " + to_string(single.verdict) + ", net " +
              std::to_string(single.net ? single.net->net_ids.size() : 0) + ", audit max " +
              fmt("%.4f", single.net ? single.net->audit_max : NAN) + " <= 0.105; translates: " +
              to_string(esc.verdict)};
}

Outcome counterexample() {
  const auto rep = counterexample_remark(1, 1.0, 2.0, {1, 2, 3, 4, 5, 6},
                                         {{-2, 6, 4.0, 1}, {-4, 8, 8.0, 1}, {-6, 10, 16.0, 1}}, {});
  bool above = rep.c > 0.0;
  for (const auto& r : rep.lower_bounds) above = above && r.lower_bound >= rep.c;
  const bool ok = rep.norm_variation < 0.2 && above && rep.lower_bound_variation < 0.2;
  return {ok, "norm variation " + fmt("%.2e", rep.norm_variation) + " over 3 windows, c = " + fmt("%.5f", rep.c) +
                  ", lower-bound variation " + fmt("%.2e", rep.lower_bound_variation) + " over j = 1..6"};
}

std::string serialize(const ScenarioOutput& out) {
  std::string s = canonical_json(out.report);
  for (const auto& c : out.curves) s += "--" + c.name + "\n" + csv_text(c);
  return s;
}

Outcome determinism() {
  const std::vector<std::string> configs = {
      R"({"task":"norm","weight":{"family":"diagonal_power","gammas":[0.5,-0.3]},"params":{"p":1.5,"t":3,"r":5},
          "window":{"j_min":-4,"j_max":8,"spatial_radius":3},
          "field":{"kind":"gaussian_bump","center":[0.2],"scale":0.5,"direction":[1,[0,1]]}})",
      R"({"task":"reduce","weight":{"family":"diagonal_power","gammas":[0.5,-0.3]},"p":3,"method":"mvee",
          "cubes":[{"j":0,"k":[0]},{"j":1,"k":[-1]}]})",
      R"({"task":"compactness","weight":{"family":"identity"},"params":{"p":1,"t":2,"r":4},
          "window":{"j_min":-3,"j_max":4,"spatial_radius":28},
          "family":{"generator":"singleton","id":"bump","field":{"kind":"gaussian_bump","center":[0],"scale":0.25,"direction":[1]}},
          "schedule":{"radii":[1,2,4,8],"a_values":[-1,-2,-3,-4,-5,-6]},"epsilon":0.1})",
      R"({"task":"avgop","weight":{"family":"scalar_power","gamma":0.5},"params":{"p":1,"t":2,"r":4},
          "window":{"j_min":-3,"j_max":5,"spatial_radius":3},
          "family":{"generator":"translates","field":{"kind":"gaussian_bump","center":[0],"scale":0.4,"direction":[1]},
                    "shifts":[{"y":[0]},{"y":[0.5]},{"y":[-1]}]},
          "a_values":[0,-1,-2],"ledger":{"d_tilde":0.5}})",
      R"({"task":"counterexample"})",
  };
  const std::size_t saved = worker_count();
  int identical = 0;
  std::string failed;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const Json cfg = Json::parse(configs[i]);
    const auto one = run_scenario(cfg, {std::nullopt, std::nullopt, std::size_t{1}});
    const auto four = run_scenario(cfg, {std::nullopt, std::nullopt, std::size_t{4}});
    if (one.exit_code == kExitOk && serialize(one) == serialize(four))
      ++identical;
    else
      failed += " " + cfg["task"].get<std::string>();
  }
  set_worker_count(saved);
  return {identical == static_cast<int>(configs.size()),
          std::to_string(identical) + "/" + std::to_string(configs.size()) +
              " scenarios byte-identical at workers 1 vs 4" + (failed.empty() ? "" : "; differing:" + failed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form norm", closed_form_norm},
      {"matrix-power algebra", matrix_power_algebra},
      {"reducing operators", reducing_operators},
      {"norm-mass equivalence", norm_mass_equivalence},
      {"class estimators", class_estimators},
      {"embeddings", embeddings},
      {"averaging operators", averaging_operators},
      {"compactness certifier", compactness_certifier},
      {"counterexample", counterexample},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
