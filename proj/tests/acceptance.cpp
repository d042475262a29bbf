// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include "planted.hpp"
#include "tropored/chains.hpp"
#include "tropored/conslaw.hpp"
#include "tropored/reduce.hpp"
#include "tropored/sim.hpp"
#include "tropored/transform.hpp"
#include "tropored/tropical.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace tropored;
using json = nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(TROPORED_FIXTURE_DIR) + "/" + name + ".json"; }
ModelSpec load(const std::string& name) { return load_model(fixture(name)); }
json load_json(const std::string& name) {
  std::ifstream in(fixture(name));
  return json::parse(in);
}
Polynomial P(const std::string& s) { return parse_polynomial(s); }

std::vector<std::size_t> all_rows(const PolySystem& s) {
  std::vector<std::size_t> v(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) v[i] = i;
  return v;
}

std::vector<Rational> R(std::initializer_list<int> xs) {
  std::vector<Rational> v;
  for (int x : xs) v.emplace_back(x);
  return v;
}

// Collects failed checks of one criterion.
struct Checks {
  std::vector<std::string> failures;
  void operator()(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

int failed = 0;

void criterion(const std::string& name, double budget_s, const std::function<std::string(Checks&)>& body) {
  Checks c;
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    std::ostringstream os;
    os << "runtime " << secs << " s exceeds " << budget_s << " s";
    c.failures.push_back(os.str());
  }
  std::ostringstream line;
  line.precision(3);
  line << (c.failures.empty() ? "PASS " : "FAIL ") << name << " [" << secs << " s]";
  if (!detail.empty()) line << " " << detail;
  std::cout << line.str() << "\n";
  for (const auto& f : c.failures) std::cout << "    - " << f << "\n";
  failed += !c.failures.empty();
}

const ConservationLaw* find_law(const LawSet& s, const Polynomial& phi) {
  for (const auto& l : s.laws)
    if (l.phi == phi || l.phi == -phi) return &l;
  return nullptr;
}

std::vector<std::string> sorted_names(const PolySystem& sys, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(sys.species()[i]);
  std::sort(out.begin(), out.end(), name_less);
  return out;
}

std::vector<std::string> xs(std::initializer_list<int> ids) {
  std::vector<std::string> out;
  for (int i : ids) out.push_back("x" + std::to_string(i));
  std::sort(out.begin(), out.end(), name_less);
  return out;
}

// --- criteria ----------------------------------------------------------------

std::string mm_symbolic(Checks& check) {
  auto m = load("michaelis_menten");
  auto sc = scale_model(m);
  check(species_orders(m.system, m.d) == R({0, 0, 0}), "d = (0,0,0)");
  auto laws = find_linear_laws(m.system, sc);
  check(laws.laws.size() == 2, "exactly two linear laws");
  auto* q1 = find_law(laws, P("x1 + x2"));
  auto* q2 = find_law(laws, P("x2 + x3"));
  check(q1 && !q1->exact && q1->mu_q.has_value(), "x1 + x2 approximate with finite mu_q");
  check(q2 && q2->exact && !q2->mu_q.has_value(), "x2 + x3 exact with infinite mu_q");

  auto s = transform_explicit(m);
  const auto& sys = s.model.system;
  check(s.converged, "transform converged");
  check(sys.species() == std::vector<std::string>{"x1", "x4"}, "two variables x1, x4");
  if (sys.n() == 2) {
    check(sys.field(0) == P("-k1*x1*(k4 - x4 + x1) + k2*(x4 - x1)"), "x1 equation");
    check(sys.field(1) == P("k3*(x1 - x4)"), "x4 equation");
  }
  check(s.minted.size() == 1 && s.minted[0].name == "k4" && s.minted[0].law_original == P("x2 + x3"),
        "exact law x2 + x3 becomes the parameter k4");
  check(s.current_in_original.count("x4") && s.current_in_original.at("x4") == P("x1 + x2"), "x4 = x1 + x2");

  auto r = reduce_at(s.model, 0, ReduceVariant::Slowest);
  check(r.slaved == std::vector<std::string>{"x1"} && r.driving == std::vector<std::string>{"x4"}, "x1 slaved, x4 driving");
  check(r.plan.size() == 1 && r.plan[0].kind == SolveStep::Kind::Quadratic, "single quadratic elimination");
  if (!r.plan.empty()) {
    const auto& st = r.plan[0];
    // x1* = (-(k1(k4 - x4) + k2) + sqrt((k1(k4 - x4) + k2)^2 + 4 k1 k2 x4)) / (2 k1)
    check(st.a == P("k1"), "2a = 2k1");
    check(st.b == P("k1*(k4 - x4) + k2"), "b = k1(k4 - x4) + k2");
    check(st.b * st.b - Polynomial(4) * st.a * st.c == P("(k1*(k4 - x4) + k2)^2 + 4*k1*k2*x4"), "discriminant");
    check(st.branch == 1, "+ branch");
  }
  check(r.driving_odes.size() == 1 && r.driving_odes[0] == P("k3*(x1 - x4)"), "reduced x4 equation");
  return "closed form: x4' = k3*(x1 - x4), " + (r.plan.empty() ? std::string() : r.plan[0].closed_form());
}

double mm_sup_error(double delta) {
  auto j = load_json("michaelis_menten");
  j["parameters"] = {{"k1", 1.0}, {"k2", 1.0}, {"k3", delta}};
  j["initial"] = {{"x1", 1.0}, {"x2", 0.0}, {"x3", 1.0}};
  auto m = model_from_json(j);
  auto times = time_grid(0, 10 / delta, 1000);
  IntegrateOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-13;
  auto full = integrate_full(m.system, initial_state_vector(m.system), times, opt);
  full.names.push_back("x4");
  auto c1 = full.column("x1"), c2 = full.column("x2");
  for (auto& row : full.states) row.push_back(row[c1] + row[c2]);
  auto s = transform_explicit(m);
  auto r = reduce_at(s.model, 0, ReduceVariant::Slowest);
  auto red = integrate_reduced(r, s.model.system.initial, times, opt);
  if (red.meta.value("truncated", false)) throw std::runtime_error("reduced trajectory truncated");
  // Boundary layer: 5 fast time units (k1 = k2 = 1).
  return compare(full, red, 5.0, {"x4"}).at("x4").sup_rel;
}

std::string mm_numeric(Checks& check) {
  std::vector<double> deltas{0.1, 0.01, 0.001}, err;
  for (double d : deltas) err.push_back(mm_sup_error(d));
  for (double e : err) check(std::isfinite(e), "finite error");
  check(err[1] < 0.10, "error below 10% at delta = 0.01");
  check(err[0] > err[1] && err[1] > err[2], "error strictly decreasing in delta");
  std::ostringstream os;
  os.precision(3);
  os << "sup rel error of x4: " << err[0] << ", " << err[1] << ", " << err[2];
  return os.str();
}

std::string tropical_exactness(Checks& check) {
  auto sw = load("schneider_wilhelm");
  auto res = solve(build_constraints(sw.system, sw.e, all_rows(sw.system)));
  check(!res.truncated && res.solutions.size() == 1 && res.solutions[0].d == R({0, 1}), "Schneider-Wilhelm d = (0,1)");
  if (!res.solutions.empty()) {
    Polyhedron point(2, {{R({1, 0}), Relation::Eq, Rational(0)}, {R({0, 1}), Relation::Eq, Rational(1)}});
    check(res.solutions[0].polyhedron.subset_of(point), "Schneider-Wilhelm solution is a single point");
  }

  auto l4 = load("linear4");
  auto r4 = solve(build_constraints(l4.system, l4.e, all_rows(l4.system)));
  Polyhedron want(4, {{R({1, -1, 0, 0}), Relation::Eq, Rational(0)},
                      {R({0, 0, 1, -1}), Relation::Eq, Rational(0)},
                      {R({0, 1, 0, -1}), Relation::Ge, Rational(-1)}});
  check(r4.solutions.size() == 1, "4-species: one polyhedron");
  if (r4.solutions.size() == 1) {
    const auto& p = r4.solutions[0].polyhedron;
    check(p.subset_of(want) && want.subset_of(p), "4-species polyhedron d1 = d2 >= d4 - 1, d3 = d4");
    auto rep = select_representative(r4.solutions, R({-1, -1, -2, -2}));
    check(rep.d == R({-1, -1, -2, -2}), "4-species representative (-1,-1,-2,-2)");
  }

  auto mm = load("michaelis_menten");
  auto rm = solve(build_constraints(mm.system, mm.e, all_rows(mm.system)));
  bool origin = false;
  for (const auto& s : rm.solutions) origin = origin || s.polyhedron.contains(R({0, 0, 0}));
  check(origin, "MM total equilibration contains (0,0,0)");
  return "";
}

std::string tgfb_symbolic(Checks& check) {
  auto m = load("tgfb");
  const auto& sys = m.system;
  auto sc = scale_and_truncate(sys, species_orders(sys, m.d), m.e, *m.epsilon);
  check(*m.epsilon == Rational(1, 11), "epsilon = 1/11");
  // Truncated right-hand sides (kbar -> k, y -> x) with their epsilon prefactors.
  const std::vector<std::pair<std::string, int>> truncated{
      {"k2*x2 - k1*x1", 2},
      {"k1*x1 - k2*x2", 1},
      {"k3*x4 - k3*x3", 2},
      {"k3*x3 - k3*x4", 2},
      {"k5*x6 + k7*x7 - k6*x3*x5", 1},
      {"k9*x8 + k35*x21 - k5*x6 - k8*x4*x6", 1},
      {"k6*x3*x5 - k7*x7 - k14*x7", 2},
      {"k14*x7 + k8*x4*x6 - k9*x8 - k31*x8*x17", 2},
      {"k10*x5^2 - k11*x9 - k15*x9", 2},
      {"k15*x9 + k12*x6^2 - k13*x10", 2},
      {"k23*x14 - k30*x11", 3},
      {"k27*x15 - k26*x12", 2},
      {"k19 + k30*x11 - k22*k37*x12*x13", 0},
      {"k22*k37*x12*x13 - k23*x14 - k25*x14", 2},
      {"k26*x12 - k27*x15", 3},
      {"k28*x13 - k29*x16", 3},
      {"k35*x21 - k31*x8*x17", 2},
      {"k31*x8*x17 - k34*x18", 2},
      {"k34*x18 - k32*x19", 2},
      {"k32*x19 - k33*k38*x20", 1},
      {"k34*x18 - k35*x21", 2}};
  auto f1 = sc.trunc.f1(sys);
  for (std::size_t i = 0; i < sys.n() && i < truncated.size(); ++i)
    check(f1[i] == P(truncated[i].first) && sc.assignment.a_min[i] == Rational(truncated[i].second),
          "truncated equation of " + sys.species()[i]);

  auto s = transform_explicit(m);
  check(!s.iterations.empty() && s.iterations[0].level == 3, "first degenerate level is 3");
  std::vector<std::string> first_laws;
  for (const auto& row : s.ledger)
    if (row.iteration == 1) first_laws.push_back(row.law_original.str());
  check(first_laws.size() == 4, "iteration 1 finds four laws");

  struct Row {
    std::size_t it;
    int tov;
    std::optional<int> toc;
    const char* law;
  };
  const std::vector<Row> table{
      {1, 2, 4, "x1 + x2"},
      {1, 2, 3, "x3 + x4"},
      {1, 2, 3, "x5 + x6 + x7 + x8 + x18 + x21"},
      {1, 2, std::nullopt, "x17 + x18 + x21"},
      {2, 3, 4, "x3 + x4 - x5 - x6 + x17 + x18 + x19 + x20"},
      {2, 3, 4, "x12 + x15"},
      {3, 4, 5, "x3 + x4 + x17 + x18 + x19 + x20 - (x1 + x2 + x5 + x6)"},
      {3, 4, std::nullopt, "x3 + x4 + x7 + x8 + x17 + 2*x18 + x19 + x20 + x21"},
      {4, 5, std::nullopt, "x1 + x2 + x5 + x6 + 2*x9 + 2*x10 - (x3 + x4 + x17 + x18 + x19 + x20)"},
  };
  check(s.ledger.size() == table.size(), "nine laws in the ledger");
  for (std::size_t r = 0; r < std::min(table.size(), s.ledger.size()); ++r) {
    const auto& row = s.ledger[r];
    const auto& t = table[r];
    Polynomial want = P(t.law);
    bool ok = row.iteration == t.it && row.tov == Rational(t.tov) && row.exact == !t.toc.has_value() &&
              (!t.toc || row.toc == Rational(*t.toc)) && (row.law_original == want || row.law_original == -want) &&
              (!row.toc || *row.toc > *row.tov);
    check(ok, "ledger row " + std::to_string(r + 1) + " (" + t.law + ")");
  }

  const auto& ts = s.model.system;
  check(ts.n() == 18, "18 variables");
  auto fsc = scale_model(s.model);
  const auto& dec = fsc.decomposition;
  check(dec.m() == 5, "five timescale groups");
  if (dec.m() == 5) {
    const std::vector<std::vector<std::string>> groups{
        xs({13}), xs({2, 5, 6, 20}), xs({4, 7, 9, 10, 12, 14, 17, 18, 19}), xs({8, 11, 16}), xs({15})};
    for (std::size_t k = 0; k < 5; ++k) {
      check(sorted_names(ts, dec.groups[k].species) == groups[k], "group " + std::to_string(k + 1));
      check(dec.groups[k].order == Rational(static_cast<long>(k)), "group " + std::to_string(k + 1) + " at order eps^" + std::to_string(k));
    }
  }
  std::mt19937_64 rng(1);
  auto deg = degeneracy_level(ts, fsc, rng);
  check(!deg.level, "no degenerate level in the final model");
  for (const auto& l : deg.levels)
    check(l.status == DetStatus::Nonzero, "generic determinant of level " + std::to_string(l.level) + " nonzero");

  // Positivity constraints, written with the table's constants.
  std::map<std::string, Polynomial> table_constants{
      {"K39", P("x17 + x18 + x21")},
      {"K40", P("x1 + x2 + x5 + x6 + x7 + x8 + 2*x9 + 2*x10 + x18 + x21")},
      {"K41", P("x3 + x4 + x7 + x8 + x19 + x20 + x18")}};
  const auto& orig = s.original.system.species();
  auto coeffs = [&](const Polynomial& p) {
    std::vector<Rational> c;
    for (const auto& x : orig) c.push_back(p.coefficient(x, 1).constant_term());
    return c;
  };
  RationalMatrix A(orig.size(), 3);
  std::size_t col = 0;
  for (const auto& [k, def] : table_constants) {
    auto c = coeffs(def);
    for (std::size_t i = 0; i < orig.size(); ++i) A(i, col) = c[i];
    ++col;
  }
  std::map<std::string, Polynomial> rename;
  for (const auto& mp : s.minted) {
    std::vector<Rational> x;
    if (!A.solve(coeffs(mp.law_original), x)) {
      check(false, "minted constant " + mp.name + " is not a combination of the table constants");
      continue;
    }
    rename[mp.name] = Polynomial::term(x[0], Monomial::var("K39")) + Polynomial::term(x[1], Monomial::var("K40")) +
                      Polynomial::term(x[2], Monomial::var("K41"));
  }
  std::set<std::string> got, want;
  for (const auto& p : s.positivity) got.insert(p.substitute(rename).str());
  for (const char* c : {"K40 - x2 - x8 - 2*x9 - 2*x10", "K39 + K41 - x4 + x5 + x6 - x8 - x17 - x18 - x19 - x20",
                        "x8 + x17 - x5 - x6 - x7 - K39", "x15 - x12", "K39 - x17 - x18"})
    want.insert(P(c).str());
  check(got == want, "five positivity constraints");
  return "";
}

std::vector<std::string> invariant_violations(const PolySystem& sys, const ScaleResult& sc, std::size_t& checked) {
  std::vector<std::string> out;
  auto f1 = sc.trunc.f1(sys);
  auto laws = find_linear_laws(sys, sc);
  for (const auto& u : sys.user_laws) laws.laws.push_back(analyse_law(sys, sc, u));
  for (const auto& law : laws.laws) {
    ++checked;
    if (!verify_law(sys, f1, law.phi).conserved) out.push_back("not conserved by F1: " + law.phi.str());
    for (auto v : {lemma1_violation(sys, sc.assignment, law), dominant_part_violation(sys, sc.assignment, law),
                   slowness_violation(sys, sc.assignment, law)})
      if (!v.empty()) out.push_back(v);
  }
  return out;
}

std::string invariant_suite(Checks& check) {
  std::size_t laws = 0, systems = 0;
  for (const char* name : {"michaelis_menten", "linear4", "example2", "example3_monomial", "schneider_wilhelm", "tgfb"}) {
    auto m = load(name);
    for (const auto& v : invariant_violations(m.system, scale_model(m), laws)) check(false, std::string(name) + ": " + v);
    ++systems;
  }
  auto s = transform_explicit(load("tgfb"));
  for (const auto& v : invariant_violations(s.model.system, scale_model(s.model), laws)) check(false, "tgfb transformed: " + v);
  ++systems;
  std::mt19937_64 rng(7001);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = planted::make_case(rng);
    auto sc = scale_and_truncate(c.system, c.d, c.e, Rational(1, 10));
    for (const auto& v : invariant_violations(c.system, sc, laws))
      check(false, "random system " + std::to_string(trial) + ": " + v);
    ++systems;
  }
  return std::to_string(systems) + " systems, " + std::to_string(laws) + " laws checked";
}

std::string schur_machinery(Checks& check) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> size(2, 8);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    int n = size(rng);
    int a = 1 + t % (n - 1);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
    // Every third matrix is rank deficient in its trailing rows.
    if (t % 3 == 0) M.row(n - 1) = M.row(0) + M.row(n - 2);
    auto id = schur_identities(M, static_cast<std::size_t>(a));
    // Singular matrices: both determinants are roundoff, compare absolutely.
    double diff = std::abs(id.det_m - id.det_product);
    double err = t % 3 == 0 ? diff : diff / std::abs(id.det_m);
    worst = std::max(worst, err);
    check(err < 1e-9, "det identity, matrix " + std::to_string(t));
    check(id.rank_m == id.rank_sum, "rank identity, matrix " + std::to_string(t));
  }

  double lemma6 = 0;
  for (const char* name : {"michaelis_menten", "linear4"}) {
    auto s = transform_explicit(load(name));
    auto sc = scale_model(s.model);
    auto params = parameter_values(s.model.system);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (std::size_t k = 1; k + 1 <= dynamic_levels(sc); ++k)
      for (int t = 0; t < 5; ++t) {
        auto seed = initial_state_vector(s.model.system);
        for (auto& v : seed) v *= u(rng);
        auto c = lemma6_check(s.model.system, sc, k, seed, params);
        lemma6 = std::max(lemma6, c.rel_error);
        check(c.projected && c.rel_error < 1e-6, std::string(name) + ": eliminated-map derivative vs Schur complement");
      }
  }

  double eig = 0;
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 20; ++t) {
    auto j = load_json("michaelis_menten");
    j["parameters"] = {{"k1", u(rng)}, {"k2", u(rng)}, {"k3", 0.01}};
    j["initial"] = {{"x1", u(rng)}, {"x2", u(rng)}, {"x3", u(rng)}};
    auto s = transform_explicit(model_from_json(j));
    auto sc = scale_model(s.model);
    auto k = parameter_values(s.model.system);
    std::vector<double> seed{u(rng), u(rng)};
    auto rep = chain_verify(s.model.system, sc, 1, {seed}, rng);
    const auto& lv = rep.levels.at(0);
    if (lv.samples.empty() || lv.eigenvalues.empty()) {
      check(false, "MM point " + std::to_string(t) + ": no sample on M_1");
      continue;
    }
    double x4 = lv.samples[0][1];
    double B = k["k1"] * (k["k4"] - x4) + k["k2"];
    double want = -std::sqrt(B * B + 4 * k["k1"] * k["k2"] * x4);
    double rel = std::abs(lv.eigenvalues[0][0].real() - want) / std::abs(want);
    eig = std::max(eig, rel);
    check(rel < 1e-10 && lv.eigenvalues[0][0].imag() == 0, "MM fast eigenvalue at point " + std::to_string(t));
  }
  std::ostringstream os;
  os.precision(2);
  os << "max det error " << worst << ", eliminated-map derivative " << lemma6 << ", eigenvalue " << eig;
  return os.str();
}

std::string degeneracy_diagnostics(Checks& check) {
  auto e2 = load("example2");
  auto sc2 = scale_model(e2);
  auto laws = find_linear_laws(e2.system, sc2);
  check(laws.laws.size() == 1 && laws.laws[0].phi == P("x1 + x2"), "Example 2 law x1 + x2");
  std::mt19937_64 rng(5);
  std::vector<Polynomial> phis;
  for (const auto& l : laws.laws) phis.push_back(l.phi);
  auto c2 = completeness_test(e2.system, sc2.trunc.f1(e2.system), phis, rng);
  check(c2.complete == std::optional<bool>(false) && c2.rank == 1, "Example 2 not complete, rank 1");
  auto ch = chain_verify(e2.system, sc2, 1, {}, rng);
  check(ch.broken_at == std::optional<std::size_t>(1), "Example 2 chain broken at level 1");

  auto e3 = load("example3_monomial");
  auto sc3 = scale_model(e3);
  const auto& phi = e3.system.user_laws.at(0);
  check(phi == P("x1*x2"), "Example 3 law x1*x2");
  auto v = verify_law(e3.system, sc3.trunc.f1(e3.system), phi);
  check(v.conserved, "x1*x2 conserved by the truncated system");
  check(v.residual == P("-k1") * phi, "q' = -delta q");
  auto c3 = completeness_test(e3.system, sc3.trunc.f1(e3.system), {phi}, rng);
  check(c3.complete == std::optional<bool>(true), "Example 3 complete");
  check(c3.minor && *c3.minor == P("-2*x1^2"), "minor -2*x1^2");
  return "";
}

}  // namespace

int main() {
  criterion("MM symbolic pipeline", 1.0, mm_symbolic);
  criterion("MM numeric convergence", 10.0, mm_numeric);
  criterion("Tropical solver exactness", 0, tropical_exactness);
  criterion("TGF-beta symbolic case study", 60.0, tgfb_symbolic);
  criterion("Conservation-law invariant suite", 0, invariant_suite);
  criterion("Schur machinery", 0, schur_machinery);
  criterion("Degeneracy diagnostics", 0, degeneracy_diagnostics);
  return failed ? 1 : 0;
}
