#include "tropored/transform.hpp"

#include "tropored/conslaw.hpp"
#include "tropored/linalg.hpp"
#include "tropored/sampling.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace tropored {

std::string det_status_name(DetStatus s) {
  switch (s) {
    case DetStatus::Nonzero: return "nonzero";
    case DetStatus::Zero: return "zero";
    case DetStatus::ZeroOnVariety: return "zero on steady variety";
  }
  return "?";
}

ScaleResult scale_model(const ModelSpec& m, int g) {
  const auto& sys = m.system;
  Rational eps = m.epsilon.value_or(Rational(1, 10));
  OrderMap e = m.e;
  std::vector<std::string> missing;
  std::vector<double> values;
  for (const auto& p : sys.parameters())
    if (!e.count(p.name)) {
      if (!p.value) throw ModelError("parameter " + p.name + " has neither an order nor a value");
      missing.push_back(p.name);
      values.push_back(*p.value);
    }
  if (!missing.empty()) {
    auto r = round_parameter_orders(values, eps, g);
    for (std::size_t i = 0; i < missing.size(); ++i) e[missing[i]] = r.e[i];
  }
  return scale_and_truncate(sys, species_orders(sys, m.d), e, eps, g);
}

std::vector<std::size_t> level_variables(const TimescaleDecomposition& dec, std::size_t l) {
  return dec.union_up_to(l);
}

std::vector<std::vector<Polynomial>> level_jacobian(const PolySystem& sys, const ScaleResult& sc,
                                                    std::size_t l) {
  auto X = level_variables(sc.decomposition, l);
  std::vector<std::vector<Polynomial>> J;
  for (auto i : X) {
    Polynomial f = sys.field_part(i, sc.trunc.s1);
    std::vector<Polynomial> row;
    for (auto j : X) row.push_back(f.derivative(sys.species()[j]));
    J.push_back(std::move(row));
  }
  return J;
}

namespace {

Point random_point(const std::vector<std::string>& vars, std::mt19937_64& rng) {
  Point p;
  for (const auto& v : vars) p[v] = random_positive_rational(rng);
  return p;
}

}  // namespace

DegeneracyReport degeneracy_level(const PolySystem& sys, const ScaleResult& sc, std::mt19937_64& rng,
                                  std::size_t symbolic_cap) {
  DegeneracyReport rep;
  auto vars = all_variables(sys);
  for (std::size_t l = 1; l <= sc.decomposition.m(); ++l) {
    auto X = level_variables(sc.decomposition, l);
    auto J = level_jacobian(sys, sc, l);
    LevelDeterminant ld;
    ld.level = l;
    ld.size = X.size();
    bool generic_nonzero = false;
    for (int t = 0; t < 4 && !generic_nonzero; ++t)
      generic_nonzero = evaluate_matrix(J, random_point(vars, rng)).determinant() != 0;
    if (!generic_nonzero) {
      ld.status = DetStatus::Zero;
    } else {
      std::vector<Polynomial> eqs;
      for (auto i : X) eqs.push_back(sys.field_part(i, sc.trunc.s1));
      auto vs = sample_variety(eqs, vars, 3, rng);
      if (vs.found && vs.status == "ok") {
        bool all_zero = std::all_of(vs.points.begin(), vs.points.end(), [&](const Point& p) {
          return evaluate_matrix(J, p).determinant() == 0;
        });
        if (all_zero) ld.status = DetStatus::ZeroOnVariety;
      } else {
        ld.note = "steady variety not sampled (" + vs.status + "); generic value used";
      }
    }
    if (X.size() <= symbolic_cap) ld.symbolic = symbolic_determinant(J);
    rep.levels.push_back(ld);
    if (ld.status != DetStatus::Nonzero) {
      rep.level = l;
      break;
    }
  }
  return rep;
}

std::vector<std::string> choose_pivots(const PolySystem& sys, const ScaleResult& sc,
                                       const std::vector<Polynomial>& laws,
                                       const std::vector<std::string>& preference, std::mt19937_64& rng) {
  const std::size_t s = laws.size();
  auto pt = random_point(all_variables(sys), rng);
  // Rows: laws; columns: species.
  RationalMatrix M(s, sys.n());
  std::vector<std::vector<std::size_t>> cand(s);
  for (std::size_t q = 0; q < s; ++q) {
    for (std::size_t j = 0; j < sys.n(); ++j) {
      Polynomial d = laws[q].derivative(sys.species()[j]);
      if (d.is_zero()) continue;
      M(q, j) = d.evaluate(pt);
      cand[q].push_back(j);
    }
    auto slowness = [&](std::size_t j) { return sc.assignment.a_min[j]; };
    auto pref = [&](std::size_t j) {
      auto it = std::find(preference.begin(), preference.end(), sys.species()[j]);
      return static_cast<std::size_t>(it - preference.begin());
    };
    std::stable_sort(cand[q].begin(), cand[q].end(), [&](std::size_t a, std::size_t b) {
      auto sa = slowness(a), sb = slowness(b);
      if (sa != sb) {
        if (!sa) return true;  // constant species are slowest
        if (!sb) return false;
        return *sa > *sb;
      }
      if (pref(a) != pref(b)) return pref(a) < pref(b);
      return a < b;
    });
  }
  std::vector<std::size_t> chosen;
  std::function<bool(std::size_t)> search = [&](std::size_t q) {
    if (q == s) return true;
    for (auto j : cand[q]) {
      if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      chosen.push_back(j);
      std::vector<std::size_t> rows(q + 1);
      for (std::size_t r = 0; r <= q; ++r) rows[r] = r;
      if (M.select_rows(rows).select_cols(chosen).rank() == q + 1 && search(q + 1)) return true;
      chosen.pop_back();
    }
    return false;
  };
  if (!search(0)) throw TransformError("conservation laws are not independent: no nonsingular pivot minor");
  std::vector<std::string> out;
  for (auto j : chosen) out.push_back(sys.species()[j]);
  return out;
}

Polynomial orient_law(const Polynomial& phi, const ModelSpec& m) {
  bool all_pos = std::all_of(phi.terms().begin(), phi.terms().end(),
                             [](const auto& t) { return t.second > 0; });
  if (all_pos) return phi;
  const auto& init = m.system.initial;
  bool have = true;
  for (const auto& v : phi.variables()) have = have && init.count(v);
  if (have) {
    double val = phi.evaluate([&](const std::string& v) { return init.at(v); });
    double scale = 0;
    for (const auto& [mono, c] : phi.terms())
      scale = std::max(scale, std::abs(c.get_d() * Polynomial::term(1, mono).evaluate([&](const std::string& v) {
                                         return init.at(v);
                                       })));
    if (std::abs(val) > 1e-12 * scale) return val > 0 ? phi : -phi;
  }
  if (m.epsilon) {
    double eps = m.epsilon->get_d();
    bool ok = true;
    for (const auto& v : phi.variables()) ok = ok && m.d.count(v);
    if (ok) {
      double val = phi.evaluate([&](const std::string& v) { return std::pow(eps, m.d.at(v).get_d()); });
      if (std::abs(val) > 1e-12) return val > 0 ? phi : -phi;
    }
  }
  return phi.terms().begin()->second > 0 ? phi : -phi;
}

TransformState initial_state(const ModelSpec& m) {
  TransformState s;
  s.original = m;
  s.model = m;
  for (const auto& x : m.system.species()) {
    s.original_in_current[x] = Polynomial::var(x);
    s.current_in_original[x] = Polynomial::var(x);
  }
  return s;
}

std::vector<std::string> round_trip_failures(const TransformState& s) {
  std::vector<std::string> bad;
  const auto& cur = s.model.system;
  auto g = cur.field();
  std::map<std::string, Polynomial> sub = s.original_in_current;
  for (std::size_t i = 0; i < s.original.system.n(); ++i) {
    const auto& o = s.original.system.species()[i];
    const Polynomial& expr = s.original_in_current.at(o);
    Polynomial lhs;
    for (std::size_t v = 0; v < cur.n(); ++v) {
      Polynomial d = expr.derivative(cur.species()[v]);
      if (!d.is_zero()) lhs += d * g[v];
    }
    Polynomial rhs = s.original.system.field(i).substitute(sub);
    if (!(lhs - rhs).is_zero()) bad.push_back(o);
  }
  return bad;
}

namespace {

int max_suffix(const std::vector<std::string>& names, char prefix) {
  int best = 0;
  for (const auto& n : names) {
    if (n.size() < 2 || n[0] != prefix) continue;
    if (!std::all_of(n.begin() + 1, n.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      continue;
    best = std::max(best, std::stoi(n.substr(1)));
  }
  return best;
}

std::vector<std::string> parameter_names(const PolySystem& sys) {
  std::vector<std::string> out;
  for (const auto& p : sys.parameters()) out.push_back(p.name);
  return out;
}

struct LawPlan {
  Polynomial phi;
  bool exact = false;
  std::string pivot;
  std::string label;
  std::string carrier;  // new variable or parameter name
  LawTimescale ts;
  std::optional<Rational> tov;
};

// Laws of the truncated level system: irreducible linear kernel laws of S1
// restricted to X_l, then user laws supported in X_l.
std::vector<Polynomial> level_laws(const TransformState& st, const ScaleResult& sc, std::size_t l,
                                   std::vector<bool>& exact, std::vector<std::string>& notes) {
  const auto& sys = st.model.system;
  auto X = level_variables(sc.decomposition, l);
  std::set<std::size_t> slowest(sc.decomposition.groups[l - 1].species.begin(),
                                sc.decomposition.groups[l - 1].species.end());
  RationalMatrix s1 = sc.trunc.s1.select_rows(X);
  RationalMatrix s = sys.stoich().select_rows(X);
  auto is_exact = [&](const std::vector<Rational>& c) {
    auto r = s.left_multiply(c);
    return std::all_of(r.begin(), r.end(), [](const Rational& v) { return v == 0; });
  };
  auto outside = [&](const std::vector<Rational>& c) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] != 0 && !slowest.count(X[i])) ++k;
    return k;
  };
  // Exact laws first, then laws living in the slowest group of the level.
  auto order = [&](const std::vector<Rational>& a, const std::vector<Rational>& b) {
    bool ea = is_exact(a), eb = is_exact(b);
    if (ea != eb) return ea;
    return outside(a) < outside(b);
  };
  auto basis = left_kernel_irreducible(s1, order);
  std::vector<Polynomial> laws;
  for (const auto& c : basis) {
    Polynomial p;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] != 0) p += Polynomial::term(c[i], Monomial::var(sys.species()[X[i]]));
    laws.push_back(p);
    exact.push_back(is_exact(c));
  }
  // User laws (monomial or polynomial) restricted to X_l.
  std::set<std::string> xl;
  for (auto i : X) xl.insert(sys.species()[i]);
  std::vector<Polynomial> f1;
  for (std::size_t i = 0; i < sys.n(); ++i) f1.push_back(sys.field_part(i, sc.trunc.s1));
  for (const auto& u : sys.user_laws) {
    bool inside = true;
    for (const auto& v : u.variables())
      if (sys.is_species(v) && !xl.count(v)) inside = false;
    if (!inside) continue;
    auto v = verify_law(sys, f1, u);
    if (!v.conserved) {
      notes.push_back("user law " + u.str() + " is not conserved by the truncated field; skipped");
      continue;
    }
    laws.push_back(u);
    exact.push_back(v.exact);
  }
  return laws;
}

// x_pivot expressed through the law carriers, for laws linear in the pivots.
std::map<std::string, Polynomial> solve_pivots(const PolySystem& sys, const std::vector<LawPlan>& plan) {
  const std::size_t s = plan.size();
  bool linear = std::all_of(plan.begin(), plan.end(), [](const LawPlan& p) {
    return classify_law(p.phi) == LawKind::Linear && p.phi.constant_term() == 0;
  });
  std::map<std::string, Polynomial> psi;
  if (linear) {
    RationalMatrix A(s, s);
    std::vector<Polynomial> rhs(s);
    for (std::size_t q = 0; q < s; ++q) {
      Polynomial rest = plan[q].phi;
      for (std::size_t p = 0; p < s; ++p) {
        Rational c = plan[q].phi.coefficient(plan[p].pivot, 1).constant_term();
        A(q, p) = c;
        rest -= Polynomial::term(c, Monomial::var(plan[p].pivot));
      }
      rhs[q] = Polynomial::var(plan[q].carrier) - rest;
    }
    auto inv = A.inverse();
    for (std::size_t p = 0; p < s; ++p) {
      Polynomial v;
      for (std::size_t q = 0; q < s; ++q)
        if (inv(p, q) != 0) v += Polynomial(inv(p, q)) * rhs[q];
      psi[plan[p].pivot] = v;
    }
    return psi;
  }
  // Nonlinear laws: phi = m * pivot + r with a monomial m, pivots not shared.
  for (std::size_t q = 0; q < s; ++q) {
    const auto& piv = plan[q].pivot;
    for (std::size_t p = 0; p < s; ++p)
      if (p != q && plan[p].phi.depends_on(piv))
        throw TransformError("pivot " + piv + " appears in several nonlinear laws; use implicit mode");
    if (plan[q].phi.max_degree(piv) != 1 || plan[q].phi.min_degree(piv) < 0)
      throw TransformError("law " + plan[q].phi.str() + " is not linear in " + piv + "; use implicit mode");
    Polynomial m = plan[q].phi.coefficient(piv, 1);
    Polynomial r = plan[q].phi.coefficient(piv, 0);
    if (!m.is_monomial())
      throw TransformError("coefficient of " + piv + " in " + plan[q].phi.str() +
                           " is not a monomial; use implicit mode");
    psi[piv] = (Polynomial::var(plan[q].carrier) - r) * m.pow(-1);
  }
  (void)sys;
  return psi;
}

std::vector<Polynomial> positivity_from(const TransformState& s) {
  std::vector<Polynomial> out;
  for (const auto& o : s.original.system.species()) {
    const auto& e = s.original_in_current.at(o);
    bool bare = e.is_monomial() && e.terms().begin()->second == 1 &&
                e.terms().begin()->first.factors().size() == 1 &&
                e.terms().begin()->first.factors()[0].second == 1;
    if (!bare) out.push_back(e);
  }
  return out;
}

// Rewrites a residual through the law variable where possible.
Polynomial residual_in_carrier(const Polynomial& res, const Polynomial& phi, const std::string& carrier,
                               const std::map<std::string, Polynomial>& psi) {
  if (phi.is_monomial()) {
    const auto& [mono, c] = *phi.terms().begin();
    Polynomial q;
    for (const auto& [m, k] : res.terms()) {
      Monomial r = m * mono.inverse();
      if (r.has_negative()) return res;
      q += Polynomial::term(k / c, r);
    }
    return q * Polynomial::var(carrier);
  }
  return res.substitute(psi);
}

LedgerRow ledger_row(std::size_t it, std::size_t l, const ScaleResult& sc, const PolySystem& sys,
                     const LawPlan& p, const TransformState& st) {
  LedgerRow row;
  row.iteration = it;
  row.level = l;
  for (auto i : sc.decomposition.groups[l - 1].species) row.group.push_back(sys.species()[i]);
  row.tov = p.tov;
  row.law = p.phi;
  row.law_original = p.phi.substitute(st.current_in_original);
  row.toc = p.ts.mu_q;
  row.exact = p.exact;
  row.d_q = p.ts.d_q;
  row.pivot = p.pivot;
  row.label = p.label;
  row.new_name = p.carrier;
  return row;
}

// Plans the treatment of the first degenerate level; returns false when the system is regular.
bool plan_level(TransformState& st, const ScaleResult& sc, std::mt19937_64& rng, IterationRecord& rec,
                std::vector<LawPlan>& plan, bool fresh_names) {
  const auto& sys = st.model.system;
  auto deg = degeneracy_level(sys, sc, rng);
  rec.determinants = deg.levels;
  if (!deg.level) return false;
  std::size_t l = *deg.level;
  rec.level = l;
  std::vector<bool> exact;
  auto laws = level_laws(st, sc, l, exact, rec.notes);
  if (laws.empty())
    throw TransformError("level " + std::to_string(l) +
                         " is degenerate but has no linear or supplied conservation law");

  // Completeness of (Phi, F-hat) on the level variety, and independence of the laws.
  auto X = level_variables(sc.decomposition, l);
  for (std::size_t q = 0; q < laws.size(); ++q) laws[q] = orient_law(laws[q], st.model);
  auto pivots = choose_pivots(sys, sc, laws, st.model.pivot_preference, rng);
  rec.pivots = pivots;
  {
    std::vector<std::string> xnames;
    for (auto i : X) xnames.push_back(sys.species()[i]);
    std::vector<Polynomial> stack = laws;
    std::vector<Polynomial> eqs;
    for (auto i : X) {
      Polynomial f = sys.field_part(i, sc.trunc.s1);
      eqs.push_back(f);
      if (std::find(pivots.begin(), pivots.end(), sys.species()[i]) == pivots.end()) stack.push_back(f);
    }
    auto r = generic_rank(jacobian(stack, xnames), eqs, all_variables(sys), rng);
    if (r.conclusive) {
      rec.complete = r.rank == X.size();
      if (!*rec.complete)
        throw TransformError("law set at level " + std::to_string(l) + " is incomplete: rank " +
                             std::to_string(r.rank) + " < " + std::to_string(X.size()));
    } else {
      rec.completeness_note = r.status;
    }
  }

  int next_x = max_suffix(sys.species(), 'x');
  for (const auto& o : st.original.system.species()) next_x = std::max(next_x, max_suffix({o}, 'x'));
  for (const auto& [label, carrier] : st.renames) next_x = std::max(next_x, max_suffix({label, carrier}, 'x'));
  int next_k = max_suffix(parameter_names(sys), 'k');

  // Ledger order: by smallest support index.
  std::vector<std::size_t> idx(laws.size());
  for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
  auto first_index = [&](const Polynomial& p) {
    std::size_t best = sys.n();
    for (const auto& v : p.variables())
      if (auto i = sys.species_index(v)) best = std::min(best, *i);
    return best;
  };
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return first_index(laws[a]) < first_index(laws[b]); });

  std::size_t counter = 0;
  for (auto q : idx) {
    LawPlan p;
    p.phi = laws[q];
    p.exact = exact[q];
    p.pivot = pivots[q];
    p.ts = law_timescale(sys, sc.assignment, p.phi);
    if (p.exact != !p.ts.mu_q.has_value())
      throw TransformError("exactness of " + p.phi.str() + " disagrees with its residual");
    for (const auto& v : p.phi.variables())
      if (auto i = sys.species_index(v)) {
        auto t = species_timescale(sc.assignment, sys, *i);
        if (t && (!p.tov || *t > *p.tov)) p.tov = t;
      }
    ++counter;
    if (fresh_names) {
      p.label = "x" + std::to_string(++next_x);
    } else {
      p.label = "x" + std::to_string(counter) + "c";
    }
    if (p.exact) {
      p.carrier = "k" + std::to_string(++next_k);
    } else {
      p.carrier = fresh_names ? p.label : p.pivot;
    }
    plan.push_back(p);
  }
  return true;
}

void apply_explicit(TransformState& st, const ScaleResult& sc, IterationRecord& rec,
                    const std::vector<LawPlan>& plan, bool fresh_names, std::size_t it) {
  const auto& sys = st.model.system;
  auto psi = solve_pivots(sys, plan);
  auto f = sys.field();

  // New variable list.
  std::set<std::string> pivots;
  for (const auto& p : plan) pivots.insert(p.pivot);
  std::vector<std::string> species;
  std::vector<Polynomial> field;
  std::map<std::string, const LawPlan*> by_carrier;
  for (const auto& p : plan)
    if (!p.exact) by_carrier[p.carrier] = &p;
  auto law_field = [&](const LawPlan& p) {
    Polynomial r = law_derivative(p.phi, sys.species(), f);
    return r.substitute(psi);
  };
  for (std::size_t i = 0; i < sys.n(); ++i) {
    const auto& x = sys.species()[i];
    if (pivots.count(x)) {
      if (!fresh_names) {
        for (const auto& p : plan)
          if (p.pivot == x && !p.exact) {
            species.push_back(p.carrier);
            field.push_back(law_field(p));
          }
      }
      continue;
    }
    species.push_back(x);
    field.push_back(f[i].substitute(psi));
  }
  if (fresh_names)
    for (const auto& p : plan)
      if (!p.exact) {
        species.push_back(p.carrier);
        field.push_back(law_field(p));
      }

  // Parameters, orders, initial values.
  auto params = sys.parameters();
  ModelSpec next = st.model;
  std::map<std::string, double> init;
  const auto& old_init = sys.initial;
  auto value_at_init = [&](const Polynomial& p) -> std::optional<double> {
    for (const auto& v : p.variables())
      if (sys.is_species(v) && !old_init.count(v)) return std::nullopt;
    return p.evaluate([&](const std::string& v) {
      if (auto it = old_init.find(v); it != old_init.end()) return it->second;
      return *sys.parameters()[*sys.parameter_index(v)].value;
    });
  };
  for (const auto& x : species)
    if (old_init.count(x) && !pivots.count(x)) init[x] = old_init.at(x);
  for (const auto& p : plan) {
    auto val = value_at_init(p.phi);
    if (p.exact) {
      params.push_back({p.carrier, val});
      next.e[p.carrier] = p.ts.d_q;
      MintedParameter mp{p.carrier, p.phi, p.phi.substitute(st.current_in_original), val, p.ts.d_q};
      st.minted.push_back(mp);
      st.parameter_definitions[p.carrier] = mp.law_original;
    } else {
      if (val) init[p.carrier] = *val;
      next.d[p.carrier] = p.ts.d_q;
    }
    st.renames[p.label] = p.carrier;
  }
  for (const auto& x : pivots)
    if (std::find(species.begin(), species.end(), x) == species.end()) next.d.erase(x);

  PolySystem ns = PolySystem::from_polynomials(species, params, field);
  ns.initial = init;
  for (const auto& u : sys.user_laws) {
    bool uses_pivot = false;
    for (const auto& v : u.variables()) uses_pivot = uses_pivot || pivots.count(v);
    if (!uses_pivot) ns.user_laws.push_back(u);
  }
  next.system = ns;

  // Bookkeeping maps.
  std::map<std::string, Polynomial> cio;
  for (const auto& x : species) {
    if (by_carrier.count(x)) {
      cio[x] = by_carrier.at(x)->phi.substitute(st.current_in_original);
    } else {
      cio[x] = st.current_in_original.at(x);
    }
  }
  for (auto& [o, e] : st.original_in_current) e = e.substitute(psi);
  for (const auto& p : plan) {
    st.substitutions.push_back({p.pivot, psi.at(p.pivot), p.phi, p.exact, p.carrier});
    st.ledger.push_back(ledger_row(it, rec.level, sc, sys, p, st));
  }
  st.current_in_original = cio;
  st.model = next;
  st.positivity = positivity_from(st);
  auto bad = round_trip_failures(st);
  rec.round_trip = bad.empty();
  for (const auto& b : bad) rec.notes.push_back("round trip fails for " + b);
}

void apply_implicit(TransformState& st, IterationRecord& rec, const ScaleResult& sc,
                    const std::vector<LawPlan>& plan, std::size_t it) {
  const auto& sys = st.model.system;
  std::map<std::string, Polynomial> psi;
  try {
    psi = solve_pivots(sys, plan);
  } catch (const TransformError& e) {
    rec.notes.push_back(std::string("law ODEs kept in original variables: ") + e.what());
  }
  auto f = sys.field();
  auto species = sys.species();
  std::vector<Polynomial> field = f;
  auto params = sys.parameters();
  ModelSpec next = st.model;
  auto init = sys.initial;
  for (const auto& p : plan) {
    std::optional<double> val;
    bool have = true;
    for (const auto& v : p.phi.variables()) have = have && (!sys.is_species(v) || init.count(v));
    if (have)
      val = p.phi.evaluate([&](const std::string& v) {
        if (auto i = init.find(v); i != init.end()) return i->second;
        return *sys.parameters()[*sys.parameter_index(v)].value;
      });
    if (p.exact) {
      params.push_back({p.carrier, val});
      next.e[p.carrier] = p.ts.d_q;
      MintedParameter mp{p.carrier, p.phi, p.phi.substitute(st.current_in_original), val, p.ts.d_q};
      st.minted.push_back(mp);
      st.parameter_definitions[p.carrier] = mp.law_original;
    } else {
      species.push_back(p.carrier);
      Polynomial r = law_derivative(p.phi, sys.species(), f);
      field.push_back(psi.empty() && !p.phi.is_monomial() ? r : residual_in_carrier(r, p.phi, p.carrier, psi));
      next.d[p.carrier] = p.ts.d_q;
      if (val) init[p.carrier] = *val;
      st.current_in_original[p.carrier] = p.phi.substitute(st.current_in_original);
    }
    st.constraints.push_back(Polynomial::var(p.carrier) - p.phi);
    st.renames[p.label] = p.carrier;
    st.ledger.push_back(ledger_row(it, rec.level, sc, sys, p, st));
  }
  PolySystem ns = PolySystem::from_polynomials(species, params, field);
  ns.initial = init;
  ns.user_laws = sys.user_laws;
  next.system = ns;
  st.model = next;
  rec.round_trip = true;  // original variables are all kept
}

}  // namespace

TransformState transform(const ModelSpec& m, const TransformOptions& opt) {
  TransformState st = initial_state(m);
  std::mt19937_64 rng(opt.seed);
  bool fresh = m.new_variable_names == "fresh" || opt.mode == TransformMode::Implicit;
  std::optional<std::size_t> last_level;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    ScaleResult sc = scale_model(st.model, opt.g);
    IterationRecord rec;
    rec.iteration = it;
    std::vector<LawPlan> plan;
    if (!plan_level(st, sc, rng, rec, plan, fresh)) {
      st.converged = true;
      st.stop_reason = "all levels regular";
      st.iterations.push_back(rec);
      // Post-check of the last iteration: regular levels now reach past the treated one.
      return st;
    }
    if (last_level && rec.level <= *last_level)
      rec.notes.push_back("degenerate level did not advance past " + std::to_string(*last_level));
    last_level = rec.level;
    spdlog::debug("iteration {}: level {}, {} laws", it, rec.level, plan.size());
    std::size_t first_row = st.ledger.size();
    if (opt.mode == TransformMode::Explicit) {
      apply_explicit(st, sc, rec, plan, fresh, it);
      // New law variables must be slower than their supports.
      ScaleResult after = scale_model(st.model, opt.g);
      for (std::size_t r = first_row; r < st.ledger.size(); ++r) {
        auto& row = st.ledger[r];
        if (row.exact) continue;
        auto i = st.model.system.species_index(row.new_name);
        if (!i) continue;
        auto t = species_timescale(after.assignment, st.model.system, *i);
        row.slower_after = !t || !row.tov || *t > *row.tov;
      }
      st.iterations.push_back(rec);
    } else {
      apply_implicit(st, rec, sc, plan, it);
      st.iterations.push_back(rec);
      st.stop_reason = "implicit mode treats the first degenerate level";
      return st;
    }
  }
  st.stop_reason = "iteration limit reached";
  return st;
}

TransformState transform_explicit(const ModelSpec& m, std::size_t max_iter, std::uint64_t seed) {
  TransformOptions o;
  o.max_iter = max_iter;
  o.seed = seed;
  return transform(m, o);
}

TransformState transform_implicit(const ModelSpec& m, std::uint64_t seed) {
  TransformOptions o;
  o.mode = TransformMode::Implicit;
  o.seed = seed;
  return transform(m, o);
}

nlohmann::json ledger_to_json(const TransformState& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.ledger) {
    nlohmann::json j;
    j["iteration"] = r.iteration;
    j["l"] = r.level;
    j["group"] = r.group;
    j["ToV"] = order_string(r.tov);
    j["law"] = r.law.str();
    j["law_original"] = r.law_original.str();
    j["ToC"] = order_string(r.toc);
    j["exact"] = r.exact;
    j["d_q"] = to_string(r.d_q);
    j["pivot"] = r.pivot;
    j["label"] = r.label;
    j["new_name"] = r.new_name;
    if (r.slower_after) j["slower_after"] = *r.slower_after;
    rows.push_back(j);
  }
  return rows;
}

nlohmann::json transform_report(const TransformState& s) {
  nlohmann::json j;
  j["converged"] = s.converged;
  j["stop_reason"] = s.stop_reason;
  j["model"] = model_to_json(s.model);
  j["ledger"] = ledger_to_json(s);
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : s.iterations) {
    nlohmann::json k;
    k["iteration"] = r.iteration;
    k["level"] = r.level;
    k["pivots"] = r.pivots;
    k["round_trip"] = r.round_trip;
    if (r.complete) k["complete"] = *r.complete;
    if (!r.completeness_note.empty()) k["completeness_note"] = r.completeness_note;
    nlohmann::json dets = nlohmann::json::array();
    for (const auto& d : r.determinants) {
      nlohmann::json dj{{"level", d.level}, {"size", d.size}, {"status", det_status_name(d.status)}};
      if (d.symbolic) dj["determinant"] = d.symbolic->str();
      if (!d.note.empty()) dj["note"] = d.note;
      dets.push_back(dj);
    }
    k["determinants"] = dets;
    k["notes"] = r.notes;
    its.push_back(k);
  }
  j["iterations"] = its;
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& sb : s.substitutions)
    subs.push_back({{"pivot", sb.pivot}, {"expression", sb.psi.str()}, {"law", sb.law.str()},
                    {"exact", sb.exact}, {"new_name", sb.new_name}});
  j["substitutions"] = subs;
  nlohmann::json minted = nlohmann::json::array();
  for (const auto& p : s.minted) {
    nlohmann::json m{{"name", p.name}, {"law", p.law.str()}, {"law_original", p.law_original.str()},
                     {"order", to_string(p.order)}};
    if (p.value) m["value"] = *p.value;
    minted.push_back(m);
  }
  j["new_parameters"] = minted;
  nlohmann::json pos = nlohmann::json::array();
  for (const auto& p : s.positivity) pos.push_back(p.str() + " >= 0");
  j["positivity"] = pos;
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& c : s.constraints) cons.push_back(c.str() + " = 0");
  j["constraints"] = cons;
  nlohmann::json defs = nlohmann::json::object();
  for (const auto& [v, e] : s.current_in_original) defs[v] = e.str();
  j["variables_in_original"] = defs;
  nlohmann::json ren = nlohmann::json::object();
  for (const auto& [a, b] : s.renames) ren[a] = b;
  j["renames"] = ren;
  return j;
}

}  // namespace tropored
