#include "tropored/conslaw.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>

namespace tropored {

std::string kind_name(LawKind k) {
  switch (k) {
    case LawKind::Linear: return "linear";
    case LawKind::Monomial: return "monomial";
    case LawKind::Polynomial: return "polynomial";
  }
  return "?";
}

LawKind classify_law(const Polynomial& phi) {
  bool linear = true;
  for (const auto& [m, c] : phi.terms())
    if (!(m.factors().size() == 1 && m.factors()[0].second == 1)) linear = false;
  if (linear) return LawKind::Linear;
  if (phi.size() == 1) return LawKind::Monomial;
  return LawKind::Polynomial;
}

std::vector<std::string> all_variables(const PolySystem& sys) {
  std::vector<std::string> v = sys.species();
  for (const auto& p : sys.parameters()) v.push_back(p.name);
  return v;
}

Polynomial law_derivative(const Polynomial& phi, const std::vector<std::string>& species,
                          const std::vector<Polynomial>& field) {
  Polynomial r;
  for (std::size_t i = 0; i < species.size(); ++i) {
    Polynomial d = phi.derivative(species[i]);
    if (!d.is_zero()) r += d * field[i];
  }
  return r;
}

LawVerification verify_law(const PolySystem& sys, const std::vector<Polynomial>& f1,
                           const Polynomial& phi) {
  bool nonconst = false;
  for (const auto& s : sys.species()) nonconst = nonconst || phi.depends_on(s);
  if (!nonconst) throw std::invalid_argument("conservation law candidate is constant in x");
  LawVerification v;
  v.truncated_residual = law_derivative(phi, sys.species(), f1);
  v.residual = law_derivative(phi, sys.species(), sys.field());
  v.conserved = v.truncated_residual.is_zero();
  v.exact = v.residual.is_zero();
  return v;
}

std::vector<std::size_t> law_support(const PolySystem& sys, const Polynomial& phi) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < sys.n(); ++i)
    if (!phi.derivative(sys.species()[i]).is_zero()) s.push_back(i);
  return s;
}

Polynomial linear_law(const PolySystem& sys, const std::vector<Rational>& c) {
  Polynomial p;
  for (std::size_t i = 0; i < sys.n(); ++i)
    if (c[i] != 0) p += Polynomial::term(c[i], Monomial::var(sys.species()[i]));
  return p;
}

SlownessReport slowness_report(const PolySystem& sys, const ScalingAssignment& a,
                               const Polynomial& phi) {
  auto t = law_timescale(sys, a, phi);
  SlownessReport r{t.d_q, t.mu_q, "exact"};
  if (!t.mu_q) return r;
  r.verdict = "slow";
  for (auto i : law_support(sys, phi)) {
    auto mi = species_timescale(a, sys, i);
    if (mi && !(*t.mu_q > *mi)) r.verdict = "VIOLATION";
  }
  return r;
}

namespace {

std::optional<bool> monomial_irreducible(const PolySystem& sys, const std::vector<Polynomial>& f1,
                                         const Polynomial& phi, std::string& note) {
  const auto& [m, c] = *phi.terms().begin();
  const auto& f = m.factors();
  if (f.size() > 16) {
    note = "support too large for split enumeration";
    return std::nullopt;
  }
  for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << f.size()); ++mask) {
    if (!(mask & 1)) continue;  // each unordered split once
    std::vector<Monomial::Factor> part;
    for (std::size_t k = 0; k < f.size(); ++k)
      if (mask & (std::size_t(1) << k)) part.push_back(f[k]);
    Polynomial q = Polynomial::term(1, Monomial(part));
    if (law_derivative(q, sys.species(), f1).is_zero()) return false;
  }
  return true;
}

std::optional<bool> polynomial_irreducible(const PolySystem& sys, const std::vector<Polynomial>& f1,
                                           const Polynomial& phi, std::string& note) {
  // Additive splits phi = phi_A(x_A) + phi_B(x_B) over disjoint variable sets.
  auto supp = law_support(sys, phi);
  std::vector<std::string> vars;
  for (auto i : supp) vars.push_back(sys.species()[i]);
  if (vars.size() > 16) {
    note = "support too large for split enumeration";
    return std::nullopt;
  }
  for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << vars.size()); ++mask) {
    if (!(mask & 1)) continue;
    std::set<std::string> A;
    for (std::size_t k = 0; k < vars.size(); ++k)
      if (mask & (std::size_t(1) << k)) A.insert(vars[k]);
    Polynomial pa, pb;
    bool separable = true;
    for (const auto& [m, c] : phi.terms()) {
      bool inA = false, inB = false;
      for (const auto& [v, e] : m.factors()) {
        if (!sys.is_species(v)) continue;
        (A.count(v) ? inA : inB) = true;
      }
      if (inA && inB) {
        separable = false;
        break;
      }
      (inA ? pa : pb) += Polynomial::term(c, m);
    }
    if (!separable || pa.is_constant() || pb.is_constant()) continue;
    if (law_derivative(pa, sys.species(), f1).is_zero()) return false;
  }
  note = "multiplicative splits of polynomial laws unchecked";
  return true;
}

}  // namespace

ConservationLaw analyse_law(const PolySystem& sys, const ScaleResult& sc, const Polynomial& phi) {
  ConservationLaw law;
  law.phi = phi;
  law.kind = classify_law(phi);
  law.support = law_support(sys, phi);
  if (law.kind == LawKind::Linear) {
    law.coefficients.assign(sys.n(), 0);
    for (std::size_t i = 0; i < sys.n(); ++i)
      law.coefficients[i] = phi.derivative(sys.species()[i]).constant_term();
  }
  auto f1 = sc.trunc.f1(sys);
  auto t = law_timescale(sys, sc.assignment, phi);
  law.residual = t.residual;
  law.exact = t.residual.is_zero();
  law.d_q = t.d_q;
  law.mu_q = t.mu_q;
  law.verdict = slowness_report(sys, sc.assignment, phi).verdict;
  switch (law.kind) {
    case LawKind::Linear: {
      std::vector<std::size_t> rows = law.support;
      std::vector<Rational> c;
      for (auto i : rows) c.push_back(law.coefficients[i]);
      law.irreducible = is_elementary(sc.trunc.s1.select_rows(rows), c);
      break;
    }
    case LawKind::Monomial:
      law.irreducible = monomial_irreducible(sys, f1, phi, law.irreducibility_note);
      break;
    case LawKind::Polynomial:
      law.irreducible = polynomial_irreducible(sys, f1, phi, law.irreducibility_note);
      break;
  }
  return law;
}

LawSet find_linear_laws(const PolySystem& sys, const ScaleResult& sc,
                        const std::vector<std::size_t>& rows_in) {
  std::vector<std::size_t> rows = rows_in;
  if (rows.empty())
    for (std::size_t i = 0; i < sys.n(); ++i) rows.push_back(i);
  RationalMatrix s1 = sc.trunc.s1.select_rows(rows);
  LawSet set;
  for (const auto& v : left_kernel_irreducible(s1)) {
    std::vector<Rational> c(sys.n());
    for (std::size_t k = 0; k < rows.size(); ++k) c[rows[k]] = v[k];
    set.laws.push_back(analyse_law(sys, sc, linear_law(sys, c)));
  }
  return set;
}

CompletenessReport completeness_test(const PolySystem& sys, const std::vector<Polynomial>& f1,
                                     const std::vector<Polynomial>& laws, std::mt19937_64& rng,
                                     std::size_t samples) {
  CompletenessReport rep;
  rep.n = sys.n();
  std::vector<Polynomial> stacked = f1;
  stacked.insert(stacked.end(), laws.begin(), laws.end());
  auto J = jacobian(stacked, sys.species());
  std::vector<std::vector<Polynomial>> JPhi(J.begin() + static_cast<std::ptrdiff_t>(f1.size()),
                                            J.end());
  auto vars = all_variables(sys);
  auto pts = sample_variety(f1, vars, samples, rng);
  if (!pts.found) {
    rep.status = pts.status;
    return rep;
  }
  const Point* best_point = nullptr;
  for (const auto& p : pts.points) {
    std::size_t r = evaluate_matrix(J, p).rank();
    if (r > rep.rank || !best_point) {
      rep.rank = std::max(rep.rank, r);
      best_point = &p;
    }
    if (!JPhi.empty()) rep.independence_rank = std::max(rep.independence_rank, evaluate_matrix(JPhi, p).rank());
  }
  rep.complete = rep.rank == sys.n();
  rep.independent = rep.independence_rank == laws.size();
  rep.status = pts.status;
  // Nonvanishing maximal minor: rows picked greedily at the best sample, law rows last.
  if (*rep.complete && sys.n() <= 12) {
    RationalMatrix M = evaluate_matrix(J, *best_point);
    std::vector<std::size_t> rows;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < stacked.size(); ++i) order.push_back(i);
    for (auto i : order) {
      std::vector<std::size_t> trial = rows;
      trial.push_back(i);
      if (M.select_rows(trial).rank() == trial.size()) rows = trial;
      if (rows.size() == sys.n()) break;
    }
    std::vector<std::vector<Polynomial>> sub;
    for (auto i : rows) sub.push_back(J[i]);
    rep.minor = symbolic_determinant(sub);
    rep.minor_rows = rows;
  }
  return rep;
}

std::string lemma1_violation(const PolySystem& sys, const ScalingAssignment& a,
                             const ConservationLaw& law) {
  if (law.kind != LawKind::Linear || law.exact || law.irreducible != std::optional<bool>(true))
    return "";
  std::optional<Rational> common;
  for (auto i : law.support) {
    if (!a.b[i]) continue;
    Rational v = Rational(a.o) * a.d[i] + *a.b[i];
    if (common && *common != v)
      return "species orders of the law differ on its support: " + law.phi.str();
    common = v;
  }
  (void)sys;
  return "";
}

std::string dominant_part_violation(const PolySystem& sys, const ScalingAssignment& a,
                                    const ConservationLaw& law) {
  if (law.exact || law.irreducible != std::optional<bool>(true)) return "";
  Rational slowest;
  bool any = false;
  for (auto i : law.support) {
    auto t = species_timescale(a, sys, i);
    if (!t) continue;
    if (!any || *t > slowest) slowest = *t;
    any = true;
  }
  if (!any) return "";
  Polynomial dom = law.phi.dominant_part(a.weights(sys));
  for (const auto& v : dom.variables()) {
    auto i = sys.species_index(v);
    if (!i) continue;
    auto t = species_timescale(a, sys, *i);
    if (t && *t != slowest)
      return "dominant part of " + law.phi.str() + " involves " + v + " outside the slowest group";
  }
  return "";
}

std::string slowness_violation(const PolySystem& sys, const ScalingAssignment& a,
                               const ConservationLaw& law) {
  if (law.irreducible != std::optional<bool>(true)) return "";
  auto r = slowness_report(sys, a, law.phi);
  if (r.verdict == "VIOLATION") return "law " + law.phi.str() + " is not slower than its support";
  if (!r.mu_q && !law.exact) return "residual vanishes but law flagged inexact";
  return "";
}

nlohmann::json law_to_json(const PolySystem& sys, const ConservationLaw& law) {
  nlohmann::json j;
  j["law"] = law.phi.str();
  j["kind"] = kind_name(law.kind);
  nlohmann::json s = nlohmann::json::array();
  for (auto i : law.support) s.push_back(sys.species()[i]);
  j["support"] = s;
  j["exact"] = law.exact;
  j["d_q"] = law.d_q.get_str();
  j["mu_q"] = order_string(law.mu_q);
  j["irreducible"] = law.irreducible ? nlohmann::json(*law.irreducible) : nlohmann::json("unknown");
  if (!law.irreducibility_note.empty()) j["irreducibility_note"] = law.irreducibility_note;
  j["residual"] = law.residual.str();
  j["verdict"] = law.verdict;
  j["terms"] = polynomial_to_json(law.phi);
  return j;
}

}  // namespace tropored
