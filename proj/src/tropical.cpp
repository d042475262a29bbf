#include "tropored/tropical.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tropored {

Rational AffineForm::eval(const std::vector<Rational>& d) const {
  Rational v = c;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0) v += a[i] * d[i];
  return v;
}

namespace {

LinearConstraint difference(const AffineForm& lhs, const AffineForm& rhs, Relation rel) {
  // lhs - rhs (rel) 0  ->  (a_l - a_r) . d (rel) c_r - c_l
  LinearConstraint c{std::vector<Rational>(lhs.a.size()), rel, rhs.c - lhs.c};
  for (std::size_t i = 0; i < lhs.a.size(); ++i) c.a[i] = lhs.a[i] - rhs.a[i];
  return c;
}

bool trivially_true(const LinearConstraint& c) {
  for (const auto& v : c.a)
    if (v != 0) return false;
  switch (c.rel) {
    case Relation::Eq: return c.b == 0;
    case Relation::Le: return 0 <= c.b;
    case Relation::Ge: return 0 >= c.b;
    case Relation::Gt: return 0 > c.b;
  }
  return false;
}

LinearConstraint negated(const LinearConstraint& c) {
  // Complement of a half-space as a single constraint (Eq has two pieces; handled by caller).
  LinearConstraint n = c;
  switch (c.rel) {
    case Relation::Le: n.rel = Relation::Gt; break;  // a.x > b
    case Relation::Ge:
      for (auto& v : n.a) v = -v;
      n.b = -n.b;
      n.rel = Relation::Gt;  // -a.x > -b
      break;
    case Relation::Gt:
      n.rel = Relation::Le;
      break;
    case Relation::Eq: throw std::logic_error("negated: equality");
  }
  return n;
}

std::string form_string(const std::vector<Rational>& a, const std::vector<std::string>& names) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    Rational v = a[i];
    if (first) {
      if (v < 0) os << "-";
    } else {
      os << (v < 0 ? " - " : " + ");
    }
    Rational m = abs(v);
    if (m != 1) os << to_string(m) << "*";
    os << names[i];
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

const char* rel_string(Relation r) {
  switch (r) {
    case Relation::Eq: return " = ";
    case Relation::Le: return " <= ";
    case Relation::Ge: return " >= ";
    case Relation::Gt: return " > ";
  }
  return " ? ";
}

std::vector<std::string> var_names(const std::vector<std::string>& species) {
  std::vector<std::string> out;
  for (const auto& s : species) out.push_back("d_" + s);
  return out;
}

// Primitive integer coefficients, positive scaling only.
LinearConstraint normalized(LinearConstraint c) {
  auto p = primitive_integer(c.a);
  for (std::size_t j = 0; j < c.a.size(); ++j)
    if (c.a[j] != 0) {
      Rational f = abs(p[j] / c.a[j]);
      for (auto& v : c.a) v *= f;
      c.b *= f;
      break;
    }
  return c;
}

}  // namespace

// ---------------------------------------------------------------- Polyhedron

bool Polyhedron::empty() const {
  std::vector<Rational> p;
  return !find_point(n_, cons_, p);
}

bool Polyhedron::contains(const std::vector<Rational>& x) const {
  for (const auto& c : cons_)
    if (!satisfies(c, x)) return false;
  return true;
}

bool Polyhedron::intersects_halfspace(const LinearConstraint& c) const {
  auto cons = cons_;
  cons.push_back(c);
  std::vector<Rational> p;
  return find_point(n_, cons, p);
}

bool Polyhedron::subset_of(const Polyhedron& o) const {
  if (empty()) return true;
  for (const auto& c : o.cons_) {
    if (c.rel == Relation::Eq) {
      LinearConstraint gt{c.a, Relation::Gt, c.b};
      LinearConstraint lt = negated(LinearConstraint{c.a, Relation::Ge, c.b});
      if (intersects_halfspace(gt) || intersects_halfspace(lt)) return false;
    } else if (intersects_halfspace(negated(c))) {
      return false;
    }
  }
  return true;
}

Rational Polyhedron::strict_margin(const Rational& cap) const {
  bool strict = std::any_of(cons_.begin(), cons_.end(),
                            [](const LinearConstraint& c) { return c.rel == Relation::Gt; });
  if (!strict) return cap;
  std::vector<LinearConstraint> ext;
  for (const auto& c : cons_) {
    LinearConstraint e = c;
    e.a.push_back(0);
    if (c.rel == Relation::Gt) {
      e.a.back() = -1;
      e.rel = Relation::Ge;
    }
    ext.push_back(std::move(e));
  }
  std::vector<Rational> t(n_ + 1, 0);
  t.back() = 1;
  ext.push_back({t, Relation::Le, cap});
  std::vector<Rational> cost(n_ + 1, 0);
  cost.back() = -1;
  auto r = lp_minimize(n_ + 1, ext, cost);
  if (r.status != LpResult::Status::Optimal || r.x.back() <= 0) return 0;
  return r.x.back();
}

Polyhedron Polyhedron::simplified() const {
  std::vector<std::vector<Rational>> eq_rows;
  std::vector<LinearConstraint> ineq;
  for (const auto& c : cons_) {
    if (trivially_true(c)) continue;
    if (c.rel == Relation::Eq) {
      auto row = c.a;
      row.push_back(c.b);
      eq_rows.push_back(row);
    } else {
      ineq.push_back(c);
    }
  }
  std::vector<LinearConstraint> out;
  if (!eq_rows.empty()) {
    RationalMatrix m(eq_rows);
    auto piv = m.rref();
    for (std::size_t i = 0; i < piv.size(); ++i) {
      LinearConstraint c{std::vector<Rational>(n_), Relation::Eq, m(i, n_)};
      for (std::size_t j = 0; j < n_; ++j) c.a[j] = m(i, j);
      out.push_back(normalized(c));
    }
  }
  for (auto& c : ineq) {
    if (c.rel == Relation::Le) {
      for (auto& v : c.a) v = -v;
      c.b = -c.b;
      c.rel = Relation::Ge;
    }
    c = normalized(c);
  }
  std::vector<bool> keep(ineq.size(), true);
  for (std::size_t i = 0; i < ineq.size(); ++i) {
    std::vector<LinearConstraint> rest = out;
    for (std::size_t j = 0; j < ineq.size(); ++j)
      if (j != i && keep[j]) rest.push_back(ineq[j]);
    Polyhedron others(n_, rest);
    if (!others.intersects_halfspace(negated(ineq[i]))) keep[i] = false;
  }
  for (std::size_t i = 0; i < ineq.size(); ++i)
    if (keep[i]) out.push_back(ineq[i]);
  return Polyhedron(n_, out);
}

std::vector<std::string> Polyhedron::equality_strings(const std::vector<std::string>& names) const {
  std::vector<std::string> out;
  for (const auto& c : cons_)
    if (c.rel == Relation::Eq) out.push_back(form_string(c.a, names) + " = " + to_string(c.b));
  return out;
}

std::vector<std::string> Polyhedron::inequality_strings(const std::vector<std::string>& names) const {
  std::vector<std::string> out;
  for (const auto& c : cons_)
    if (c.rel != Relation::Eq)
      out.push_back(form_string(c.a, names) + rel_string(c.rel) + to_string(c.b));
  return out;
}

// -------------------------------------------------------------- constraints

std::vector<Rational> rate_orders(const PolySystem& sys, const OrderMap& e) {
  std::vector<Rational> out;
  for (const auto& rate : sys.rates()) {
    Rational o = 0;
    for (const auto& [k, p] : rate.params.factors()) {
      auto it = e.find(k);
      if (it == e.end()) throw ModelError("no order for parameter " + k);
      o += it->second * p;
    }
    out.push_back(o);
  }
  return out;
}

namespace {

AffineForm psi_form(const PolySystem& sys, const std::vector<Rational>& ej, std::size_t i,
                    std::size_t j) {
  AffineForm f{std::vector<Rational>(sys.n(), 0), ej[j]};
  for (const auto& [x, p] : sys.rates()[j].species.factors()) f.a[*sys.species_index(x)] += p;
  f.a[i] -= 1;
  return f;
}

}  // namespace

MinPlusConstraintSystem build_constraints(const PolySystem& sys, const OrderMap& e,
                                          const std::vector<std::size_t>& fast,
                                          const std::vector<ExactLawOrder>& laws) {
  MinPlusConstraintSystem cs;
  cs.species = sys.species();
  auto ej = rate_orders(sys, e);
  std::vector<bool> is_fast(sys.n(), false);
  for (auto i : fast) {
    if (i >= sys.n()) throw ModelError("fast species index out of range");
    is_fast[i] = true;
  }
  for (std::size_t i = 0; i < sys.n(); ++i) (is_fast[i] ? cs.fast : cs.slow).push_back(i);
  for (auto i : cs.fast) {
    MinEquation eq{sys.species()[i], {}, {}, i};
    for (std::size_t j = 0; j < sys.r(); ++j) {
      auto s = sys.stoich()(i, j);
      if (s > 0) eq.pos.push_back(psi_form(sys, ej, i, j));
      if (s < 0) eq.neg.push_back(psi_form(sys, ej, i, j));
    }
    if (eq.pos.empty() && eq.neg.empty()) continue;  // constant row: nothing to balance
    if (eq.pos.empty() || eq.neg.empty()) cs.infeasible_by_sign.push_back(sys.species()[i]);
    cs.equations.push_back(std::move(eq));
  }
  if (!cs.fast.empty())
    for (auto s : cs.slow)
      for (std::size_t j = 0; j < sys.r(); ++j)
        if (sys.stoich()(s, j) != 0) cs.slow_terms.push_back(psi_form(sys, ej, s, j));
  for (std::size_t q = 0; q < laws.size(); ++q) {
    if (!laws[q].order) continue;
    MinEquation eq{"law " + laws[q].phi.str(), {}, {}, std::nullopt};
    for (const auto& [mono, coef] : laws[q].phi.terms()) {
      AffineForm f{std::vector<Rational>(sys.n(), 0), 0};
      for (const auto& [v, p] : mono.factors()) {
        if (auto i = sys.species_index(v)) f.a[*i] += p;
        else if (auto it = e.find(v); it != e.end()) f.c += it->second * p;
        else throw ModelError("law mentions unknown symbol " + v);
      }
      eq.pos.push_back(f);
    }
    eq.neg.push_back(AffineForm{std::vector<Rational>(sys.n(), 0), *laws[q].order});
    cs.equations.push_back(std::move(eq));
  }
  return cs;
}

namespace {

void add_choice(const MinPlusConstraintSystem& cs, const MinEquation& eq, std::size_t p,
                std::size_t q, std::vector<LinearConstraint>& out) {
  const AffineForm& m = eq.pos[p];
  auto push = [&](LinearConstraint c) {
    if (!trivially_true(c)) out.push_back(std::move(c));
  };
  push(difference(m, eq.neg[q], Relation::Eq));
  for (std::size_t t = 0; t < eq.pos.size(); ++t)
    if (t != p) push(difference(m, eq.pos[t], Relation::Le));
  for (std::size_t t = 0; t < eq.neg.size(); ++t)
    if (t != q) push(difference(m, eq.neg[t], Relation::Le));
  if (eq.row)
    for (const auto& s : cs.slow_terms) push(difference(s, m, Relation::Gt));
}

// Rows with one-sided signs can never balance; a trivially false constraint keeps them out.
LinearConstraint never(std::size_t n) { return {std::vector<Rational>(n, 0), Relation::Gt, 0}; }

}  // namespace

Polyhedron branch_polyhedron(const MinPlusConstraintSystem& cs,
                             const std::vector<std::pair<std::size_t, std::size_t>>& choice) {
  if (choice.size() != cs.equations.size()) throw std::invalid_argument("choice size mismatch");
  Polyhedron p(cs.nvars());
  std::vector<LinearConstraint> cons;
  for (std::size_t k = 0; k < choice.size(); ++k) {
    const auto& eq = cs.equations[k];
    if (eq.pos.empty() || eq.neg.empty()) {
      cons.push_back(never(cs.nvars()));
      continue;
    }
    add_choice(cs, eq, choice[k].first, choice[k].second, cons);
  }
  return Polyhedron(cs.nvars(), cons);
}

namespace {

struct Search {
  const MinPlusConstraintSystem& cs;
  std::vector<std::size_t> order;
  std::size_t budget;
  std::size_t branches = 0;
  bool truncated = false;
  std::vector<Polyhedron> leaves;

  void run(std::size_t depth, std::vector<LinearConstraint>& cons) {
    if (truncated) return;
    if (depth == order.size()) {
      leaves.emplace_back(cs.nvars(), cons);
      return;
    }
    const auto& eq = cs.equations[order[depth]];
    for (std::size_t p = 0; p < eq.pos.size(); ++p)
      for (std::size_t q = 0; q < eq.neg.size(); ++q) {
        if (++branches > budget) {
          truncated = true;
          return;
        }
        std::size_t mark = cons.size();
        add_choice(cs, eq, p, q, cons);
        std::vector<Rational> pt;
        if (find_point(cs.nvars(), cons, pt)) run(depth + 1, cons);
        cons.resize(mark);
        if (truncated) return;
      }
  }
};

}  // namespace

SolveResult solve(const MinPlusConstraintSystem& cs, std::size_t max_branches) {
  SolveResult res;
  if (!cs.infeasible_by_sign.empty()) return res;
  Search s{cs, {}, max_branches, 0, false, {}};
  s.order.resize(cs.equations.size());
  std::iota(s.order.begin(), s.order.end(), 0);
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t a, std::size_t b) {
    return cs.equations[a].pos.size() * cs.equations[a].neg.size() <
           cs.equations[b].pos.size() * cs.equations[b].neg.size();
  });
  std::vector<LinearConstraint> cons;
  s.run(0, cons);
  res.truncated = s.truncated;
  res.branches = s.branches;

  // Keep maximal polyhedra; among equal ones the first found.
  std::vector<Polyhedron> simp;
  for (const auto& l : s.leaves) simp.push_back(l.simplified());
  std::vector<bool> keep(simp.size(), true);
  for (std::size_t i = 0; i < simp.size(); ++i) {
    for (std::size_t j = 0; j < simp.size() && keep[i]; ++j) {
      if (i == j || !keep[j]) continue;
      if (simp[i].subset_of(simp[j]) && (!simp[j].subset_of(simp[i]) || j < i)) keep[i] = false;
    }
  }
  auto kind = cs.slow.empty() ? EquilibrationKind::Total : EquilibrationKind::Partial;
  for (std::size_t i = 0; i < simp.size(); ++i) {
    if (!keep[i]) continue;
    EquilibrationSolution sol;
    sol.fast_set = cs.fast;
    sol.kind = kind;
    sol.polyhedron = simp[i];
    sol.d = *representative(simp[i], std::nullopt);
    res.solutions.push_back(std::move(sol));
  }
  return res;
}

// ------------------------------------------------------------------- verify

VerifyResult verify(const PolySystem& sys, const OrderMap& e, const std::vector<Rational>& d,
                    const std::vector<std::size_t>& fast, const std::vector<ExactLawOrder>& laws) {
  if (d.size() != sys.n()) throw ModelError("order vector has the wrong length");
  auto cs = build_constraints(sys, e, fast, laws);
  VerifyResult r;
  auto minimum = [&](const std::vector<AffineForm>& fs) {
    std::optional<Rational> m;
    for (const auto& f : fs) {
      Rational v = f.eval(d);
      if (!m || v < *m) m = v;
    }
    return m;
  };
  std::optional<Rational> fast_max;
  for (const auto& eq : cs.equations) {
    auto mp = minimum(eq.pos), mn = minimum(eq.neg);
    if (!mp || !mn || *mp != *mn) {
      r.ok = false;
      r.violations.push_back(eq.label + ": min positive " + order_string(mp) + " != min negative " +
                             order_string(mn));
    }
    if (eq.row && mp && mn) {
      Rational t = std::min(*mp, *mn);
      if (!fast_max || t > *fast_max) fast_max = t;
    }
  }
  if (fast_max && !cs.slow_terms.empty()) {
    auto slow_min = minimum(cs.slow_terms);
    if (*slow_min <= *fast_max) {
      r.ok = false;
      r.violations.push_back("timescale: slowest fast order " + to_string(*fast_max) +
                             " not below fastest slow order " + to_string(*slow_min));
    }
  }
  return r;
}

// ---------------------------------------------------------- representatives

namespace {

// Orthogonal projection of `x` onto {A y = b}; empty when inconsistent.
std::optional<std::vector<Rational>> project(const std::vector<LinearConstraint>& eqs,
                                             const std::vector<Rational>& x) {
  std::size_t n = x.size();
  if (eqs.empty()) return x;
  std::vector<std::vector<Rational>> rows;
  for (const auto& c : eqs) {
    auto r = c.a;
    r.push_back(c.b);
    rows.push_back(r);
  }
  RationalMatrix m(rows);
  auto piv = m.rref();
  if (!piv.empty() && piv.back() == n) return std::nullopt;
  std::size_t k = piv.size();
  if (k == 0) return x;
  RationalMatrix A(k, n);
  std::vector<Rational> b(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) A(i, j) = m(i, j);
    b[i] = m(i, n);
  }
  auto G = (A * A.transpose()).inverse();
  auto Ax = A * x;
  for (std::size_t i = 0; i < k; ++i) Ax[i] -= b[i];
  auto lam = G * Ax;
  auto corr = A.transpose() * lam;
  std::vector<Rational> y = x;
  for (std::size_t j = 0; j < n; ++j) y[j] -= corr[j];
  return y;
}

Rational sq_dist(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Strict rows tightened by a fixed margin so the closest point is attained.
std::vector<LinearConstraint> closed_constraints(const Polyhedron& p) {
  Rational t = p.strict_margin(1);
  Rational m = t >= 1 ? Rational(1) : Rational(t / 2);
  std::vector<LinearConstraint> out;
  for (auto c : p.constraints()) {
    if (c.rel == Relation::Gt) {
      c.rel = Relation::Ge;
      c.b += m;
    }
    out.push_back(c);
  }
  return out;
}

std::optional<std::vector<Rational>> l1_closest(std::size_t n, const std::vector<LinearConstraint>& cons,
                                                const std::vector<Rational>& anchor) {
  // Variables (d, u) with u_i >= |d_i - anchor_i|.
  std::vector<LinearConstraint> ext;
  for (const auto& c : cons) {
    auto a = c.a;
    a.resize(2 * n, 0);
    ext.push_back({a, c.rel, c.b});
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rational> a(2 * n, 0);
    a[n + i] = 1;
    a[i] = -1;
    ext.push_back({a, Relation::Ge, -anchor[i]});
    a[i] = 1;
    ext.push_back({a, Relation::Ge, anchor[i]});
  }
  std::vector<Rational> cost(2 * n, 0);
  for (std::size_t i = 0; i < n; ++i) cost[n + i] = 1;
  auto r = lp_minimize(2 * n, ext, cost);
  if (r.status != LpResult::Status::Optimal) return std::nullopt;
  // Lexicographic tie-break at the optimal L1 distance.
  ext.push_back({cost, Relation::Eq, r.value});
  std::vector<Rational> x(r.x.begin(), r.x.begin() + n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rational> ci(2 * n, 0);
    ci[i] = 1;
    auto ri = lp_minimize(2 * n, ext, ci);
    if (ri.status != LpResult::Status::Optimal) break;
    x[i] = ri.value;
    ext.push_back({ci, Relation::Eq, ri.value});
  }
  return x;
}

constexpr std::size_t kMaxActiveSet = 12;

}  // namespace

std::optional<std::vector<Rational>> representative(const Polyhedron& p,
                                                    const std::optional<std::vector<Rational>>& anchor) {
  if (p.empty()) return std::nullopt;
  std::size_t n = p.dim();
  auto cons = closed_constraints(p);
  if (!anchor) return l1_closest(n, cons, std::vector<Rational>(n, 0));
  if (anchor->size() != n) throw std::invalid_argument("anchor has the wrong length");
  std::vector<LinearConstraint> eqs, ineqs;
  for (const auto& c : cons) (c.rel == Relation::Eq ? eqs : ineqs).push_back(c);
  if (ineqs.size() > kMaxActiveSet) return l1_closest(n, cons, *anchor);
  // The Euclidean projection lies on some face; enumerate active sets.
  std::optional<std::vector<Rational>> best;
  Rational best_d;
  for (std::size_t mask = 0; mask < (std::size_t{1} << ineqs.size()); ++mask) {
    auto act = eqs;
    for (std::size_t i = 0; i < ineqs.size(); ++i)
      if (mask >> i & 1) act.push_back({ineqs[i].a, Relation::Eq, ineqs[i].b});
    auto y = project(act, *anchor);
    if (!y) continue;
    bool ok = std::all_of(cons.begin(), cons.end(), [&](const LinearConstraint& c) { return satisfies(c, *y); });
    if (!ok) continue;
    Rational dist = sq_dist(*y, *anchor);
    if (!best || dist < best_d || (dist == best_d && *y < *best)) {
      best = y;
      best_d = dist;
    }
  }
  return best;
}

EquilibrationSolution select_representative(const std::vector<EquilibrationSolution>& sols,
                                            const std::optional<std::vector<Rational>>& anchor) {
  if (sols.empty()) throw std::invalid_argument("no equilibration solutions to choose from");
  std::optional<EquilibrationSolution> best;
  Rational best_key;
  for (const auto& s : sols) {
    auto y = representative(s.polyhedron, anchor);
    if (!y) continue;
    Rational key = 0;
    if (anchor) {
      key = sq_dist(*y, *anchor);
    } else {
      for (const auto& v : *y) key += abs(v);
    }
    if (!best || key < best_key) {
      best = s;
      best->d = *y;
      best_key = key;
    }
  }
  if (!best) throw std::invalid_argument("all equilibration solutions are empty");
  return *best;
}

nlohmann::json solution_to_json(const PolySystem& sys, const EquilibrationSolution& s) {
  auto names = var_names(sys.species());
  nlohmann::json j;
  nlohmann::json d = nlohmann::json::object();
  for (std::size_t i = 0; i < sys.n(); ++i) d[sys.species()[i]] = to_string(s.d[i]);
  j["d"] = d;
  j["representative"] = d;
  nlohmann::json fast = nlohmann::json::array();
  for (auto i : s.fast_set) fast.push_back(sys.species()[i]);
  j["fast_set"] = fast;
  j["kind"] = s.kind == EquilibrationKind::Total ? "total" : "partial";
  j["equalities"] = s.polyhedron.equality_strings(names);
  j["inequalities"] = s.polyhedron.inequality_strings(names);
  return j;
}

}  // namespace tropored
