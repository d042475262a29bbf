#include "tropored/reduce.hpp"

#include "tropored/chains.hpp"
#include "tropored/transform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace tropored {

std::string variant_name(ReduceVariant v) {
  switch (v) {
    case ReduceVariant::Nested: return "nested";
    case ReduceVariant::Simple: return "simple";
    case ReduceVariant::Slowest: return "slowest";
  }
  return "?";
}

ReduceVariant parse_variant(const std::string& s) {
  if (s == "nested") return ReduceVariant::Nested;
  if (s == "simple") return ReduceVariant::Simple;
  if (s == "slowest") return ReduceVariant::Slowest;
  throw ReduceError("unknown reduction variant '" + s + "'");
}

std::string SolveStep::closed_form() const {
  switch (kind) {
    case Kind::Linear: {
      std::string out;
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i) out += "; ";
        out += vars[i] + " = ";
        if (denominator == Polynomial(1)) {
          out += numerators[i].str();
        } else {
          out += "(" + numerators[i].str() + ")/(" + denominator.str() + ")";
        }
      }
      return out;
    }
    case Kind::Quadratic:
      return vars[0] + " = (-(" + b.str() + ") " + (branch > 0 ? "+" : "-") + " sqrt((" + b.str() + ")^2 - 4*(" +
             a.str() + ")*(" + c.str() + ")))/(2*(" + a.str() + "))";
    case Kind::Newton: {
      std::string out = "numeric:";
      for (const auto& v : vars) out += " " + v;
      return out;
    }
  }
  return "";
}

namespace {

bool leading_positive(const Polynomial& p) { return p.is_zero() || p.terms().begin()->second > 0; }

std::set<std::string> unknowns_in(const Polynomial& p, const std::set<std::string>& unknown) {
  std::set<std::string> out;
  for (const auto& v : p.variables())
    if (unknown.count(v)) out.insert(v);
  return out;
}

// Unknowns enter each equation with degree <= 1 and never multiplied together.
bool jointly_linear(const std::vector<Polynomial>& eqs, const std::set<std::string>& unknown) {
  for (const auto& e : eqs)
    for (const auto& [mono, c] : e.terms()) {
      int deg = 0;
      for (const auto& [v, k] : mono.factors())
        if (unknown.count(v)) {
          if (k != 1) return false;
          ++deg;
        }
      if (deg > 1) return false;
    }
  return true;
}

// Divides numerators and denominator by their common monomial factor, and by
// the denominator when it is a single term.
void cancel_common(std::vector<Polynomial>& nums, Polynomial& den) {
  std::map<std::string, int> common;
  bool first = true;
  auto visit = [&](const Polynomial& p) {
    for (const auto& [mono, c] : p.terms()) {
      std::map<std::string, int> e;
      for (const auto& [v, k] : mono.factors()) e[v] = k;
      if (first) {
        common = e;
        first = false;
        continue;
      }
      for (auto it = common.begin(); it != common.end();) {
        auto f = e.find(it->first);
        int k = f == e.end() ? 0 : std::min(f->second, it->second);
        if (k <= 0) it = common.erase(it);
        else (it++)->second = k;
      }
    }
  };
  for (const auto& n : nums) visit(n);
  visit(den);
  Polynomial g(1);
  for (const auto& [v, k] : common) g *= Polynomial::term(1, Monomial::var(v, k));
  Polynomial inv = g.pow(-1);
  for (auto& n : nums) n *= inv;
  den *= inv;
  if (den.is_monomial() && !den.is_constant()) return;
  if (den.is_constant()) {
    Rational c = den.constant_term();
    for (auto& n : nums) n *= Polynomial(Rational(1) / c);
    den = Polynomial(1);
  }
}

std::vector<SolveStep> build_plan(std::vector<Polynomial> eqs, const std::vector<std::string>& slaved,
                                  const std::vector<std::string>& owners) {
  std::vector<SolveStep> plan;
  std::set<std::string> unknown(slaved.begin(), slaved.end());
  std::vector<std::string> owner = owners;
  while (!unknown.empty()) {
    // Single-unknown equations, linear before quadratic, own row first.
    int best = -1, best_score = 1 << 30;
    std::string best_var;
    for (std::size_t e = 0; e < eqs.size(); ++e) {
      auto u = unknowns_in(eqs[e], unknown);
      if (u.size() != 1) continue;
      const auto& v = *u.begin();
      int deg = eqs[e].max_degree(v);
      if (eqs[e].min_degree(v) < 0 || deg > 2) continue;
      int score = deg * 4 + (owner[e] == v ? 0 : 2);
      if (score < best_score) {
        best = static_cast<int>(e);
        best_score = score;
        best_var = v;
      }
    }
    if (best >= 0) {
      const Polynomial& eq = eqs[static_cast<std::size_t>(best)];
      SolveStep s;
      s.vars = {best_var};
      s.equations = {eq};
      if (eq.max_degree(best_var) == 1) {
        s.kind = SolveStep::Kind::Linear;
        Polynomial c1 = eq.coefficient(best_var, 1), c0 = eq.coefficient(best_var, 0);
        if (!leading_positive(c1)) {
          c1 = -c1;
          c0 = -c0;
        }
        s.denominator = c1;
        s.numerators = {-c0};
        cancel_common(s.numerators, s.denominator);
      } else {
        s.kind = SolveStep::Kind::Quadratic;
        s.a = eq.coefficient(best_var, 2);
        s.b = eq.coefficient(best_var, 1);
        s.c = eq.coefficient(best_var, 0);
        if (!leading_positive(s.a)) {
          s.a = -s.a;
          s.b = -s.b;
          s.c = -s.c;
        }
      }
      plan.push_back(s);
      unknown.erase(best_var);
      eqs.erase(eqs.begin() + best);
      owner.erase(owner.begin() + best);
      continue;
    }
    // Remaining block.
    SolveStep s;
    s.vars.assign(unknown.begin(), unknown.end());
    std::sort(s.vars.begin(), s.vars.end(), name_less);
    s.equations = eqs;
    s.kind = SolveStep::Kind::Newton;
    if (eqs.size() == unknown.size() && unknown.size() <= 4 && jointly_linear(eqs, unknown)) {
      // Cramer's rule.
      const std::size_t n = unknown.size();
      std::vector<std::vector<Polynomial>> A(n, std::vector<Polynomial>(n));
      std::vector<Polynomial> rhs(n);
      for (std::size_t i = 0; i < n; ++i) {
        Polynomial rest = eqs[i];
        for (std::size_t j = 0; j < n; ++j) {
          A[i][j] = eqs[i].coefficient(s.vars[j], 1);
          rest -= A[i][j] * Polynomial::var(s.vars[j]);
        }
        rhs[i] = -rest;
      }
      Polynomial det = symbolic_determinant(A);
      if (!det.is_zero()) {
        s.kind = SolveStep::Kind::Linear;
        int sign = leading_positive(det) ? 1 : -1;
        s.denominator = det * Polynomial(sign);
        for (std::size_t j = 0; j < n; ++j) {
          auto Aj = A;
          for (std::size_t i = 0; i < n; ++i) Aj[i][j] = rhs[i];
          s.numerators.push_back(symbolic_determinant(Aj) * Polynomial(sign));
        }
        cancel_common(s.numerators, s.denominator);
      }
    }
    plan.push_back(s);
    break;
  }
  return plan;
}

}  // namespace

struct CompiledStep {
  std::vector<std::size_t> idx;
  NumericPolys num, den, abc, eq;
  NumericField field;  // Newton blocks
  int orientation = 1;
};

struct EliminatorImpl {
  std::vector<std::string> vars;
  std::map<std::string, std::size_t> index;
  std::vector<CompiledStep> steps;
  NumericPolys slaved_rows;

  explicit EliminatorImpl(const ReducedModel& r) {
    vars = r.slaved;
    vars.insert(vars.end(), r.driving.begin(), r.driving.end());
    vars.insert(vars.end(), r.quenched.begin(), r.quenched.end());
    for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i]] = i;
    for (const auto& s : r.plan) {
      CompiledStep c;
      for (const auto& v : s.vars) c.idx.push_back(index.at(v));
      c.eq = NumericPolys(s.equations, vars, r.parameters);
      if (s.kind == SolveStep::Kind::Linear) {
        c.num = NumericPolys(s.numerators, vars, r.parameters);
        c.den = NumericPolys({s.denominator}, vars, r.parameters);
      } else if (s.kind == SolveStep::Kind::Quadratic) {
        c.abc = NumericPolys({s.a, s.b, s.c}, vars, r.parameters);
        Polynomial lead = s.equations[0].coefficient(s.vars[0], 2);
        c.orientation = lead == s.a ? 1 : -1;
      } else {
        c.field = NumericField(s.equations, vars, r.parameters);
      }
      steps.push_back(std::move(c));
    }
    slaved_rows = NumericPolys(r.slaved_equations, vars, r.parameters);
  }
};

namespace {

// Positive root, the stable one (d eq / dv < 0) when both are positive.
double quadratic_root(double a, double b, double c, int orientation, int& branch) {
  double scale = std::abs(b) + std::abs(c);
  if (std::abs(a) <= 1e-14 * scale) {
    branch = 1;
    if (b == 0) throw ReduceError("degenerate quadratic quasi-steady state equation");
    return -c / b;
  }
  double disc = b * b - 4 * a * c;
  if (disc < 0) {
    if (disc > -1e-12 * b * b) disc = 0;
    else throw ReduceError("no positive quasi-steady state (complex roots)");
  }
  double sq = std::sqrt(disc);
  // Cancellation-free pair.
  double q = -0.5 * (b + (b >= 0 ? sq : -sq));
  double r1 = q / a, r2 = q != 0 ? c / q : r1;
  double rp = std::max(r1, r2), rm = std::min(r1, r2);
  // With a > 0 the '+' root is the larger one.
  double plus = a > 0 ? rp : rm, minus = a > 0 ? rm : rp;
  auto stable = [&](double v) { return orientation * (2 * a * v + b) < 0; };
  bool pp = plus > 0, mp = minus > 0;
  if (pp && mp) {
    if (stable(plus) || !stable(minus)) {
      branch = 1;
      return plus;
    }
    branch = -1;
    return minus;
  }
  if (pp) {
    branch = 1;
    return plus;
  }
  if (mp) {
    branch = -1;
    return minus;
  }
  throw ReduceError("no positive quasi-steady state (both roots nonpositive)");
}

std::map<std::string, double> run_plan(const ReducedModel& r, const EliminatorImpl& ev,
                                       const std::map<std::string, double>& known,
                                       const std::map<std::string, double>& guess, std::vector<int>* branches) {
  std::vector<double> x(ev.vars.size(), 1.0);
  for (std::size_t i = 0; i < ev.vars.size(); ++i) {
    const auto& v = ev.vars[i];
    if (auto it = known.find(v); it != known.end()) {
      x[i] = it->second;
    } else if (auto g = guess.find(v); g != guess.end() && g->second > 0) {
      x[i] = g->second;
    } else if (i >= r.slaved.size()) {
      throw ReduceError("no value for " + v);
    }
  }
  for (std::size_t s = 0; s < r.plan.size(); ++s) {
    const auto& step = r.plan[s];
    const auto& c = ev.steps[s];
    switch (step.kind) {
      case SolveStep::Kind::Linear: {
        double d = c.den.eval(0, x.data());
        if (d == 0) throw ReduceError("singular linear quasi-steady state block");
        for (std::size_t j = 0; j < c.idx.size(); ++j) x[c.idx[j]] = c.num.eval(j, x.data()) / d;
        break;
      }
      case SolveStep::Kind::Quadratic: {
        int branch = 1;
        x[c.idx[0]] = quadratic_root(c.abc.eval(0, x.data()), c.abc.eval(1, x.data()), c.abc.eval(2, x.data()),
                                     c.orientation, branch);
        if (branches) branches->push_back(branch);
        break;
      }
      case SolveStep::Kind::Newton: {
        auto res = newton_positive(c.field, c.idx, x, 1e-13, 300);
        if (!res.ok) throw ReduceError("Newton failed on the quasi-steady state block: " + res.note);
        x = res.x;
        break;
      }
    }
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < r.slaved.size(); ++i) out[ev.vars[i]] = x[i];
  double res = scaled_residual(ev.slaved_rows, x.data());
  if (!(res < 1e-10)) throw ReduceError("quasi-steady state residual " + std::to_string(res) + " exceeds 1e-10");
  for (std::size_t i = 0; i < r.slaved.size(); ++i)
    if (!(x[i] > 0)) throw ReduceError("no positive quasi-steady state for " + ev.vars[i]);
  return out;
}

}  // namespace

ReducedModel reduce_at(const ModelSpec& m, std::size_t l, ReduceVariant variant, const ReduceOptions& opt) {
  const auto& sys = m.system;
  auto sc = scale_model(m);
  const std::size_t L = dynamic_levels(sc);
  if (variant == ReduceVariant::Slowest) l = L;
  if (l < 1 || l > L) throw ReduceError("level " + std::to_string(l) + " out of range 1.." + std::to_string(L));
  std::mt19937_64 rng(opt.seed);
  auto deg = degeneracy_level(sys, sc, rng);
  if (deg.level && *deg.level < l)
    throw ReduceError("level " + std::to_string(*deg.level) +
                      " is degenerate; eliminate its conservation laws (transform) before reducing");

  ReducedModel r;
  r.level = l;
  r.variant = variant;
  r.parameters = parameter_values(sys);
  const auto& groups = sc.decomposition.groups;
  std::vector<std::string> owners;
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (auto i : groups[k].species) {
      const auto& name = sys.species()[i];
      if (k + 1 < l) {
        r.slaved.push_back(name);
        r.slaved_equations.push_back(sys.field_part(i, sc.trunc.s1));
        owners.push_back(name);
      } else if (k + 1 == l) {
        r.driving.push_back(name);
        r.driving_odes.push_back(opt.keep_higher_order ? sys.field(i) : sys.field_part(i, sc.trunc.s1));
      } else {
        r.quenched.push_back(name);
        if (variant == ReduceVariant::Nested) {
          r.quenched_odes.push_back(sys.field_part(i, sc.trunc.s1));
          r.quenched_delta_orders.push_back(groups[k].order && groups[l - 1].order
                                                ? *groups[k].order - *groups[l - 1].order
                                                : Rational(0));
        }
        if (auto it = sys.initial.find(name); it != sys.initial.end()) r.quenched_values[name] = it->second;
      }
    }
  r.plan = build_plan(r.slaved_equations, r.slaved, owners);

  // Record the quadratic branches taken at the initial state.
  std::map<std::string, double> known;
  bool have = true;
  for (const auto& v : r.driving) {
    auto it = sys.initial.find(v);
    if (it == sys.initial.end()) have = false;
    else known[v] = it->second;
  }
  for (const auto& v : r.quenched) {
    auto it = sys.initial.find(v);
    if (it == sys.initial.end()) have = false;
    else known[v] = it->second;
  }
  if (have && !r.slaved.empty()) {
    try {
      EliminatorImpl ev(r);
      std::vector<int> branches;
      std::map<std::string, double> guess;
      for (const auto& v : r.slaved)
        if (auto it = sys.initial.find(v); it != sys.initial.end()) guess[v] = it->second;
      auto sol = run_plan(r, ev, known, guess, &branches);
      r.reference = known;
      r.reference.insert(sol.begin(), sol.end());
      std::size_t q = 0;
      for (auto& s : r.plan)
        if (s.kind == SolveStep::Kind::Quadratic && q < branches.size()) s.branch = branches[q++];
    } catch (const ReduceError& e) {
      r.notes.push_back(std::string("elimination at the initial state failed: ") + e.what());
    }
  }
  return r;
}

std::map<std::string, double> eliminate_fast(const ReducedModel& r, const std::map<std::string, double>& known,
                                             const std::map<std::string, double>& guess) {
  return FastEliminator(r).solve(known, guess);
}

FastEliminator::FastEliminator(const ReducedModel& r)
    : model_(std::make_shared<const ReducedModel>(r)), impl_(std::make_shared<const EliminatorImpl>(r)) {}

std::map<std::string, double> FastEliminator::solve(const std::map<std::string, double>& known,
                                                    const std::map<std::string, double>& guess_in) const {
  const auto& r = *model_;
  auto guess = guess_in;
  for (const auto& v : r.slaved)
    if (!guess.count(v))
      if (auto it = r.reference.find(v); it != r.reference.end()) guess[v] = it->second;
  try {
    return run_plan(r, *impl_, known, guess, nullptr);
  } catch (const ReduceError&) {
    bool usable = !r.reference.empty();
    for (const auto& [v, val] : known) usable = usable && r.reference.count(v) && val > 0;
    if (!usable) throw;
  }
  // Continuation in log coordinates from the reference point.
  auto at = [&](double s) {
    auto k = known;
    for (auto& [v, val] : k) val = r.reference.at(v) * std::pow(val / r.reference.at(v), s);
    return k;
  };
  std::map<std::string, double> g;
  for (const auto& v : r.slaved) g[v] = r.reference.at(v);
  double s = 0, h = 0.125;
  while (s < 1) {
    double t = std::min(1.0, s + h);
    try {
      g = run_plan(r, *impl_, t == 1.0 ? known : at(t), g, nullptr);
      s = t;
      h = std::min(0.5, 2 * h);
    } catch (const ReduceError& e) {
      h /= 4;
      if (h < 1e-6) throw ReduceError(std::string("continuation from the reference state failed: ") + e.what());
    }
  }
  return g;
}

double slaved_residual(const ReducedModel& r, const std::map<std::string, double>& values) {
  EliminatorImpl ev(r);
  std::vector<double> x;
  for (const auto& v : ev.vars) x.push_back(values.at(v));
  return scaled_residual(ev.slaved_rows, x.data());
}

nlohmann::json reduced_to_json(const ReducedModel& r) {
  nlohmann::json j;
  j["level"] = r.level;
  j["variant"] = variant_name(r.variant);
  nlohmann::json slaved = nlohmann::json::array();
  for (std::size_t i = 0; i < r.slaved.size(); ++i)
    slaved.push_back({{"variable", r.slaved[i]}, {"equation", "0 = " + r.slaved_equations[i].str()}});
  j["slaved"] = slaved;
  nlohmann::json driving = nlohmann::json::array();
  for (std::size_t i = 0; i < r.driving.size(); ++i)
    driving.push_back({{"variable", r.driving[i]}, {"ode", r.driving_odes[i].str()}});
  j["driving"] = driving;
  nlohmann::json quenched = nlohmann::json::array();
  for (std::size_t i = 0; i < r.quenched.size(); ++i) {
    nlohmann::json q{{"variable", r.quenched[i]}};
    if (auto it = r.quenched_values.find(r.quenched[i]); it != r.quenched_values.end()) q["value"] = it->second;
    if (i < r.quenched_odes.size()) {
      q["ode"] = r.quenched_odes[i].str();
      q["delta_order"] = to_string(r.quenched_delta_orders[i]);
    }
    quenched.push_back(q);
  }
  j["quenched"] = quenched;
  nlohmann::json forms = nlohmann::json::array();
  for (const auto& s : r.plan) forms.push_back(s.closed_form());
  j["closed_forms"] = forms;
  j["notes"] = r.notes;
  return j;
}

}  // namespace tropored
