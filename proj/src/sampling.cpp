#include "tropored/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tropored {

Rational random_positive_rational(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double v = std::pow(10.0, u(rng));
  // Three significant digits keep exact arithmetic cheap.
  long den = 1;
  while (v * den < 100 && den < 100000) den *= 10;
  long num = std::max(1L, std::lround(v * den));
  Rational q(num, den);
  q.canonicalize();
  return q;
}

RationalMatrix evaluate_matrix(const std::vector<std::vector<Polynomial>>& m, const Point& p) {
  RationalMatrix out(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      out(i, j) = m[i][j].is_zero() ? Rational(0) : m[i][j].evaluate(p);
  return out;
}

std::vector<std::vector<Polynomial>> jacobian(const std::vector<Polynomial>& f,
                                              const std::vector<std::string>& vars) {
  std::vector<std::vector<Polynomial>> J(f.size(), std::vector<Polynomial>(vars.size()));
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < vars.size(); ++j) J[i][j] = f[i].derivative(vars[j]);
  return J;
}

namespace {

// Degree of a term in the chosen set, or -1 when it has a negative or
// nonlinear occurrence there.
int chosen_degree(const Monomial& m, const std::set<std::string>& chosen) {
  int deg = 0;
  for (const auto& [v, e] : m.factors()) {
    if (!chosen.count(v)) continue;
    if (e != 1) return -1;
    ++deg;
  }
  return deg;
}

bool jointly_linear(const Polynomial& p, const std::set<std::string>& chosen) {
  for (const auto& [m, c] : p.terms()) {
    int d = chosen_degree(m, chosen);
    if (d < 0 || d > 1) return false;
  }
  return true;
}

}  // namespace

VarietySample sample_variety(const std::vector<Polynomial>& eqs_in, const std::vector<std::string>& vars,
                             std::size_t count, std::mt19937_64& rng, std::size_t max_tries) {
  VarietySample out;
  std::vector<Polynomial> eqs;
  for (const auto& e : eqs_in)
    if (!e.is_zero()) eqs.push_back(e);
  std::set<std::string> known(vars.begin(), vars.end());
  for (const auto& e : eqs)
    for (const auto& v : e.variables())
      if (!known.count(v)) {
        out.status = "inconclusive: variable '" + v + "' has no sampling domain";
        return out;
      }
  if (eqs.empty()) {
    for (std::size_t s = 0; s < count; ++s) {
      Point p;
      for (const auto& v : vars) p[v] = random_positive_rational(rng);
      out.points.push_back(std::move(p));
    }
    out.found = true;
    out.status = "unconstrained";
    return out;
  }
  std::size_t failures = 0;
  std::vector<std::string> order = vars;
  for (std::size_t attempt = 0; attempt < max_tries && out.points.size() < count; ++attempt) {
    if (attempt > 0 && attempt % 8 == 0) std::shuffle(order.begin(), order.end(), rng);
    // Greedy choice of solved variables keeping the selected equations linear in them.
    std::set<std::string> chosen;
    std::vector<std::size_t> selected;
    std::vector<std::string> solved;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      for (const auto& v : order) {
        if (chosen.count(v) || !eqs[i].depends_on(v)) continue;
        std::set<std::string> trial = chosen;
        trial.insert(v);
        bool ok = jointly_linear(eqs[i], trial);
        for (auto s : selected) ok = ok && jointly_linear(eqs[s], trial);
        if (!ok) continue;
        chosen = std::move(trial);
        selected.push_back(i);
        solved.push_back(v);
        break;
      }
    }
    Point fixed;
    for (const auto& v : vars)
      if (!chosen.count(v)) fixed[v] = random_positive_rational(rng);
    RationalMatrix A(selected.size(), solved.size());
    std::vector<Rational> b(selected.size());
    bool bad = false;
    for (std::size_t r = 0; r < selected.size() && !bad; ++r) {
      Polynomial p = eqs[selected[r]].partial_evaluate(fixed);
      for (const auto& [m, c] : p.terms()) {
        if (m.is_one()) {
          b[r] -= c;
          continue;
        }
        if (m.factors().size() != 1 || m.factors()[0].second != 1) {
          bad = true;
          break;
        }
        auto it = std::find(solved.begin(), solved.end(), m.factors()[0].first);
        A(r, static_cast<std::size_t>(it - solved.begin())) += c;
      }
    }
    std::vector<Rational> x;
    if (bad || !A.solve(b, x)) {
      ++failures;
      continue;
    }
    // Free solved variables (rank deficiency) get random values: re-solve with them pinned.
    RationalMatrix Ac = A;
    auto piv = Ac.rref();
    if (piv.size() < solved.size()) {
      std::vector<bool> is_piv(solved.size(), false);
      for (auto p : piv) is_piv[p] = true;
      std::vector<Rational> rhs = b;
      std::vector<Rational> pinned(solved.size());
      for (std::size_t k = 0; k < solved.size(); ++k)
        if (!is_piv[k]) pinned[k] = random_positive_rational(rng);
      for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t k = 0; k < solved.size(); ++k)
          if (!is_piv[k]) rhs[r] -= A(r, k) * pinned[k];
      std::vector<std::size_t> pc(piv.begin(), piv.end());
      if (!A.select_cols(pc).solve(rhs, x)) {
        ++failures;
        continue;
      }
      std::vector<Rational> full = pinned;
      for (std::size_t k = 0; k < pc.size(); ++k) full[pc[k]] = x[k];
      x = full;
    }
    Point p = fixed;
    bool positive = true;
    for (std::size_t k = 0; k < solved.size(); ++k) {
      if (x[k] <= 0) positive = false;
      p[solved[k]] = x[k];
    }
    if (!positive) {
      ++failures;
      continue;
    }
    bool on = true;
    for (const auto& e : eqs)
      if (e.evaluate(p) != 0) {
        on = false;
        break;
      }
    if (!on) {
      ++failures;
      continue;
    }
    out.points.push_back(std::move(p));
  }
  out.found = !out.points.empty();
  out.status = out.found ? "ok"
                         : "inconclusive: no positive point of the constraint set found after " +
                               std::to_string(failures) + " attempts";
  return out;
}

RankReport generic_rank(const std::vector<std::vector<Polynomial>>& m,
                        const std::vector<Polynomial>& constraints,
                        const std::vector<std::string>& vars, std::mt19937_64& rng,
                        std::size_t samples) {
  RankReport rep;
  auto pts = sample_variety(constraints, vars, samples, rng);
  if (!pts.found) {
    rep.status = pts.status;
    return rep;
  }
  for (const auto& p : pts.points) rep.rank = std::max(rep.rank, evaluate_matrix(m, p).rank());
  rep.samples = pts.points.size();
  rep.conclusive = true;
  rep.status = pts.status;
  return rep;
}

}  // namespace tropored
