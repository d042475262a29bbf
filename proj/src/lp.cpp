#include "tropored/lp.hpp"

#include <stdexcept>

namespace tropored {

namespace {

class Tableau {
public:
  // rows: constraint rows [A | b]; basis: basic column per row.
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> obj;  // reduced costs, last entry = -objective value
  std::vector<std::size_t> basis;
  std::size_t ncols = 0;

  void pivot(std::size_t r, std::size_t c) {
    auto& pr = rows[r];
    Rational inv = 1 / pr[c];
    for (auto& v : pr)
      if (v != 0) v *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      eliminate(rows[i], pr, c);
    }
    if (obj[c] != 0) eliminate(obj, pr, c);
    basis[r] = c;
  }

  // Returns false when unbounded. Columns at or beyond `limit` never enter.
  bool optimize(std::size_t limit) {
    for (;;) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (obj[j] < 0) {
          enter = j;
          break;
        }
      if (enter == limit) return true;
      std::size_t leave = rows.size();
      Rational best;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][enter] <= 0) continue;
        Rational ratio = rows[i][ncols] / rows[i][enter];
        if (leave == rows.size() || ratio < best ||
            (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == rows.size()) return false;
      pivot(leave, enter);
    }
  }

private:
  static void eliminate(std::vector<Rational>& target, const std::vector<Rational>& pr,
                        std::size_t c) {
    Rational f = target[c];
    for (std::size_t j = 0; j < pr.size(); ++j)
      if (pr[j] != 0) target[j] -= f * pr[j];
  }
};

}  // namespace

bool satisfies(const LinearConstraint& c, const std::vector<Rational>& x) {
  Rational s = 0;
  for (std::size_t i = 0; i < c.a.size(); ++i)
    if (c.a[i] != 0) s += c.a[i] * x[i];
  switch (c.rel) {
    case Relation::Le: return s <= c.b;
    case Relation::Ge: return s >= c.b;
    case Relation::Eq: return s == c.b;
    case Relation::Gt: return s > c.b;
  }
  return false;
}

LpResult lp_minimize(std::size_t nvars, const std::vector<LinearConstraint>& cons,
                     const std::vector<Rational>& cost) {
  const std::size_t m = cons.size();
  std::size_t nslack = 0;
  for (const auto& c : cons) {
    if (c.a.size() != nvars) throw std::invalid_argument("constraint has wrong dimension");
    if (c.rel == Relation::Gt) throw std::invalid_argument("strict constraint passed to lp_minimize");
    if (c.rel != Relation::Eq) ++nslack;
  }
  // Columns: x+ (n), x- (n), slacks, artificials (m).
  const std::size_t nx = 2 * nvars;
  const std::size_t art0 = nx + nslack;
  const std::size_t ncols = art0 + m;
  Tableau t;
  t.ncols = ncols;
  t.rows.assign(m, std::vector<Rational>(ncols + 1));
  t.basis.assign(m, 0);
  std::size_t s = nx;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = cons[i];
    auto& row = t.rows[i];
    for (std::size_t j = 0; j < nvars; ++j) {
      row[j] = c.a[j];
      row[nvars + j] = -c.a[j];
    }
    if (c.rel == Relation::Le) row[s++] = 1;
    if (c.rel == Relation::Ge) row[s++] = -1;
    row[ncols] = c.b;
    if (c.b < 0)
      for (auto& v : row) v = -v;
    row[art0 + i] = 1;
    t.basis[i] = art0 + i;
  }
  // Phase 1: minimize the sum of artificials.
  t.obj.assign(ncols + 1, 0);
  for (std::size_t i = 0; i < m; ++i) t.obj[art0 + i] = 1;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= ncols; ++j)
      if (t.rows[i][j] != 0) t.obj[j] -= t.rows[i][j];
  t.optimize(ncols);
  LpResult res;
  if (-t.obj[ncols] != 0) {
    res.status = LpResult::Status::Infeasible;
    return res;
  }
  // Drive artificials out of the basis; drop redundant rows.
  for (std::size_t i = 0; i < t.rows.size();) {
    if (t.basis[i] < art0) {
      ++i;
      continue;
    }
    std::size_t c = art0;
    for (std::size_t j = 0; j < art0; ++j)
      if (t.rows[i][j] != 0) {
        c = j;
        break;
      }
    if (c == art0) {
      t.rows.erase(t.rows.begin() + static_cast<std::ptrdiff_t>(i));
      t.basis.erase(t.basis.begin() + static_cast<std::ptrdiff_t>(i));
      continue;
    }
    t.pivot(i, c);
    ++i;
  }
  // Phase 2.
  t.obj.assign(ncols + 1, 0);
  for (std::size_t j = 0; j < nvars; ++j) {
    t.obj[j] = cost.empty() ? Rational(0) : cost[j];
    t.obj[nvars + j] = cost.empty() ? Rational(0) : Rational(-cost[j]);
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Rational f = t.obj[t.basis[i]];
    if (f == 0) continue;
    for (std::size_t j = 0; j <= ncols; ++j)
      if (t.rows[i][j] != 0) t.obj[j] -= f * t.rows[i][j];
  }
  bool bounded = t.optimize(art0);
  std::vector<Rational> y(ncols, 0);
  for (std::size_t i = 0; i < t.rows.size(); ++i) y[t.basis[i]] = t.rows[i][ncols];
  res.x.assign(nvars, 0);
  for (std::size_t j = 0; j < nvars; ++j) res.x[j] = y[j] - y[nvars + j];
  if (!bounded) {
    res.status = LpResult::Status::Unbounded;
    return res;
  }
  res.status = LpResult::Status::Optimal;
  res.value = -t.obj[ncols];
  return res;
}

bool find_point(std::size_t nvars, const std::vector<LinearConstraint>& cons,
                std::vector<Rational>& point, Rational max_margin) {
  bool strict = false;
  for (const auto& c : cons) strict = strict || c.rel == Relation::Gt;
  if (!strict) {
    auto r = lp_minimize(nvars, cons, {});
    if (r.status == LpResult::Status::Infeasible) return false;
    point = r.x;
    return true;
  }
  // Extra variable t: strict rows become a.x - t >= b; maximize t <= max_margin.
  std::vector<LinearConstraint> ext;
  for (const auto& c : cons) {
    LinearConstraint e{c.a, c.rel, c.b};
    e.a.push_back(0);
    if (c.rel == Relation::Gt) {
      e.a.back() = -1;
      e.rel = Relation::Ge;
    }
    ext.push_back(std::move(e));
  }
  std::vector<Rational> cap(nvars + 1, 0);
  cap.back() = 1;
  ext.push_back({cap, Relation::Le, max_margin});
  std::vector<Rational> cost(nvars + 1, 0);
  cost.back() = -1;
  auto r = lp_minimize(nvars + 1, ext, cost);
  if (r.status != LpResult::Status::Optimal || r.x.back() <= 0) return false;
  point.assign(r.x.begin(), r.x.end() - 1);
  return true;
}

}  // namespace tropored
