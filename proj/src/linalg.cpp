#include "tropored/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace tropored {

RationalMatrix::RationalMatrix(const std::vector<std::vector<Rational>>& rows)
    : r_(rows.size()), c_(rows.empty() ? 0 : rows[0].size()), a_(r_ * c_) {
  for (std::size_t i = 0; i < r_; ++i) {
    if (rows[i].size() != c_) throw std::invalid_argument("ragged matrix");
    for (std::size_t j = 0; j < c_; ++j) (*this)(i, j) = rows[i][j];
  }
}

RationalMatrix RationalMatrix::identity(std::size_t n) {
  RationalMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

std::vector<Rational> RationalMatrix::row(std::size_t i) const {
  return {a_.begin() + static_cast<std::ptrdiff_t>(i * c_),
          a_.begin() + static_cast<std::ptrdiff_t>((i + 1) * c_)};
}

std::vector<Rational> RationalMatrix::col(std::size_t j) const {
  std::vector<Rational> v(r_);
  for (std::size_t i = 0; i < r_; ++i) v[i] = (*this)(i, j);
  return v;
}

RationalMatrix RationalMatrix::transpose() const {
  RationalMatrix t(c_, r_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

RationalMatrix RationalMatrix::operator*(const RationalMatrix& o) const {
  if (c_ != o.r_) throw std::invalid_argument("matrix product dimension mismatch");
  RationalMatrix p(r_, o.c_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t k = 0; k < c_; ++k) {
      const Rational& x = (*this)(i, k);
      if (x == 0) continue;
      for (std::size_t j = 0; j < o.c_; ++j) p(i, j) += x * o(k, j);
    }
  return p;
}

std::vector<Rational> RationalMatrix::operator*(const std::vector<Rational>& v) const {
  if (v.size() != c_) throw std::invalid_argument("matrix-vector dimension mismatch");
  std::vector<Rational> out(r_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j)
      if ((*this)(i, j) != 0) out[i] += (*this)(i, j) * v[j];
  return out;
}

std::vector<Rational> RationalMatrix::left_multiply(const std::vector<Rational>& v) const {
  if (v.size() != r_) throw std::invalid_argument("vector-matrix dimension mismatch");
  std::vector<Rational> out(c_);
  for (std::size_t i = 0; i < r_; ++i) {
    if (v[i] == 0) continue;
    for (std::size_t j = 0; j < c_; ++j) out[j] += v[i] * (*this)(i, j);
  }
  return out;
}

RationalMatrix RationalMatrix::select_rows(const std::vector<std::size_t>& idx) const {
  RationalMatrix m(idx.size(), c_);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < c_; ++j) m(i, j) = (*this)(idx[i], j);
  return m;
}

RationalMatrix RationalMatrix::select_cols(const std::vector<std::size_t>& idx) const {
  RationalMatrix m(r_, idx.size());
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) m(i, j) = (*this)(i, idx[j]);
  return m;
}

bool RationalMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](const Rational& x) { return x == 0; });
}

bool RationalMatrix::operator==(const RationalMatrix& o) const {
  return r_ == o.r_ && c_ == o.c_ && a_ == o.a_;
}

std::vector<std::size_t> RationalMatrix::rref() {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < c_ && row < r_; ++col) {
    std::size_t p = row;
    while (p < r_ && (*this)(p, col) == 0) ++p;
    if (p == r_) continue;
    if (p != row)
      for (std::size_t j = 0; j < c_; ++j) std::swap((*this)(p, j), (*this)(row, j));
    Rational inv = 1 / (*this)(row, col);
    for (std::size_t j = col; j < c_; ++j) (*this)(row, j) *= inv;
    for (std::size_t i = 0; i < r_; ++i) {
      if (i == row || (*this)(i, col) == 0) continue;
      Rational f = (*this)(i, col);
      for (std::size_t j = col; j < c_; ++j)
        if ((*this)(row, j) != 0) (*this)(i, j) -= f * (*this)(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

std::size_t RationalMatrix::rank() const {
  RationalMatrix m = *this;
  return m.rref().size();
}

Rational RationalMatrix::determinant() const {
  if (r_ != c_) throw std::invalid_argument("determinant of a non-square matrix");
  RationalMatrix m = *this;
  Rational det = 1;
  for (std::size_t col = 0; col < c_; ++col) {
    std::size_t p = col;
    while (p < r_ && m(p, col) == 0) ++p;
    if (p == r_) return 0;
    if (p != col) {
      for (std::size_t j = 0; j < c_; ++j) std::swap(m(p, j), m(col, j));
      det = -det;
    }
    det *= m(col, col);
    Rational inv = 1 / m(col, col);
    for (std::size_t i = col + 1; i < r_; ++i) {
      if (m(i, col) == 0) continue;
      Rational f = m(i, col) * inv;
      for (std::size_t j = col; j < c_; ++j)
        if (m(col, j) != 0) m(i, j) -= f * m(col, j);
    }
  }
  return det;
}

std::vector<std::vector<Rational>> RationalMatrix::kernel() const {
  RationalMatrix m = *this;
  auto piv = m.rref();
  std::vector<bool> is_pivot(c_, false);
  for (auto p : piv) is_pivot[p] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t f = 0; f < c_; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(c_);
    v[f] = 1;
    for (std::size_t k = 0; k < piv.size(); ++k) v[piv[k]] = -m(k, f);
    basis.push_back(std::move(v));
  }
  return basis;
}

bool RationalMatrix::solve(const std::vector<Rational>& b, std::vector<Rational>& x) const {
  if (b.size() != r_) throw std::invalid_argument("solve dimension mismatch");
  RationalMatrix aug(r_, c_ + 1);
  for (std::size_t i = 0; i < r_; ++i) {
    for (std::size_t j = 0; j < c_; ++j) aug(i, j) = (*this)(i, j);
    aug(i, c_) = b[i];
  }
  auto piv = aug.rref();
  if (!piv.empty() && piv.back() == c_) return false;
  x.assign(c_, 0);
  for (std::size_t k = 0; k < piv.size(); ++k) x[piv[k]] = aug(k, c_);
  return true;
}

RationalMatrix RationalMatrix::inverse() const {
  if (r_ != c_) throw std::invalid_argument("inverse of a non-square matrix");
  RationalMatrix aug(r_, 2 * c_);
  for (std::size_t i = 0; i < r_; ++i) {
    for (std::size_t j = 0; j < c_; ++j) aug(i, j) = (*this)(i, j);
    aug(i, c_ + i) = 1;
  }
  auto piv = aug.rref();
  if (piv.size() < r_ || piv[r_ - 1] != r_ - 1) throw std::domain_error("singular matrix");
  RationalMatrix inv(r_, c_);
  for (std::size_t i = 0; i < r_; ++i)
    for (std::size_t j = 0; j < c_; ++j) inv(i, j) = aug(i, c_ + j);
  return inv;
}

Rational lcm_of_denominators(const std::vector<Rational>& v) {
  mpz_class l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den().get_mpz_t());
  return Rational(l);
}

std::vector<Rational> primitive_integer(const std::vector<Rational>& v) {
  mpz_class l = lcm_of_denominators(v).get_num();
  mpz_class g = 0;
  std::vector<mpz_class> ints(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Rational s = v[i] * l;
    ints[i] = s.get_num();
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), ints[i].get_mpz_t());
  }
  std::vector<Rational> out(v.size());
  if (g == 0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Rational(ints[i] / g);
  return out;
}

std::vector<std::size_t> support(const std::vector<Rational>& v) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0) s.push_back(i);
  return s;
}

bool semi_positive(const std::vector<Rational>& v) {
  bool any = false;
  for (const auto& x : v) {
    if (x < 0) return false;
    if (x > 0) any = true;
  }
  return any;
}

namespace {

std::vector<Rational> normalize_sign(std::vector<Rational> v) {
  bool all_nonpos = std::all_of(v.begin(), v.end(), [](const Rational& x) { return x <= 0; });
  bool flip = all_nonpos;
  if (!all_nonpos && !semi_positive(v)) {
    for (const auto& x : v)
      if (x != 0) {
        flip = x < 0;
        break;
      }
  }
  if (flip)
    for (auto& x : v) x = -x;
  return v;
}

bool preferred(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  bool pa = semi_positive(a), pb = semi_positive(b);
  if (pa != pb) return pa;
  auto sa = support(a), sb = support(b);
  if (sa.size() != sb.size()) return sa.size() < sb.size();
  if (sa != sb) return sa < sb;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return abs(a[i]) < abs(b[i]) || (abs(a[i]) == abs(b[i]) && a[i] > b[i]);
  return false;
}

void combinations(std::size_t n, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
                  const std::function<bool(const std::vector<std::size_t>&)>& visit, bool& stop) {
  if (stop) return;
  if (cur.size() == k) {
    if (!visit(cur)) stop = true;
    return;
  }
  for (std::size_t i = start; i + (k - cur.size()) <= n && !stop; ++i) {
    cur.push_back(i);
    combinations(n, k, i + 1, cur, visit, stop);
    cur.pop_back();
  }
}

}  // namespace

bool is_elementary(const RationalMatrix& m, const std::vector<Rational>& v) {
  auto s = support(v);
  if (s.empty()) return false;
  // Left kernel vectors supported inside s = left kernel of the selected rows.
  return m.select_rows(s).left_kernel().size() == 1;
}

std::vector<std::vector<Rational>> left_kernel_irreducible(const RationalMatrix& m,
                                                          const VectorOrder& first) {
  auto basis = m.left_kernel();
  const std::size_t k = basis.size();
  const std::size_t n = m.rows();
  if (k == 0) return {};
  // Coordinates where some kernel vector is nonzero.
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < n; ++i)
    if (std::any_of(basis.begin(), basis.end(), [&](const auto& b) { return b[i] != 0; }))
      live.push_back(i);

  RationalMatrix B(basis);  // k x n
  std::vector<std::vector<Rational>> candidates;
  std::set<std::vector<Rational>> seen;
  auto add = [&](std::vector<Rational> v) {
    v = normalize_sign(primitive_integer(v));
    if (seen.insert(v).second) candidates.push_back(std::move(v));
  };

  constexpr double kEnumerationCap = 4e5;
  double count = 1;
  for (std::size_t i = 0; i + 1 < k; ++i)
    count = count * static_cast<double>(live.size() - i) / static_cast<double>(i + 1);
  if (count <= kEnumerationCap) {
    // Every elementary vector vanishes on some (k-1)-set Z with rank(B_Z) = k-1.
    std::vector<std::size_t> cur;
    bool stop = false;
    combinations(live.size(), k - 1, 0, cur, [&](const std::vector<std::size_t>& z) {
      std::vector<std::size_t> cols;
      for (auto i : z) cols.push_back(live[i]);
      RationalMatrix bz = B.select_cols(cols).transpose();  // (k-1) x k
      auto lam = bz.kernel();
      if (lam.size() != 1) return true;
      add(B.left_multiply(lam[0]));
      return true;
    }, stop);
  } else {
    // Greedy support reduction starting from the RREF basis.
    for (auto v : basis) {
      bool changed = true;
      while (changed && !is_elementary(m, v)) {
        changed = false;
        auto s = support(v);
        auto sub = m.select_rows(s).left_kernel();
        for (const auto& w : sub) {
          std::vector<Rational> full(n);
          for (std::size_t i = 0; i < s.size(); ++i) full[s[i]] = w[i];
          // Cancel one coordinate of v against w.
          for (std::size_t i = 0; i < n; ++i) {
            if (full[i] == 0 || v[i] == 0) continue;
            Rational f = v[i] / full[i];
            std::vector<Rational> u(n);
            for (std::size_t j = 0; j < n; ++j) u[j] = v[j] - f * full[j];
            if (!support(u).empty() && support(u).size() < s.size()) {
              v = u;
              changed = true;
              break;
            }
          }
          if (changed) break;
        }
      }
      add(v);
    }
    for (auto v : basis) add(v);
  }

  std::sort(candidates.begin(), candidates.end(), preferred);
  if (first) std::stable_sort(candidates.begin(), candidates.end(), first);
  std::vector<std::vector<Rational>> chosen;
  for (const auto& c : candidates) {
    std::vector<std::vector<Rational>> trial = chosen;
    trial.push_back(c);
    if (RationalMatrix(trial).rank() == trial.size()) chosen.push_back(c);
    if (chosen.size() == k) break;
  }
  return chosen;
}

}  // namespace tropored
