#include "tropored/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tropored {

Rational parse_rational(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw std::invalid_argument("empty rational");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + raw + "'");
    Rational q = num / den;
    q.canonicalize();
    return q;
  }
  std::size_t epos = s.find_first_of("eE");
  std::string mant = s.substr(0, epos);
  long exp10 = 0;
  if (epos != std::string::npos) {
    try {
      exp10 = std::stol(s.substr(epos + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad rational '" + raw + "'");
    }
  }
  bool neg = false;
  std::size_t i = 0;
  if (i < mant.size() && (mant[i] == '+' || mant[i] == '-')) neg = mant[i++] == '-';
  std::string digits;
  long frac = 0;
  bool dot = false;
  for (; i < mant.size(); ++i) {
    char c = mant[i];
    if (c == '.' && !dot) {
      dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      if (dot) ++frac;
    } else {
      throw std::invalid_argument("bad rational '" + raw + "'");
    }
  }
  if (digits.empty()) throw std::invalid_argument("bad rational '" + raw + "'");
  mpz_class num(digits, 10);
  long shift = exp10 - frac;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  Rational q = shift >= 0 ? Rational(num * p10) : Rational(num, p10);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  return Rational(v);
}

namespace {

std::pair<std::string, long> split_name(const std::string& s) {
  std::size_t k = s.size();
  while (k > 0 && std::isdigit(static_cast<unsigned char>(s[k - 1]))) --k;
  if (k == s.size() || s.size() - k > 15) return {s, -1};
  return {s.substr(0, k), std::stol(s.substr(k))};
}

}  // namespace

bool name_less(const std::string& a, const std::string& b) {
  auto [pa, na] = split_name(a);
  auto [pb, nb] = split_name(b);
  if (pa != pb) return pa < pb;
  if (na != nb) return na < nb;
  return a < b;
}

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(std::vector<Factor> factors) {
  std::sort(factors.begin(), factors.end(),
            [](const Factor& x, const Factor& y) { return name_less(x.first, y.first); });
  for (auto& [v, e] : factors) {
    if (!f_.empty() && f_.back().first == v)
      f_.back().second += e;
    else
      f_.emplace_back(v, e);
    if (f_.back().second == 0) f_.pop_back();
  }
}

Monomial Monomial::var(const std::string& name, int exp) { return Monomial({{name, exp}}); }

int Monomial::exponent(const std::string& v) const {
  for (const auto& [n, e] : f_)
    if (n == v) return e;
  return 0;
}

bool Monomial::has_negative() const {
  return std::any_of(f_.begin(), f_.end(), [](const Factor& f) { return f.second < 0; });
}

int Monomial::total_degree() const {
  int s = 0;
  for (const auto& f : f_) s += f.second;
  return s;
}

Monomial Monomial::operator*(const Monomial& o) const {
  std::vector<Factor> all = f_;
  all.insert(all.end(), o.f_.begin(), o.f_.end());
  return Monomial(std::move(all));
}

Monomial Monomial::pow(int k) const {
  std::vector<Factor> r;
  if (k == 0) return Monomial();
  for (const auto& [v, e] : f_) r.emplace_back(v, e * k);
  Monomial m;
  m.f_ = std::move(r);
  return m;
}

Monomial Monomial::without(const std::string& v) const {
  Monomial m;
  for (const auto& f : f_)
    if (f.first != v) m.f_.push_back(f);
  return m;
}

Monomial Monomial::restricted(const std::function<bool(const std::string&)>& keep) const {
  Monomial m;
  for (const auto& f : f_)
    if (keep(f.first)) m.f_.push_back(f);
  return m;
}

bool Monomial::operator<(const Monomial& o) const {
  std::size_t n = std::min(f_.size(), o.f_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = f_[i];
    const auto& b = o.f_[i];
    if (a.first != b.first) return name_less(a.first, b.first);
    if (a.second != b.second) return a.second > b.second;
  }
  return f_.size() < o.f_.size();
}

std::string Monomial::str() const {
  std::string s;
  for (const auto& [v, e] : f_) {
    if (!s.empty()) s += '*';
    s += v;
    if (e != 1) s += "^" + (e < 0 ? "(" + std::to_string(e) + ")" : std::to_string(e));
  }
  return s;
}

// -------------------------------------------------------------- Polynomial

Polynomial::Polynomial(const Rational& c) {
  if (c != 0) t_.emplace(Monomial(), c);
}

Polynomial Polynomial::var(const std::string& name) { return term(1, Monomial::var(name)); }

Polynomial Polynomial::term(const Rational& c, const Monomial& m) {
  Polynomial p;
  p.add_term(m, c);
  return p;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = t_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) t_.erase(it);
  }
}

bool Polynomial::is_constant() const {
  return t_.empty() || (t_.size() == 1 && t_.begin()->first.is_one());
}

Rational Polynomial::constant_term() const {
  auto it = t_.find(Monomial());
  return it == t_.end() ? Rational(0) : it->second;
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& [m, c] : r.t_) c = -c;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.t_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [m, c] : o.t_) add_term(m, -c);
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  for (const auto& [ma, ca] : a.t_)
    for (const auto& [mb, cb] : b.t_) r.add_term(ma * mb, ca * cb);
  return r;
}

Polynomial& Polynomial::operator*=(const Polynomial& o) { return *this = *this * o; }

Polynomial Polynomial::pow(int k) const {
  if (k < 0) {
    if (t_.size() != 1) throw std::domain_error("negative power of a non-monomial polynomial");
    const auto& [m, c] = *t_.begin();
    Rational ci = 1 / c;
    Polynomial base = term(ci, m.inverse());
    return base.pow(-k);
  }
  Polynomial r(1), b = *this;
  while (k > 0) {
    if (k & 1) r *= b;
    k >>= 1;
    if (k) b *= b;
  }
  return r;
}

Polynomial Polynomial::derivative(const std::string& v) const {
  Polynomial r;
  for (const auto& [m, c] : t_) {
    int e = m.exponent(v);
    if (e == 0) continue;
    r.add_term(m * Monomial::var(v, -1), c * e);
  }
  return r;
}

Polynomial Polynomial::substitute(const std::map<std::string, Polynomial>& sub) const {
  Polynomial r;
  for (const auto& [m, c] : t_) {
    Polynomial acc(c);
    std::vector<Monomial::Factor> kept;
    for (const auto& [v, e] : m.factors()) {
      auto it = sub.find(v);
      if (it == sub.end()) {
        kept.emplace_back(v, e);
      } else {
        acc *= it->second.pow(e);
      }
    }
    acc *= term(1, Monomial(std::move(kept)));
    r += acc;
  }
  return r;
}

Polynomial Polynomial::rename(const std::map<std::string, std::string>& names) const {
  Polynomial r;
  for (const auto& [m, c] : t_) {
    std::vector<Monomial::Factor> f;
    for (const auto& [v, e] : m.factors()) {
      auto it = names.find(v);
      f.emplace_back(it == names.end() ? v : it->second, e);
    }
    r.add_term(Monomial(std::move(f)), c);
  }
  return r;
}

Polynomial Polynomial::partial_evaluate(const std::map<std::string, Rational>& values) const {
  Polynomial r;
  for (const auto& [m, c] : t_) {
    Rational coeff = c;
    std::vector<Monomial::Factor> kept;
    for (const auto& [v, e] : m.factors()) {
      auto it = values.find(v);
      if (it == values.end()) {
        kept.emplace_back(v, e);
        continue;
      }
      if (it->second == 0 && e < 0) throw std::domain_error("division by zero evaluating " + v);
      mpz_class num = it->second.get_num(), den = it->second.get_den();
      mpz_class pn, pd;
      unsigned long ae = static_cast<unsigned long>(std::abs(e));
      mpz_pow_ui(pn.get_mpz_t(), num.get_mpz_t(), ae);
      mpz_pow_ui(pd.get_mpz_t(), den.get_mpz_t(), ae);
      Rational f = e > 0 ? Rational(pn, pd) : Rational(pd, pn);
      f.canonicalize();
      coeff *= f;
    }
    r.add_term(Monomial(std::move(kept)), coeff);
  }
  return r;
}

std::set<std::string, NameLess> Polynomial::variables() const {
  std::set<std::string, NameLess> s;
  for (const auto& [m, c] : t_)
    for (const auto& f : m.factors()) s.insert(f.first);
  return s;
}

bool Polynomial::depends_on(const std::string& v) const {
  for (const auto& [m, c] : t_)
    if (m.exponent(v) != 0) return true;
  return false;
}

int Polynomial::max_degree(const std::string& v) const {
  int d = 0;
  bool first = true;
  for (const auto& [m, c] : t_) {
    int e = m.exponent(v);
    d = first ? e : std::max(d, e);
    first = false;
  }
  return d;
}

int Polynomial::min_degree(const std::string& v) const {
  int d = 0;
  bool first = true;
  for (const auto& [m, c] : t_) {
    int e = m.exponent(v);
    d = first ? e : std::min(d, e);
    first = false;
  }
  return d;
}

Polynomial Polynomial::coefficient(const std::string& v, int k) const {
  Polynomial r;
  for (const auto& [m, c] : t_)
    if (m.exponent(v) == k) r.add_term(m.without(v), c);
  return r;
}

Rational Polynomial::evaluate(const std::map<std::string, Rational>& values) const {
  Polynomial p = partial_evaluate(values);
  if (!p.is_constant())
    throw std::invalid_argument("missing value for variable in " + p.str());
  return p.constant_term();
}

double Polynomial::evaluate(const std::function<double(const std::string&)>& value) const {
  double s = 0;
  for (const auto& [m, c] : t_) {
    double t = c.get_d();
    for (const auto& [v, e] : m.factors()) t *= std::pow(value(v), e);
    s += t;
  }
  return s;
}

std::optional<Rational> Polynomial::order(const std::map<std::string, Rational>& w) const {
  std::optional<Rational> best;
  for (const auto& [m, c] : t_) {
    Rational o = 0;
    for (const auto& [v, e] : m.factors()) {
      auto it = w.find(v);
      if (it != w.end()) o += it->second * e;
    }
    if (!best || o < *best) best = o;
  }
  return best;
}

Polynomial Polynomial::dominant_part(const std::map<std::string, Rational>& w) const {
  auto best = order(w);
  Polynomial r;
  if (!best) return r;
  for (const auto& [m, c] : t_) {
    Rational o = 0;
    for (const auto& [v, e] : m.factors()) {
      auto it = w.find(v);
      if (it != w.end()) o += it->second * e;
    }
    if (o == *best) r.add_term(m, c);
  }
  return r;
}

std::string Polynomial::str() const {
  if (t_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : t_) {
    Rational a = abs(c);
    if (first) {
      if (c < 0) os << '-';
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    if (m.is_one()) {
      os << a.get_str();
    } else {
      if (a != 1) os << a.get_str() << '*';
      os << m.str();
    }
  }
  return os.str();
}

// ------------------------------------------------------------------ parser

namespace {

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return p;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("polynomial parse error at " + std::to_string(pos_) + " (" + what +
                                ") in '" + s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool power_operator() {
    skip();
    if (eat('^')) return true;
    if (s_.compare(pos_, 2, "**") == 0) {
      pos_ += 2;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial p;
    bool neg = eat('-');
    if (!neg) eat('+');
    p = neg ? -term() : term();
    for (;;) {
      if (eat('+'))
        p += term();
      else if (eat('-'))
        p -= term();
      else
        return p;
    }
  }

  Polynomial term() {
    Polynomial p = power();
    for (;;) {
      if (eat('*')) {
        p *= power();
      } else if (eat('/')) {
        Polynomial d = power();
        if (d.size() != 1) fail("division by a non-monomial");
        p *= d.pow(-1);
      } else {
        return p;
      }
    }
  }

  Polynomial power() {
    Polynomial b = atom();
    if (power_operator()) {
      bool neg = eat('-');
      if (eat('(')) {
        neg = eat('-') || neg;
        int e = integer();
        if (!eat(')')) fail("expected )");
        return b.pow(neg ? -e : e);
      }
      int e = integer();
      return b.pow(neg ? -e : e);
    }
    return b;
  }

  int integer() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer exponent");
    return std::stoi(s_.substr(start, pos_ - start));
  }

  Polynomial atom() {
    skip();
    if (eat('(')) {
      Polynomial p = expr();
      if (!eat(')')) fail("expected )");
      return p;
    }
    if (eat('-')) return -atom();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      return Polynomial(parse_rational(s_.substr(start, pos_ - start)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                  s_[pos_] == '_' || s_[pos_] == '#'))
        ++pos_;
      return Polynomial::var(s_.substr(start, pos_ - start));
    }
    fail("unexpected character");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(const std::string& text) { return Parser(text).parse(); }

Polynomial symbolic_determinant(const std::vector<std::vector<Polynomial>>& m) {
  const std::size_t n = m.size();
  for (const auto& row : m)
    if (row.size() != n) throw std::invalid_argument("determinant of a non-square matrix");
  if (n == 0) return Polynomial(1);
  if (n > 14) throw std::invalid_argument("symbolic determinant limited to 14x14");
  // dp[S] = det of the first |S| rows restricted to the column set S.
  std::vector<Polynomial> dp(std::size_t(1) << n);
  dp[0] = Polynomial(1);
  for (std::size_t s = 1; s < dp.size(); ++s) {
    int row = __builtin_popcountll(s) - 1;
    Polynomial acc;
    for (std::size_t c = 0; c < n; ++c) {
      if (!(s & (std::size_t(1) << c))) continue;
      const Polynomial& e = m[row][c];
      const Polynomial& sub = dp[s & ~(std::size_t(1) << c)];
      if (e.is_zero() || sub.is_zero()) continue;
      int above = __builtin_popcountll(s >> (c + 1));
      Polynomial t = e * sub;
      if (above & 1)
        acc -= t;
      else
        acc += t;
    }
    dp[s] = std::move(acc);
  }
  return dp.back();
}

}  // namespace tropored
