#pragma once

#include <gmpxx.h>

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tropored {

using Rational = mpq_class;

// Accepts "3", "-2/5", "0.125", "1e-3".
Rational parse_rational(const std::string& s);
std::string to_string(const Rational& q);
Rational rational_from_double(double v);

// Natural order on names: x2 < x10, k9 < k38.
bool name_less(const std::string& a, const std::string& b);

struct NameLess {
  bool operator()(const std::string& a, const std::string& b) const { return name_less(a, b); }
};

// Laurent monomial: sorted (variable, exponent) pairs with nonzero exponents.
class Monomial {
public:
  using Factor = std::pair<std::string, int>;

  Monomial() = default;
  explicit Monomial(std::vector<Factor> factors);
  static Monomial var(const std::string& name, int exp = 1);

  const std::vector<Factor>& factors() const { return f_; }
  int exponent(const std::string& v) const;
  bool is_one() const { return f_.empty(); }
  bool has_negative() const;
  int total_degree() const;

  Monomial operator*(const Monomial& o) const;
  Monomial pow(int k) const;
  Monomial inverse() const { return pow(-1); }
  Monomial without(const std::string& v) const;
  // Keeps only variables accepted by the predicate.
  Monomial restricted(const std::function<bool(const std::string&)>& keep) const;

  bool operator==(const Monomial& o) const { return f_ == o.f_; }
  bool operator<(const Monomial& o) const;

  std::string str() const;

private:
  std::vector<Factor> f_;
};

class Polynomial {
public:
  using Terms = std::map<Monomial, Rational>;

  Polynomial() = default;
  Polynomial(const Rational& c);  // NOLINT implicit constant
  Polynomial(long c) : Polynomial(Rational(c)) {}  // NOLINT
  Polynomial(int c) : Polynomial(Rational(c)) {}  // NOLINT
  static Polynomial var(const std::string& name);
  static Polynomial term(const Rational& c, const Monomial& m);

  const Terms& terms() const { return t_; }
  std::size_t size() const { return t_.size(); }
  bool is_zero() const { return t_.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  // Single term (or zero) polynomial.
  bool is_monomial() const { return t_.size() == 1; }

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(const Polynomial& o);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial pow(int k) const;  // negative k only for single-term polynomials

  bool operator==(const Polynomial& o) const { return t_ == o.t_; }
  bool operator!=(const Polynomial& o) const { return !(*this == o); }

  Polynomial derivative(const std::string& v) const;
  // Simultaneous substitution. Variables with negative exponent may only be
  // replaced by single-term polynomials.
  Polynomial substitute(const std::map<std::string, Polynomial>& sub) const;
  Polynomial rename(const std::map<std::string, std::string>& names) const;
  Polynomial partial_evaluate(const std::map<std::string, Rational>& values) const;

  std::set<std::string, NameLess> variables() const;
  bool depends_on(const std::string& v) const;
  int max_degree(const std::string& v) const;
  int min_degree(const std::string& v) const;
  // Terms containing v^k with v removed.
  Polynomial coefficient(const std::string& v, int k) const;

  Rational evaluate(const std::map<std::string, Rational>& values) const;
  double evaluate(const std::function<double(const std::string&)>& value) const;

  // Smallest term order under the given weights; nullopt for the zero polynomial.
  std::optional<Rational> order(const std::map<std::string, Rational>& weights) const;
  // Terms whose order equals the minimum.
  Polynomial dominant_part(const std::map<std::string, Rational>& weights) const;

  std::string str() const;

private:
  void add_term(const Monomial& m, const Rational& c);
  Terms t_;
};

// Recursive-descent parser for + - * / ^ with integer exponents, rational
// literals and parentheses. Division only by constants or single terms.
Polynomial parse_polynomial(const std::string& text);

// Symbolic determinant of a square polynomial matrix (subset expansion).
Polynomial symbolic_determinant(const std::vector<std::vector<Polynomial>>& m);

}  // namespace tropored
