#include "tropored/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tropored {

namespace {

Rational rpow(const Rational& q, long k) {
  Rational r = 1, b = k < 0 ? Rational(1 / q) : q;
  unsigned long e = static_cast<unsigned long>(std::labs(k));
  while (e) {
    if (e & 1) r *= b;
    e >>= 1;
    if (e) b *= b;
  }
  return r;
}

}  // namespace

OrderMap ScalingAssignment::weights(const PolySystem& sys) const {
  OrderMap w = e;
  for (std::size_t i = 0; i < sys.n(); ++i) w[sys.species()[i]] = d[i];
  return w;
}

std::vector<Polynomial> TruncatedSystem::f1(const PolySystem& sys) const {
  std::vector<Polynomial> f;
  for (std::size_t i = 0; i < sys.n(); ++i) f.push_back(sys.field_part(i, s1));
  return f;
}

std::vector<Polynomial> TruncatedSystem::f2(const PolySystem& sys) const {
  std::vector<Polynomial> f;
  for (std::size_t i = 0; i < sys.n(); ++i) f.push_back(sys.field_part(i, s2));
  return f;
}

std::vector<std::size_t> TimescaleDecomposition::union_up_to(std::size_t l) const {
  std::vector<std::size_t> u;
  for (std::size_t k = 0; k < l && k < groups.size(); ++k)
    u.insert(u.end(), groups[k].species.begin(), groups[k].species.end());
  return u;
}

std::optional<std::size_t> TimescaleDecomposition::group_of(std::size_t species) const {
  for (std::size_t k = 0; k < groups.size(); ++k)
    if (std::find(groups[k].species.begin(), groups[k].species.end(), species) !=
        groups[k].species.end())
      return k;
  return std::nullopt;
}

RoundedOrders round_parameter_orders(const std::vector<double>& k_star, const Rational& eps,
                                     int g) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("epsilon* must lie in (0,1)");
  if (g < 1) throw std::invalid_argument("g must be a positive integer");
  RoundedOrders out;
  const long double leps = std::log(static_cast<long double>(eps.get_d()));
  for (double k : k_star) {
    if (!(k > 0)) throw std::invalid_argument("parameter values must be strictly positive");
    long double x = g * std::log(static_cast<long double>(k)) / leps;
    long n = static_cast<long>(std::ceil(x - 0.5L));
    long m = static_cast<long>(std::floor(x));
    if (std::fabs(x - (m + 0.5L)) < 1e-9L) {
      // Near a half-integer: decide exactly. x > m + 1/2 iff k^(2g) < eps^(2m+1).
      Rational kq = rational_from_double(k);
      Rational lhs = rpow(kq, 2L * g), rhs = rpow(eps, 2 * m + 1);
      n = lhs < rhs ? m + 1 : m;  // exact tie rounds down
    }
    Rational e(n, g);
    e.canonicalize();
    out.e.push_back(e);
    out.kbar.push_back(k * std::pow(eps.get_d(), -e.get_d()));
  }
  return out;
}

std::vector<Rational> species_orders(const PolySystem& sys, const OrderMap& d) {
  std::vector<Rational> v;
  for (const auto& s : sys.species()) {
    auto it = d.find(s);
    if (it == d.end()) throw ModelError("no order given for species '" + s + "'");
    v.push_back(it->second);
  }
  return v;
}

ScaleResult scale_and_truncate(const PolySystem& sys, const std::vector<Rational>& d,
                               const OrderMap& e, const Rational& eps, int g) {
  const std::size_t n = sys.n(), r = sys.r();
  if (d.size() != n) throw std::invalid_argument("d has wrong length");
  ScaleResult res;
  ScalingAssignment& A = res.assignment;
  A.epsilon_star = eps;
  A.g = g;
  A.e = e;
  A.d = d;
  A.eta = Rational(1, 2 * g);
  for (std::size_t j = 0; j < r; ++j) {
    Rational o = 0;
    for (const auto& [p, k] : sys.rates()[j].params.factors()) {
      auto it = e.find(p);
      if (it == e.end()) throw ModelError("no order given for parameter '" + p + "'");
      o += it->second * k;
    }
    A.rate_order.push_back(o);
  }
  for (const auto& p : sys.parameters())
    if (p.value && e.count(p.name))
      A.kbar[p.name] = *p.value * std::pow(eps.get_d(), -e.at(p.name).get_d());

  const RationalMatrix& S = sys.stoich();
  A.psi = RationalMatrix(n, r);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      if (S(i, j) == 0) continue;
      Rational v = A.rate_order[j] - d[i];
      for (const auto& [s, k] : sys.rates()[j].species.factors())
        v += d[*sys.species_index(s)] * k;
      A.psi(i, j) = v;
      if (!any || v < A.mu) A.mu = v;
      any = true;
    }
  if (!any) A.mu = 0;
  A.a = RationalMatrix(n, r);
  std::vector<Rational> all_a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j)
      if (S(i, j) != 0) {
        A.a(i, j) = A.psi(i, j) - A.mu;
        all_a.push_back(A.a(i, j));
      }
  A.o = lcm_of_denominators(all_a).get_num();
  A.a_min.assign(n, std::nullopt);
  A.b.assign(n, std::nullopt);
  A.b_prime.assign(n, std::nullopt);
  A.mu_timescale.assign(n, std::nullopt);
  res.trunc.s1 = RationalMatrix(n, r);
  res.trunc.s2 = RationalMatrix(n, r);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<Rational> orders;
    for (std::size_t j = 0; j < r; ++j)
      if (S(i, j) != 0) orders.insert(A.a(i, j));
    if (orders.empty()) continue;
    Rational ai = *orders.begin();
    A.a_min[i] = ai;
    A.b[i] = Rational(A.o) * ai;
    A.mu_timescale[i] = *A.b[i] + Rational(A.o) * A.mu;
    if (orders.size() > 1) A.b_prime[i] = Rational(A.o) * *std::next(orders.begin()) - *A.b[i];
    for (std::size_t j = 0; j < r; ++j) {
      if (S(i, j) == 0) continue;
      if (A.a(i, j) == ai)
        res.trunc.s1(i, j) = S(i, j);
      else
        res.trunc.s2(i, j) = S(i, j);
    }
  }
  // Groups by equal a_i; constant species last.
  std::map<Rational, std::vector<std::size_t>> by_order;
  std::vector<std::size_t> constant;
  for (std::size_t i = 0; i < n; ++i) {
    if (A.a_min[i])
      by_order[*A.a_min[i]].push_back(i);
    else
      constant.push_back(i);
  }
  for (auto& [o, idx] : by_order) res.decomposition.groups.push_back({o, idx});
  if (!constant.empty()) res.decomposition.groups.push_back({std::nullopt, constant});
  return res;
}

std::optional<Rational> polynomial_order(const PolySystem& sys, const ScalingAssignment& a,
                                         const Polynomial& p) {
  return p.order(a.weights(sys));
}

std::optional<Rational> species_timescale(const ScalingAssignment& a, const PolySystem& sys,
                                          std::size_t i) {
  if (!a.a_min.at(i)) return std::nullopt;
  (void)sys;
  return *a.a_min[i] + a.mu;
}

LawTimescale law_timescale(const PolySystem& sys, const ScalingAssignment& a,
                           const Polynomial& phi) {
  if (phi.is_constant()) throw std::invalid_argument("conservation law is constant");
  LawTimescale t;
  OrderMap w = a.weights(sys);
  t.d_q = *phi.order(w);
  for (std::size_t i = 0; i < sys.n(); ++i) {
    Polynomial dphi = phi.derivative(sys.species()[i]);
    if (!dphi.is_zero()) t.residual += dphi * sys.field(i);
  }
  auto o = t.residual.order(w);
  if (o) t.mu_q = *o - t.d_q;
  return t;
}

std::string order_string(const std::optional<Rational>& o) {
  return o ? o->get_str() : std::string("inf");
}

nlohmann::json scaling_report(const PolySystem& sys, const ScaleResult& r) {
  const auto& A = r.assignment;
  nlohmann::json j;
  j["epsilon_star"] = A.epsilon_star.get_str();
  j["g"] = A.g;
  nlohmann::json e = nlohmann::json::object(), d = nlohmann::json::object();
  for (const auto& [k, v] : A.e) e[k] = v.get_str();
  for (std::size_t i = 0; i < sys.n(); ++i) d[sys.species()[i]] = A.d[i].get_str();
  j["e"] = e;
  j["d"] = d;
  j["o"] = A.o.get_str();
  j["mu"] = A.mu.get_str();
  nlohmann::json b = nlohmann::json::object(), bp = nlohmann::json::object();
  for (std::size_t i = 0; i < sys.n(); ++i) {
    b[sys.species()[i]] = order_string(A.b[i]);
    if (A.b_prime[i]) bp[sys.species()[i]] = A.b_prime[i]->get_str();
  }
  j["b"] = b;
  j["b_prime"] = bp;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& gr : r.decomposition.groups) {
    nlohmann::json names = nlohmann::json::array();
    for (auto i : gr.species) names.push_back(sys.species()[i]);
    groups.push_back({{"order", order_string(gr.order)}, {"species", names}});
  }
  j["groups"] = groups;
  nlohmann::json s1 = nlohmann::json::array();
  for (std::size_t i = 0; i < sys.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < sys.r(); ++k) row.push_back(r.trunc.s1(i, k).get_str());
    s1.push_back(row);
  }
  j["s1"] = s1;
  nlohmann::json kb = nlohmann::json::object();
  for (const auto& [k, v] : A.kbar) kb[k] = v;
  j["kbar"] = kb;
  nlohmann::json trunc = nlohmann::json::object();
  auto f1 = r.trunc.f1(sys);
  for (std::size_t i = 0; i < sys.n(); ++i) trunc[sys.species()[i]] = f1[i].str();
  j["truncated"] = trunc;
  return j;
}

}  // namespace tropored
