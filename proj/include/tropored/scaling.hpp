#pragma once

#include "tropored/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tropored {

using OrderMap = std::map<std::string, Rational>;

struct ScalingAssignment {
  Rational epsilon_star;
  int g = 1;
  OrderMap e;                      // parameter orders
  std::vector<Rational> d;         // species orders
  std::vector<Rational> rate_order;  // e_j of each rate (parameter monomial order)
  std::map<std::string, double> kbar;
  Rational eta;
  RationalMatrix psi;  // n x r; meaningful where S_ij != 0
  RationalMatrix a;    // psi - mu
  Rational mu;
  std::vector<std::optional<Rational>> a_min;  // a_i; empty for zero rows
  mpz_class o = 1;
  std::vector<std::optional<Rational>> b;        // o * a_i
  std::vector<std::optional<Rational>> b_prime;  // o * (second order) - b_i
  std::vector<std::optional<Rational>> mu_timescale;  // b_i + o mu

  // Orders of species and parameters, for Polynomial::order.
  OrderMap weights(const PolySystem& sys) const;
};

struct TruncatedSystem {
  RationalMatrix s1;
  RationalMatrix s2;
  std::vector<Polynomial> f1(const PolySystem& sys) const;
  std::vector<Polynomial> f2(const PolySystem& sys) const;
};

struct TimescaleGroup {
  std::optional<Rational> order;  // epsilon units relative to mu; empty = constant variables
  std::vector<std::size_t> species;
};

struct TimescaleDecomposition {
  std::vector<TimescaleGroup> groups;  // fastest first
  std::size_t m() const { return groups.size(); }
  // Species of groups 0..l-1 (levels are 1-based in reports).
  std::vector<std::size_t> union_up_to(std::size_t l) const;
  std::optional<std::size_t> group_of(std::size_t species) const;
};

struct ScaleResult {
  ScalingAssignment assignment;
  TruncatedSystem trunc;
  TimescaleDecomposition decomposition;
};

struct RoundedOrders {
  std::vector<Rational> e;
  std::vector<double> kbar;
};

// e_i = round_half_down(g log_eps k_i)/g and kbar_i = k_i eps^-e_i.
RoundedOrders round_parameter_orders(const std::vector<double>& k_star, const Rational& epsilon_star,
                                     int g);

ScaleResult scale_and_truncate(const PolySystem& sys, const std::vector<Rational>& d,
                               const OrderMap& e, const Rational& epsilon_star, int g = 1);

// Order of a polynomial in (k, x) under the assignment's weights.
std::optional<Rational> polynomial_order(const PolySystem& sys, const ScalingAssignment& a,
                                         const Polynomial& p);

// min_j psi_ij (absolute epsilon units); empty for constant species.
std::optional<Rational> species_timescale(const ScalingAssignment& a, const PolySystem& sys,
                                          std::size_t i);

struct LawTimescale {
  Rational d_q;                  // order of the law (smallest term order)
  std::optional<Rational> mu_q;  // empty = +infinity (exact law)
  Polynomial residual;           // D_x phi . F
};

LawTimescale law_timescale(const PolySystem& sys, const ScalingAssignment& a, const Polynomial& phi);

std::string order_string(const std::optional<Rational>& o);

nlohmann::json scaling_report(const PolySystem& sys, const ScaleResult& r);

// d vector in species order from a name map; missing species raise ModelError.
std::vector<Rational> species_orders(const PolySystem& sys, const OrderMap& d);

}  // namespace tropored
