#pragma once

#include "tropored/polynomial.hpp"

#include <vector>

namespace tropored {

enum class Relation { Le, Ge, Eq, Gt };

// a . x  (rel)  b  over free rational variables x.
struct LinearConstraint {
  std::vector<Rational> a;
  Relation rel;
  Rational b;
};

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded } status = Status::Infeasible;
  std::vector<Rational> x;
  Rational value;
};

// Exact two-phase simplex with Bland's rule. Strict constraints are not
// allowed here; see find_point.
LpResult lp_minimize(std::size_t nvars, const std::vector<LinearConstraint>& cons,
                     const std::vector<Rational>& cost);

// Finds a point satisfying all constraints, strict ones included. Strict
// constraints are met with the largest uniform margin up to `max_margin`.
// Returns false when the (strict) system is infeasible.
bool find_point(std::size_t nvars, const std::vector<LinearConstraint>& cons,
                std::vector<Rational>& point, Rational max_margin = 1);

bool satisfies(const LinearConstraint& c, const std::vector<Rational>& x);

}  // namespace tropored
