#pragma once

#include "tropored/lp.hpp"
#include "tropored/model.hpp"
#include "tropored/scaling.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tropored {

// c + a . d
struct AffineForm {
  std::vector<Rational> a;
  Rational c;
  Rational eval(const std::vector<Rational>& d) const;
};

// min(pos) = min(neg).
struct MinEquation {
  std::string label;
  std::vector<AffineForm> pos;
  std::vector<AffineForm> neg;
  std::optional<std::size_t> row;  // species row, empty for law constraints
};

struct ExactLawOrder {
  Polynomial phi;
  std::optional<Rational> order;  // free when empty (no constraint)
};

struct MinPlusConstraintSystem {
  std::vector<std::string> species;
  std::vector<std::size_t> fast;
  std::vector<std::size_t> slow;
  std::vector<MinEquation> equations;
  // Timescale forms psi_sj of every term of every slow row.
  std::vector<AffineForm> slow_terms;
  std::vector<std::string> infeasible_by_sign;
  std::size_t nvars() const { return species.size(); }
};

class Polyhedron {
public:
  Polyhedron() = default;
  explicit Polyhedron(std::size_t n, std::vector<LinearConstraint> cons = {})
      : n_(n), cons_(std::move(cons)) {}

  std::size_t dim() const { return n_; }
  const std::vector<LinearConstraint>& constraints() const { return cons_; }
  void add(LinearConstraint c) { cons_.push_back(std::move(c)); }

  bool empty() const;
  bool contains(const std::vector<Rational>& x) const;
  // Exact inclusion (strict constraints respected).
  bool subset_of(const Polyhedron& o) const;
  bool intersects_halfspace(const LinearConstraint& c) const;
  // Canonical equalities (RREF) and non-redundant inequalities.
  Polyhedron simplified() const;
  // Largest uniform slack of the strict constraints, capped at `cap`; 0 when none is possible.
  Rational strict_margin(const Rational& cap = 1) const;

  std::vector<std::string> equality_strings(const std::vector<std::string>& names) const;
  std::vector<std::string> inequality_strings(const std::vector<std::string>& names) const;

private:
  std::size_t n_ = 0;
  std::vector<LinearConstraint> cons_;
};

enum class EquilibrationKind { Total, Partial };

struct EquilibrationSolution {
  std::vector<Rational> d;
  std::vector<std::size_t> fast_set;
  Polyhedron polyhedron;
  EquilibrationKind kind = EquilibrationKind::Total;
};

struct SolveResult {
  std::vector<EquilibrationSolution> solutions;
  bool truncated = false;
  std::size_t branches = 0;
};

// Rate orders e_j from parameter orders.
std::vector<Rational> rate_orders(const PolySystem& sys, const OrderMap& e);

// Rows in `fast` must equilibrate; an empty fast set gives law constraints only.
// When `fast` is a proper subset, the timescale separation constraints are added.
MinPlusConstraintSystem build_constraints(const PolySystem& sys, const OrderMap& e,
                                          const std::vector<std::size_t>& fast,
                                          const std::vector<ExactLawOrder>& laws = {});

// Branch polyhedron for one choice of (positive, negative) minimum per equation.
Polyhedron branch_polyhedron(const MinPlusConstraintSystem& cs,
                             const std::vector<std::pair<std::size_t, std::size_t>>& choice);

SolveResult solve(const MinPlusConstraintSystem& cs, std::size_t max_branches = 200000);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> violations;
};

VerifyResult verify(const PolySystem& sys, const OrderMap& e, const std::vector<Rational>& d,
                    const std::vector<std::size_t>& fast,
                    const std::vector<ExactLawOrder>& laws = {});

// Point of the polyhedron closest to the anchor (Euclidean), or the smallest
// L1 norm point (ties broken lexicographically) without an anchor.
std::optional<std::vector<Rational>> representative(const Polyhedron& p,
                                                    const std::optional<std::vector<Rational>>& anchor);

EquilibrationSolution select_representative(const std::vector<EquilibrationSolution>& sols,
                                            const std::optional<std::vector<Rational>>& anchor);

nlohmann::json solution_to_json(const PolySystem& sys, const EquilibrationSolution& s);

}  // namespace tropored
