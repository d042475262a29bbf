#pragma once

#include "tropored/sampling.hpp"
#include "tropored/scaling.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tropored {

enum class LawKind { Linear, Monomial, Polynomial };
std::string kind_name(LawKind k);
LawKind classify_law(const Polynomial& phi);

struct ConservationLaw {
  LawKind kind = LawKind::Linear;
  Polynomial phi;
  std::vector<Rational> coefficients;  // linear laws: one per species
  std::vector<std::size_t> support;
  bool exact = false;
  std::optional<bool> irreducible;
  std::string irreducibility_note;
  Rational d_q;
  std::optional<Rational> mu_q;  // empty = +infinity
  Polynomial residual;           // D_x phi . F
  std::string verdict;           // exact | slow | VIOLATION
};

struct LawSet {
  std::vector<ConservationLaw> laws;
  std::optional<bool> complete;
  std::optional<bool> independent;
};

struct LawVerification {
  bool conserved = false;
  bool exact = false;
  Polynomial truncated_residual;  // D_x phi . F1
  Polynomial residual;            // D_x phi . F
};

Polynomial law_derivative(const Polynomial& phi, const std::vector<std::string>& species,
                          const std::vector<Polynomial>& field);

LawVerification verify_law(const PolySystem& sys, const std::vector<Polynomial>& truncated_field,
                           const Polynomial& phi);

std::vector<std::size_t> law_support(const PolySystem& sys, const Polynomial& phi);

Polynomial linear_law(const PolySystem& sys, const std::vector<Rational>& c);

// Left-kernel laws of S1 restricted to `rows` (all species when empty).
LawSet find_linear_laws(const PolySystem& sys, const ScaleResult& sc,
                        const std::vector<std::size_t>& rows = {});

struct SlownessReport {
  Rational d_q;
  std::optional<Rational> mu_q;
  std::string verdict;
};

SlownessReport slowness_report(const PolySystem& sys, const ScalingAssignment& a,
                               const Polynomial& phi);

// Fills exactness, orders, verdict and irreducibility of a law.
ConservationLaw analyse_law(const PolySystem& sys, const ScaleResult& sc, const Polynomial& phi);

struct CompletenessReport {
  std::size_t n = 0;
  std::size_t rank = 0;              // rank of D_x(F1, Phi) on the steady variety
  std::size_t independence_rank = 0;  // rank of D_x Phi
  std::optional<bool> complete;
  std::optional<bool> independent;
  bool certified = false;
  std::string status;
  // A nonvanishing maximal minor, as a polynomial, with the stacked row indices used.
  std::optional<Polynomial> minor;
  std::vector<std::size_t> minor_rows;
};

// Rank tests of Definition-4 type, evaluated on positive points of {F1 = 0}.
CompletenessReport completeness_test(const PolySystem& sys, const std::vector<Polynomial>& f1,
                                     const std::vector<Polynomial>& laws, std::mt19937_64& rng,
                                     std::size_t samples = 25);

// Structural checks used by the invariant suite; each returns "" when satisfied.
std::string lemma1_violation(const PolySystem& sys, const ScalingAssignment& a,
                             const ConservationLaw& law);
std::string dominant_part_violation(const PolySystem& sys, const ScalingAssignment& a,
                                    const ConservationLaw& law);
std::string slowness_violation(const PolySystem& sys, const ScalingAssignment& a,
                               const ConservationLaw& law);

nlohmann::json law_to_json(const PolySystem& sys, const ConservationLaw& law);

std::vector<std::string> all_variables(const PolySystem& sys);

}  // namespace tropored
