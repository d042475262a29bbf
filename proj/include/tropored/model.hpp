#pragma once

#include "tropored/linalg.hpp"
#include "tropored/polynomial.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tropored {

struct Parameter {
  std::string name;
  std::optional<double> value;  // empty: symbolic
};

// Rate j is the monomial k^beta_j x^alpha_j; usually beta_j is a single parameter.
struct Rate {
  Monomial params;
  Monomial species;
};

// f_i = sum_j S_ij k^beta_j x^alpha_j.
class PolySystem {
public:
  PolySystem() = default;
  PolySystem(std::vector<std::string> species, std::vector<Parameter> parameters,
             std::vector<Rate> rates, RationalMatrix stoich);

  // Splits each right-hand side into rates (distinct parameter/species monomial
  // pairs, first-appearance order) and stoichiometric coefficients.
  static PolySystem from_polynomials(std::vector<std::string> species,
                                     std::vector<Parameter> parameters,
                                     const std::vector<Polynomial>& rhs);

  std::size_t n() const { return species_.size(); }
  std::size_t r() const { return rates_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Parameter>& parameters() const { return parameters_; }
  const std::vector<Rate>& rates() const { return rates_; }
  const RationalMatrix& stoich() const { return stoich_; }

  std::optional<std::size_t> species_index(const std::string& name) const;
  std::optional<std::size_t> parameter_index(const std::string& name) const;
  bool is_species(const std::string& name) const { return species_index(name).has_value(); }
  bool is_parameter(const std::string& name) const { return parameter_index(name).has_value(); }

  Polynomial rate_polynomial(std::size_t j) const;
  Polynomial field(std::size_t i) const;
  std::vector<Polynomial> field() const;
  // Row i assembled with another stoichiometric matrix of the same shape (e.g. S1).
  Polynomial field_part(std::size_t i, const RationalMatrix& s) const;

  std::vector<Polynomial> user_laws;
  std::map<std::string, double> initial;

  void validate() const;

private:
  std::vector<std::string> species_;
  std::vector<Parameter> parameters_;
  std::vector<Rate> rates_;
  RationalMatrix stoich_;
};

// Model file: the system plus optional scaling data and transformation hints.
struct ModelSpec {
  std::string name;
  PolySystem system;
  std::optional<Rational> epsilon;
  std::map<std::string, Rational> d;  // species orders
  std::map<std::string, Rational> e;  // parameter orders
  std::vector<std::string> pivot_preference;
  std::string new_variable_names = "pivot";  // or "fresh"
  nlohmann::json extra;                      // unrecognised keys, passed through
};

class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

ModelSpec model_from_json(const nlohmann::json& j);
ModelSpec load_model(const std::string& path);
nlohmann::json model_to_json(const ModelSpec& m);

nlohmann::json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j);
nlohmann::json rational_to_json(const Rational& q);
Rational rational_from_json(const nlohmann::json& j);

// Numeric right-hand side at positive concentrations x and parameter values k.
std::vector<double> evaluate_field(const PolySystem& sys, const std::vector<double>& x,
                                   const std::vector<double>& k);

}  // namespace tropored
