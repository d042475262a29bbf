#pragma once

#include "tropored/model.hpp"
#include "tropored/numeric.hpp"
#include "tropored/scaling.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropored {

class ReduceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ReduceVariant { Nested, Simple, Slowest };
std::string variant_name(ReduceVariant v);
ReduceVariant parse_variant(const std::string& s);

// One step of the elimination of the slaved variables. Steps are evaluated in
// order; each one only uses driving/quenched values and variables of earlier steps.
struct SolveStep {
  enum class Kind { Linear, Quadratic, Newton } kind = Kind::Newton;
  std::vector<std::string> vars;
  std::vector<Polynomial> equations;
  // Linear: vars[i] = numerators[i] / denominator.
  std::vector<Polynomial> numerators;
  Polynomial denominator;
  // Quadratic in vars[0]: a v^2 + b v + c = 0 with a of positive leading sign;
  // root (-b + branch sqrt(b^2 - 4ac)) / 2a.
  Polynomial a, b, c;
  int branch = 1;
  std::string closed_form() const;
};

struct ReducedModel {
  std::size_t level = 0;
  ReduceVariant variant = ReduceVariant::Simple;
  std::vector<std::string> slaved, driving, quenched;
  std::vector<Polynomial> slaved_equations;  // F^(1) rows of the slaved species
  std::vector<Polynomial> driving_odes;
  std::vector<Polynomial> quenched_odes;      // nested variant: truncated slower rows
  std::vector<Rational> quenched_delta_orders;  // timescale gap to the driving group
  std::map<std::string, double> quenched_values;  // simple/slowest: frozen values
  std::vector<SolveStep> plan;
  std::map<std::string, double> parameters;
  // Solved point at the initial state (known and slaved values); warm start
  // and continuation anchor for the eliminator. Empty when that solve failed.
  std::map<std::string, double> reference;
  std::vector<std::string> notes;
};

struct ReduceOptions {
  bool keep_higher_order = false;  // driving rows with the full field
  std::uint64_t seed = 1;
};

// Reduced model at level l (1-based). `slowest` ignores l and uses the last
// level with a finite timescale.
ReducedModel reduce_at(const ModelSpec& m, std::size_t l, ReduceVariant variant, const ReduceOptions& opt = {});

// Slaved values for the given driving/quenched values; `guess` warm-starts
// Newton blocks. Throws ReduceError when no positive quasi-steady state is found.
std::map<std::string, double> eliminate_fast(const ReducedModel& r, const std::map<std::string, double>& known,
                                             const std::map<std::string, double>& guess = {});

struct EliminatorImpl;

// eliminate_fast with the plan compiled once, for repeated calls.
class FastEliminator {
public:
  explicit FastEliminator(const ReducedModel& r);
  std::map<std::string, double> solve(const std::map<std::string, double>& known,
                                      const std::map<std::string, double>& guess = {}) const;

private:
  std::shared_ptr<const ReducedModel> model_;
  std::shared_ptr<const EliminatorImpl> impl_;
};

// Max scaled residual of the slaved equations.
double slaved_residual(const ReducedModel& r, const std::map<std::string, double>& values);

nlohmann::json reduced_to_json(const ReducedModel& r);

}  // namespace tropored
