#pragma once

#include "tropored/model.hpp"
#include "tropored/scaling.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropored {

class TransformError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DetStatus { Nonzero, Zero, ZeroOnVariety };
std::string det_status_name(DetStatus s);

struct LevelDeterminant {
  std::size_t level = 0;  // 1-based
  std::size_t size = 0;
  DetStatus status = DetStatus::Nonzero;
  std::optional<Polynomial> symbolic;  // small blocks only
  std::string note;
};

struct DegeneracyReport {
  std::optional<std::size_t> level;      // first degenerate level, 1-based
  std::vector<LevelDeterminant> levels;  // checked levels, the degenerate one last
};

// Species of groups 1..l.
std::vector<std::size_t> level_variables(const TimescaleDecomposition& dec, std::size_t l);

// D_{X_l} F_l^(1).
std::vector<std::vector<Polynomial>> level_jacobian(const PolySystem& sys, const ScaleResult& sc,
                                                    std::size_t l);

// First level whose truncated Jacobian is singular, either identically or on
// the steady variety of the truncated level equations.
DegeneracyReport degeneracy_level(const PolySystem& sys, const ScaleResult& sc, std::mt19937_64& rng,
                                  std::size_t symbolic_cap = 8);

// One eliminated variable per law with a generically nonsingular minor.
// Candidates are ranked slowest first, then by `preference`, then by index.
std::vector<std::string> choose_pivots(const PolySystem& sys, const ScaleResult& sc,
                                       const std::vector<Polynomial>& laws,
                                       const std::vector<std::string>& preference, std::mt19937_64& rng);

// Sign convention: semi-positive laws are kept; otherwise the law is made
// positive at the initial condition, then at x = eps^d, then by its first coefficient.
Polynomial orient_law(const Polynomial& phi, const ModelSpec& m);

struct LedgerRow {
  std::size_t iteration = 0;
  std::size_t level = 0;
  std::vector<std::string> group;
  std::optional<Rational> tov;  // slowest species timescale in the support
  Polynomial law;               // current variables
  Polynomial law_original;      // original variables
  std::optional<Rational> toc;  // empty = exact
  bool exact = false;
  Rational d_q;
  std::string pivot;
  std::string label;     // name of the law variable before renaming
  std::string new_name;  // variable or parameter that carries the law
  std::optional<bool> slower_after;  // new variable slower than its support after rescaling
};

struct Substitution {
  std::string pivot;
  Polynomial psi;  // in the new variables
  Polynomial law;
  bool exact = false;
  std::string new_name;
};

struct MintedParameter {
  std::string name;
  Polynomial law;           // current variables at minting time
  Polynomial law_original;  // original variables
  std::optional<double> value;
  Rational order;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t level = 0;
  std::vector<LevelDeterminant> determinants;
  std::vector<std::string> pivots;
  std::optional<bool> complete;
  std::string completeness_note;
  bool round_trip = false;
  std::vector<std::string> notes;
};

enum class TransformMode { Explicit, Implicit };

struct TransformOptions {
  TransformMode mode = TransformMode::Explicit;
  std::size_t max_iter = 50;
  std::uint64_t seed = 1;
  int g = 1;
};

struct TransformState {
  ModelSpec original;
  ModelSpec model;  // current model
  std::map<std::string, Polynomial> original_in_current;
  std::map<std::string, Polynomial> current_in_original;
  std::map<std::string, Polynomial> parameter_definitions;  // minted parameters, original variables
  std::vector<Substitution> substitutions;
  std::vector<MintedParameter> minted;
  std::vector<Polynomial> constraints;  // implicit mode: each expression vanishes
  std::vector<Polynomial> positivity;   // each expression is nonnegative
  std::vector<LedgerRow> ledger;
  std::vector<IterationRecord> iterations;
  std::map<std::string, std::string> renames;  // law label -> carrier name
  bool converged = false;
  std::string stop_reason;
};

// Scaling of a model from its stored orders; parameters without an order are rounded.
ScaleResult scale_model(const ModelSpec& m, int g = 1);

TransformState initial_state(const ModelSpec& m);
TransformState transform(const ModelSpec& m, const TransformOptions& opt = {});
TransformState transform_explicit(const ModelSpec& m, std::size_t max_iter = 50, std::uint64_t seed = 1);
TransformState transform_implicit(const ModelSpec& m, std::uint64_t seed = 1);

// Chain-rule identity: every original variable, written in the current
// variables, evolves by the original field. Returns the failing variables.
std::vector<std::string> round_trip_failures(const TransformState& s);

nlohmann::json ledger_to_json(const TransformState& s);
nlohmann::json transform_report(const TransformState& s);

}  // namespace tropored
