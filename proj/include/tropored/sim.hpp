#pragma once

#include "tropored/model.hpp"
#include "tropored/reduce.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropored {

class SimError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Method { Rosenbrock, Dopri5 };
Method parse_method(const std::string& s);

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  Method method = Method::Rosenbrock;
  std::size_t max_steps = 2000000;
  double initial_dt = 0;  // 0: chosen from the first output interval
};

struct Trajectory {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // one row per time
  nlohmann::json meta = nlohmann::json::object();

  std::size_t column(const std::string& name) const;
  std::vector<double> series(const std::string& name) const;
};

// n points from t0 to t1, logarithmically spaced when `log` (t0 > 0).
std::vector<double> time_grid(double t0, double t1, std::size_t n, bool log = false);

using Rhs = std::function<void(const std::vector<double>& x, std::vector<double>& dx)>;
using Jac = std::function<void(const std::vector<double>& x, std::vector<std::vector<double>>& J)>;

// Adaptive integration with dense output at `times` (times[0] is the start).
// Components below -atol reject the step; small negatives are clipped to atol/10.
// An empty Jacobian is replaced by forward differences.
Trajectory integrate(const Rhs& f, const Jac& jac, const std::vector<double>& x0, const std::vector<double>& times,
                     const IntegrateOptions& opt, std::vector<std::string> names);

Trajectory integrate_full(const PolySystem& sys, const std::vector<double>& x0, const std::vector<double>& times,
                          const IntegrateOptions& opt = {});

// Initial state from the model's initial values (missing species raise).
std::vector<double> initial_state_vector(const PolySystem& sys);

// Driving (and nested quenched) variables are integrated; slaved variables are
// eliminated at every evaluation. Output columns: slaved, driving, quenched.
// An elimination failure truncates the trajectory (meta.truncated).
Trajectory integrate_reduced(const ReducedModel& r, const std::map<std::string, double>& initial,
                             const std::vector<double>& times, const IntegrateOptions& opt = {});

struct VariableError {
  std::string name;
  double sup_abs = 0;
  double sup_rel = 0;  // sup |a - b| / sup |a|
  double l2_rel = 0;   // ||a - b|| / ||a||
  std::size_t points = 0;
};

struct Comparison {
  double skip_layer = 0;
  std::vector<VariableError> variables;
  const VariableError& at(const std::string& name) const;
};

// Errors of `reduced` against `full` on full's time points t >= skip_layer,
// with reduced interpolated linearly. Shared columns only unless `vars` is given.
Comparison compare(const Trajectory& full, const Trajectory& reduced, double skip_layer,
                   const std::vector<std::string>& vars = {});

struct EquilibrationCurves {
  std::vector<std::string> species;
  std::vector<double> times;
  double epsilon = 0;
  // log_eps of summed production / consumption; +infinity when the sum is zero.
  std::vector<std::vector<double>> production, consumption;
  std::vector<std::vector<bool>> equilibrated;
};

EquilibrationCurves equilibration_diagnostic(const PolySystem& sys, const Trajectory& traj, double epsilon);

void write_csv(const Trajectory& t, const std::string& path);
Trajectory read_csv(const std::string& path);
nlohmann::json comparison_json(const Comparison& c);
nlohmann::json equilibration_json(const EquilibrationCurves& e);

}  // namespace tropored
