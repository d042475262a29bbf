#pragma once

// Plain C++17 interface to the odeint steppers. Boost 1.74 uBLAS does not
// build as C++20, so odeint_driver.cpp is compiled in C++17 mode.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropored::detail {

using RhsFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;
using JacFn = std::function<void(const std::vector<double>&, std::vector<std::vector<double>>&)>;

// Thrown by callbacks when the right-hand side cannot be evaluated; the
// driver stops and returns what it has.
struct RhsFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DriverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DriverOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  bool rosenbrock = true;
  std::size_t max_steps = 2000000;
  double initial_dt = 0;
};

struct DriverResult {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::size_t steps = 0, clips = 0, rejects = 0;
  bool truncated = false;
  std::string diagnostic;
};

DriverResult run_odeint(const RhsFn& f, const JacFn& jac, const std::vector<double>& x0,
                        const std::vector<double>& times, const DriverOptions& opt);

}  // namespace tropored::detail
