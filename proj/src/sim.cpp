#include "tropored/sim.hpp"

#include "tropored/numeric.hpp"

#include "odeint_driver.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace tropored {

Method parse_method(const std::string& s) {
  if (s == "rosenbrock" || s == "rosenbrock4") return Method::Rosenbrock;
  if (s == "dopri5") return Method::Dopri5;
  throw SimError("unknown integration method '" + s + "'");
}

std::size_t Trajectory::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SimError("trajectory has no column " + name);
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> Trajectory::series(const std::string& name) const {
  auto c = column(name);
  std::vector<double> out;
  for (const auto& row : states) out.push_back(row[c]);
  return out;
}

std::vector<double> time_grid(double t0, double t1, std::size_t n, bool log) {
  if (n < 2 || !(t1 > t0)) throw SimError("time grid needs n >= 2 and t1 > t0");
  if (log && !(t0 > 0)) throw SimError("logarithmic time grid needs t0 > 0");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = static_cast<double>(i) / static_cast<double>(n - 1);
    t[i] = log ? t0 * std::pow(t1 / t0, s) : t0 + (t1 - t0) * s;
  }
  t.back() = t1;
  return t;
}

Trajectory integrate(const Rhs& f, const Jac& jac, const std::vector<double>& x0, const std::vector<double>& times,
                     const IntegrateOptions& opt, std::vector<std::string> names) {
  if (times.empty()) throw SimError("no output times");
  if (!std::is_sorted(times.begin(), times.end()) ||
      std::adjacent_find(times.begin(), times.end()) != times.end())
    throw SimError("output times must be strictly increasing");
  for (double v : x0)
    if (!(v >= 0)) throw SimError("initial state must be nonnegative");
  auto guard = [](auto&& fn) {
    return [fn](const std::vector<double>& x, auto& out) {
      try {
        fn(x, out);
      } catch (const SimError&) {
        throw;
      } catch (const std::exception& e) {
        throw detail::RhsFailure(e.what());
      }
    };
  };
  detail::DriverOptions d{opt.rtol, opt.atol, opt.method == Method::Rosenbrock, opt.max_steps, opt.initial_dt};
  detail::DriverResult r;
  try {
    r = detail::run_odeint(guard(f), jac ? detail::JacFn(guard(jac)) : detail::JacFn{}, x0, times, d);
  } catch (const detail::DriverError& e) {
    throw SimError(e.what());
  }
  Trajectory out;
  out.names = std::move(names);
  out.times = std::move(r.times);
  out.states = std::move(r.states);
  out.meta["rtol"] = opt.rtol;
  out.meta["atol"] = opt.atol;
  out.meta["method"] = opt.method == Method::Rosenbrock ? "rosenbrock4" : "dopri5";
  out.meta["steps"] = r.steps;
  out.meta["clipped"] = r.clips;
  out.meta["rejected_for_positivity"] = r.rejects;
  out.meta["truncated"] = r.truncated;
  if (r.truncated) {
    out.meta["diagnostic"] = r.diagnostic;
    spdlog::warn("integration truncated at t = {}: {}", out.times.back(), r.diagnostic);
  }
  return out;
}

std::vector<double> initial_state_vector(const PolySystem& sys) {
  std::vector<double> x0;
  for (const auto& s : sys.species()) {
    auto it = sys.initial.find(s);
    if (it == sys.initial.end()) throw SimError("no initial value for " + s);
    x0.push_back(it->second);
  }
  return x0;
}

Trajectory integrate_full(const PolySystem& sys, const std::vector<double>& x0, const std::vector<double>& times,
                          const IntegrateOptions& opt) {
  if (x0.size() != sys.n()) throw SimError("initial state has the wrong size");
  NumericField F(sys.field(), sys.species(), parameter_values(sys));
  Rhs f = [&](const std::vector<double>& x, std::vector<double>& dx) {
    Eigen::VectorXd v = F.value(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = v[static_cast<Eigen::Index>(i)];
  };
  Jac jac = [&](const std::vector<double>& x, std::vector<std::vector<double>>& J) {
    Eigen::MatrixXd M = F.jacobian(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
    for (std::size_t i = 0; i < J.size(); ++i)
      for (std::size_t j = 0; j < J.size(); ++j) J[i][j] = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  auto t = integrate(f, jac, x0, times, opt, sys.species());
  std::string text;
  for (const auto& p : sys.field()) text += p.str() + ";";
  t.meta["model_hash"] = std::to_string(std::hash<std::string>{}(text));
  return t;
}

Trajectory integrate_reduced(const ReducedModel& r, const std::map<std::string, double>& initial,
                             const std::vector<double>& times, const IntegrateOptions& opt) {
  FastEliminator elim(r);
  std::vector<std::string> state = r.driving;
  const bool nested = r.variant == ReduceVariant::Nested;
  if (nested) state.insert(state.end(), r.quenched.begin(), r.quenched.end());
  std::map<std::string, double> frozen;
  if (!nested)
    for (const auto& q : r.quenched) {
      if (auto it = initial.find(q); it != initial.end()) frozen[q] = it->second;
      else if (auto jt = r.quenched_values.find(q); jt != r.quenched_values.end()) frozen[q] = jt->second;
      else throw SimError("no value for quenched variable " + q);
    }
  std::vector<std::string> all = r.slaved;
  all.insert(all.end(), r.driving.begin(), r.driving.end());
  all.insert(all.end(), r.quenched.begin(), r.quenched.end());
  std::vector<Polynomial> odes = r.driving_odes;
  if (nested) odes.insert(odes.end(), r.quenched_odes.begin(), r.quenched_odes.end());
  NumericPolys rhs_polys(odes, all, r.parameters);

  std::vector<double> x0;
  for (const auto& v : state) {
    auto it = initial.find(v);
    if (it == initial.end()) throw SimError("no initial value for " + v);
    x0.push_back(it->second);
  }
  std::map<std::string, double> guess;
  for (const auto& v : r.slaved)
    if (auto it = initial.find(v); it != initial.end()) guess[v] = it->second;

  auto full_point = [&](const std::vector<double>& x) {
    std::map<std::string, double> known = frozen;
    for (std::size_t i = 0; i < state.size(); ++i) known[state[i]] = x[i];
    auto slaved = elim.solve(known, guess);
    guess = slaved;
    std::vector<double> v;
    for (const auto& name : all) v.push_back(slaved.count(name) ? slaved.at(name) : known.at(name));
    return v;
  };
  Rhs f = [&](const std::vector<double>& x, std::vector<double>& dx) {
    auto v = full_point(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = rhs_polys.eval(i, v.data());
  };
  auto t = integrate(f, {}, x0, times, opt, state);

  // Reconstruct the slaved columns at the output points.
  Trajectory out;
  out.names = all;
  out.meta = t.meta;
  out.meta["reduced_level"] = r.level;
  out.meta["variant"] = variant_name(r.variant);
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    try {
      out.states.push_back(full_point(t.states[k]));
      out.times.push_back(t.times[k]);
    } catch (const std::exception& e) {
      out.meta["truncated"] = true;
      out.meta["diagnostic"] = e.what();
      break;
    }
  }
  return out;
}

const VariableError& Comparison::at(const std::string& name) const {
  for (const auto& v : variables)
    if (v.name == name) return v;
  throw SimError("comparison has no variable " + name);
}

Comparison compare(const Trajectory& full, const Trajectory& reduced, double skip_layer,
                   const std::vector<std::string>& vars_in) {
  if (full.times.empty() || reduced.times.empty()) throw SimError("empty trajectory");
  double lo = std::max({full.times.front(), reduced.times.front(), skip_layer});
  double hi = std::min(full.times.back(), reduced.times.back());
  if (lo > hi) throw SimError("trajectories do not overlap after the boundary layer");
  std::vector<std::string> vars = vars_in;
  if (vars.empty())
    for (const auto& n : full.names)
      if (std::find(reduced.names.begin(), reduced.names.end(), n) != reduced.names.end()) vars.push_back(n);
  Comparison c;
  c.skip_layer = skip_layer;
  for (const auto& name : vars) {
    auto fc = full.column(name), rc = reduced.column(name);
    VariableError e;
    e.name = name;
    double sup_a = 0, l2_d = 0, l2_a = 0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < full.times.size(); ++k) {
      double t = full.times[k];
      if (t < lo || t > hi) continue;
      while (j + 1 < reduced.times.size() && reduced.times[j + 1] < t) ++j;
      double b;
      if (j + 1 >= reduced.times.size() || reduced.times[j] >= t) {
        b = reduced.states[j][rc];
      } else {
        double t0 = reduced.times[j], t1 = reduced.times[j + 1];
        double w = (t - t0) / (t1 - t0);
        b = (1 - w) * reduced.states[j][rc] + w * reduced.states[j + 1][rc];
      }
      double a = full.states[k][fc];
      double d = std::abs(a - b);
      e.sup_abs = std::max(e.sup_abs, d);
      sup_a = std::max(sup_a, std::abs(a));
      l2_d += d * d;
      l2_a += a * a;
      ++e.points;
    }
    e.sup_rel = sup_a > 0 ? e.sup_abs / sup_a : (e.sup_abs > 0 ? INFINITY : 0.0);
    e.l2_rel = l2_a > 0 ? std::sqrt(l2_d / l2_a) : (l2_d > 0 ? INFINITY : 0.0);
    c.variables.push_back(e);
  }
  return c;
}

EquilibrationCurves equilibration_diagnostic(const PolySystem& sys, const Trajectory& traj, double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw SimError("epsilon must lie in (0,1)");
  EquilibrationCurves e;
  e.species = sys.species();
  e.times = traj.times;
  e.epsilon = epsilon;
  NumericPolys f(sys.field(), sys.species(), parameter_values(sys));
  std::vector<std::size_t> cols;
  for (const auto& s : sys.species()) cols.push_back(traj.column(s));
  const double le = std::log(epsilon);
  for (const auto& row : traj.states) {
    std::vector<double> x;
    for (auto c : cols) x.push_back(row[c]);
    std::vector<double> p, q;
    std::vector<bool> eq;
    for (std::size_t i = 0; i < sys.n(); ++i) {
      auto [pos, neg] = f.split(i, x.data());
      double po = pos > 0 ? std::log(pos) / le : INFINITY;
      double no = neg > 0 ? std::log(neg) / le : INFINITY;
      p.push_back(po);
      q.push_back(no);
      eq.push_back(std::isfinite(po) && std::isfinite(no) && std::round(po) == std::round(no));
    }
    e.production.push_back(p);
    e.consumption.push_back(q);
    e.equilibrated.push_back(eq);
  }
  return e;
}

void write_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write " + path);
  out << "t";
  for (const auto& n : t.names) out << "," << n;
  out << "\n";
  out.precision(17);
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    out << t.times[k];
    for (double v : t.states[k]) out << "," << v;
    out << "\n";
  }
}

Trajectory read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot read " + path);
  Trajectory t;
  std::string line;
  if (!std::getline(in, line)) throw SimError(path + ": empty file");
  std::stringstream hs(line);
  std::string cell;
  std::getline(hs, cell, ',');
  if (cell != "t") throw SimError(path + ": first column must be t");
  while (std::getline(hs, cell, ',')) t.names.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.names.size() + 1) throw SimError(path + ": ragged row");
    t.times.push_back(row[0]);
    t.states.emplace_back(row.begin() + 1, row.end());
  }
  return t;
}

nlohmann::json comparison_json(const Comparison& c) {
  nlohmann::json j;
  j["skip_layer"] = c.skip_layer;
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : c.variables)
    vars.push_back({{"variable", v.name}, {"sup_abs", v.sup_abs}, {"sup_rel", v.sup_rel}, {"l2_rel", v.l2_rel},
                    {"points", v.points}});
  j["variables"] = vars;
  return j;
}

nlohmann::json equilibration_json(const EquilibrationCurves& e) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["epsilon"] = e.epsilon;
  j["times"] = e.times;
  j["note"] = "null orders stand for +infinity (no production or no consumption)";
  nlohmann::json sp = nlohmann::json::array();
  for (std::size_t i = 0; i < e.species.size(); ++i) {
    nlohmann::json s;
    s["species"] = e.species[i];
    nlohmann::json p = nlohmann::json::array(), q = nlohmann::json::array(), eq = nlohmann::json::array();
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      p.push_back(num(e.production[k][i]));
      q.push_back(num(e.consumption[k][i]));
      eq.push_back(static_cast<bool>(e.equilibrated[k][i]));
    }
    s["production_order"] = p;
    s["consumption_order"] = q;
    s["equilibrated"] = eq;
    sp.push_back(s);
  }
  j["species"] = sp;
  return j;
}

}  // namespace tropored
