// tropored command-line front end. Every stage prints JSON (or writes it to
// --out); `pipeline` runs all stages and writes one file per stage.
//
// Exit codes: 0 ok, 1 stage failure, 2 input error.

#include "tropored/chains.hpp"
#include "tropored/conslaw.hpp"
#include "tropored/reduce.hpp"
#include "tropored/scaling.hpp"
#include "tropored/sim.hpp"
#include "tropored/transform.hpp"
#include "tropored/tropical.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace tropored;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage " + stage + ": " + what) {}
};

struct Config {
  std::string model;
  std::string epsilon;
  int g = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::string stage;
  std::size_t level = 0;
  std::string variant = "slowest";
  std::string mode = "explicit";
  double tol = 1e-8;
  std::string tspan = "0,100";
  std::size_t points = 201;
  bool log_grid = false;
  std::string method = "rosenbrock";
  std::string output;  // trajectory CSV
  // compare / equilibration-check
  std::string full_csv, reduced_csv, trajectory_csv;
  double skip_layer = 5;
  std::string vars;
  std::size_t max_branches = 200000;
  bool enumerate = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tropored");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("TROPORED_LOG")) {
    auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to off; keep the default then.
    if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
  }
}

ModelSpec load(const Config& c) {
  if (c.model.empty()) throw InputError("--model is required");
  ModelSpec m;
  try {
    m = load_model(c.model);
  } catch (const std::exception& e) {
    throw InputError(std::string("cannot load model: ") + e.what());
  }
  if (!c.epsilon.empty()) {
    try {
      m.epsilon = parse_rational(c.epsilon);
    } catch (const std::exception&) {
      throw InputError("--epsilon must be a rational number, got '" + c.epsilon + "'");
    }
    if (!(*m.epsilon > 0 && *m.epsilon < 1)) throw InputError("--epsilon must lie in (0,1)");
  }
  if (c.g < 1) throw InputError("--g must be positive");
  return m;
}

std::pair<double, double> parse_tspan(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw InputError("--tspan expects t0,t1");
  try {
    double a = std::stod(s.substr(0, comma)), b = std::stod(s.substr(comma + 1));
    if (!(b > a)) throw InputError("--tspan needs t1 > t0");
    return {a, b};
  } catch (const std::invalid_argument&) {
    throw InputError("--tspan expects two numbers, got '" + s + "'");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  spdlog::info("wrote {}", path);
}

template <class F>
auto stage(const std::string& name, F&& f) {
  spdlog::info("stage {}", name);
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// --- stages ---------------------------------------------------------------

json stoich_json(const ModelSpec& m) {
  const auto& sys = m.system;
  json j;
  j["species"] = sys.species();
  json rates = json::array();
  for (std::size_t r = 0; r < sys.r(); ++r) rates.push_back(sys.rate_polynomial(r).str());
  j["rates"] = rates;
  json S = json::array();
  for (std::size_t i = 0; i < sys.n(); ++i) {
    json row = json::array();
    for (std::size_t r = 0; r < sys.r(); ++r) row.push_back(to_string(sys.stoich()(i, r)));
    S.push_back(row);
  }
  j["stoichiometry"] = S;
  j["rank"] = sys.stoich().rank();
  json odes = json::array();
  for (std::size_t i = 0; i < sys.n(); ++i)
    odes.push_back({{"species", sys.species()[i]}, {"ode", sys.field(i).str()}});
  j["odes"] = odes;
  json kernel = json::array();
  for (const auto& v : left_kernel_irreducible(sys.stoich())) kernel.push_back(linear_law(sys, v).str());
  j["exact_linear_laws"] = kernel;
  return j;
}

json conslaws_json(const ModelSpec& m, const Config& c) {
  auto sc = scale_model(m, c.g);
  auto laws = find_linear_laws(m.system, sc);
  json j;
  json arr = json::array();
  for (const auto& l : laws.laws) arr.push_back(law_to_json(m.system, l));
  j["laws"] = arr;
  if (laws.complete) j["complete"] = *laws.complete;
  if (laws.independent) j["independent"] = *laws.independent;
  return j;
}

json tropical_json(const ModelSpec& m, const Config& c, bool enumerate) {
  const auto& sys = m.system;
  auto sc = scale_model(m, c.g);
  std::vector<std::size_t> rows(sys.n());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  json j;
  json params = json::object();
  for (const auto& [k, v] : sc.assignment.e) params[k] = to_string(v);
  j["parameter_orders"] = params;
  std::optional<std::vector<Rational>> anchor;
  if (!m.d.empty()) anchor = species_orders(sys, m.d);
  if (anchor) {
    // The supplied d is checked against every row; a total equilibration is
    // not required of it (partial ones are fine for the scaling).
    auto v = verify(sys, sc.assignment.e, *anchor, rows);
    json d = json::object();
    for (std::size_t i = 0; i < sys.n(); ++i) d[sys.species()[i]] = to_string((*anchor)[i]);
    j["model_d"] = {{"d", d}, {"total_equilibration", v.ok}, {"violations", v.violations}};
  }
  if (!enumerate) return j;
  auto res = solve(build_constraints(sys, sc.assignment.e, rows), c.max_branches);
  j["truncated"] = res.truncated;
  j["branches"] = res.branches;
  json sols = json::array();
  for (const auto& s : res.solutions) sols.push_back(solution_to_json(sys, s));
  j["solutions"] = sols;
  if (!res.solutions.empty()) j["representative"] = solution_to_json(sys, select_representative(res.solutions, anchor));
  return j;
}

TransformOptions transform_options(const Config& c) {
  TransformOptions o;
  if (c.mode == "explicit") o.mode = TransformMode::Explicit;
  else if (c.mode == "implicit") o.mode = TransformMode::Implicit;
  else throw InputError("--mode must be explicit or implicit");
  o.seed = c.seed;
  o.g = c.g;
  return o;
}

json chains_json(const ModelSpec& m, const Config& c) {
  auto sc = scale_model(m, c.g);
  std::size_t L = dynamic_levels(sc);
  if (L == 0) throw std::runtime_error("no dynamic timescale levels");
  std::size_t l = c.level ? c.level : L;
  if (l > L) throw InputError("--level exceeds the " + std::to_string(L) + " dynamic levels");
  std::mt19937_64 rng(c.seed);
  auto rep = chain_verify(m.system, sc, l, {}, rng);
  json j = chain_report_json(rep);
  for (auto& lv : j["levels"]) lv.erase("samples");
  if (rep.broken_at) {
    std::mt19937_64 rng2(c.seed);
    j["qe_diagnostic"] = qe_diagnostic_json(qe_degeneracy_diagnostic(m.system, sc, *rep.broken_at, rng2));
  }
  return j;
}

ReducedModel reduce_model(const ModelSpec& transformed, const Config& c) {
  ReduceOptions o;
  o.seed = c.seed;
  ReduceVariant v;
  try {
    v = parse_variant(c.variant);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  if (v != ReduceVariant::Slowest && c.level == 0) throw InputError("--level is required for this variant");
  return reduce_at(transformed, c.level, v, o);
}

IntegrateOptions integrate_options(const Config& c) {
  IntegrateOptions o;
  o.rtol = c.tol;
  o.atol = c.tol * 1e-2;
  try {
    o.method = parse_method(c.method);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  return o;
}

std::vector<double> grid(const Config& c) {
  auto [t0, t1] = parse_tspan(c.tspan);
  if (c.points < 2) throw InputError("--points must be at least 2");
  if (c.log_grid && !(t0 > 0)) throw InputError("--log-grid needs t0 > 0");
  return time_grid(t0, t1, c.points, c.log_grid);
}

// Full-model trajectory with the transformed variables appended, so that it
// can be compared column by column with reduced trajectories.
Trajectory full_with_transformed(const TransformState& s, const Trajectory& full) {
  Trajectory out = full;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < full.names.size(); ++i) col[full.names[i]] = i;
  std::map<std::string, double> params;
  for (const auto& p : s.original.system.parameters())
    if (p.value) params[p.name] = *p.value;
  std::vector<std::pair<std::string, NumericPolys>> extra;
  for (const auto& v : s.model.system.species()) {
    if (col.count(v)) continue;
    extra.emplace_back(v, NumericPolys({s.current_in_original.at(v)}, full.names, params));
  }
  for (const auto& [name, f] : extra) out.names.push_back(name);
  for (auto& row : out.states) {
    std::vector<double> x(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(full.names.size()));
    for (const auto& e : extra) row.push_back(e.second.eval(0, x.data()));
  }
  return out;
}

// --- commands --------------------------------------------------------------

int run_simulate(const Config& c) {
  auto m = load(c);
  auto times = grid(c);
  auto opt = integrate_options(c);
  Trajectory t;
  if (c.level == 0 && c.variant == "full") {
    t = stage("simulate", [&] { return integrate_full(m.system, initial_state_vector(m.system), times, opt); });
  } else {
    auto s = stage("transform", [&] { return transform_explicit(m, 50, c.seed); });
    auto r = stage("reduce", [&] { return reduce_model(s.model, c); });
    t = stage("simulate", [&] { return integrate_reduced(r, s.model.system.initial, times, opt); });
  }
  if (!c.output.empty()) write_csv(t, c.output);
  json j = t.meta;
  j["columns"] = t.names;
  j["points"] = t.times.size();
  if (!c.output.empty()) j["csv"] = c.output;
  emit(j, c.out);
  return t.meta.value("truncated", false) ? 1 : 0;
}

int run_pipeline(const Config& c) {
  auto m = load(c);
  if (c.out.empty()) throw InputError("pipeline needs --out <directory>");
  const fs::path dir = c.out;
  fs::create_directories(dir);
  auto file = [&](const std::string& n) { return (dir / n).string(); };
  auto done = [&](const std::string& n) { return c.stage == n; };
  auto topt = transform_options(c);
  const bool numeric = [&] {
    for (const auto& p : m.system.parameters())
      if (!p.value) return false;
    for (const auto& s : m.system.species())
      if (!m.system.initial.count(s)) return false;
    return true;
  }();

  json summary;
  summary["model"] = m.name;
  summary["seed"] = c.seed;

  emit(stage("stoich", [&] { return stoich_json(m); }), file("stoich.json"));
  if (done("stoich")) return 0;
  auto sc = stage("scale", [&] { return scale_model(m, c.g); });
  emit(scaling_report(m.system, sc), file("scaling.json"));
  if (done("scale")) return 0;
  emit(stage("tropicalize", [&] { return tropical_json(m, c, m.d.empty() || c.enumerate); }), file("tropical.json"));
  if (done("tropicalize")) return 0;
  emit(stage("conslaws", [&] { return conslaws_json(m, c); }), file("conslaws.json"));
  if (done("conslaws")) return 0;

  auto s = stage("transform", [&] { return transform(m, topt); });
  emit(transform_report(s), file("transform.json"));
  emit(ledger_to_json(s), file("ledger.json"));
  emit(model_to_json(s.model), file("transformed_model.json"));
  summary["transform"] = {{"converged", s.converged}, {"stop_reason", s.stop_reason},
                          {"species", s.model.system.n()}, {"laws", s.ledger.size()}};
  if (done("transform")) return 0;
  if (topt.mode == TransformMode::Implicit) {
    spdlog::warn("chains and reduction need the explicit transform; stopping after transform");
    emit(summary, file("summary.json"));
    return 0;
  }

  if (numeric) {
    emit(stage("chains", [&] { return chains_json(s.model, c); }), file("chains.json"));
  } else {
    spdlog::warn("chains skipped: the model lacks numeric parameters or initial values");
  }
  if (done("chains")) return 0;

  auto r = stage("reduce", [&] { return reduce_model(s.model, c); });
  emit(reduced_to_json(r), file("reduced.json"));
  summary["reduced"] = {{"level", r.level}, {"variant", variant_name(r.variant)}, {"driving", r.driving}};
  if (done("reduce")) return 0;

  if (!numeric) {
    spdlog::warn("simulation skipped: the model lacks numeric parameters or initial values");
    emit(summary, file("summary.json"));
    return 0;
  }
  auto times = grid(c);
  auto opt = integrate_options(c);
  auto full = stage("simulate", [&] {
    return full_with_transformed(s, integrate_full(m.system, initial_state_vector(m.system), times, opt));
  });
  write_csv(full, file("full.csv"));
  auto red = stage("simulate", [&] { return integrate_reduced(r, s.model.system.initial, times, opt); });
  write_csv(red, file("reduced.csv"));
  if (done("simulate")) return 0;

  auto cmp = stage("compare", [&] { return compare(full, red, c.skip_layer); });
  emit(comparison_json(cmp), file("comparison.json"));
  if (done("compare")) return 0;
  auto eq = stage("equilibration-check", [&] {
    double eps = m.epsilon ? m.epsilon->get_d() : 0.1;
    return equilibration_diagnostic(m.system, full, eps);
  });
  emit(equilibration_json(eq), file("equilibration.json"));
  summary["truncated_reduced_trajectory"] = red.meta.value("truncated", false);
  emit(summary, file("summary.json"));
  return red.meta.value("truncated", false) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Config c;
  CLI::App app{"tropored: tropical scaling, conservation-law elimination and reduction of reaction networks"};
  app.require_subcommand(1);

  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", c.model, "model JSON file")->required();
    s->add_option("--epsilon", c.epsilon, "epsilon* as a rational, e.g. 1/10");
    s->add_option("--g", c.g, "order granularity (orders are multiples of 1/g)");
    s->add_option("--seed", c.seed, "seed for sampling and rank tests");
    s->add_option("--out", c.out, "output file (directory for pipeline)");
  };
  auto add_reduce = [&](CLI::App* s) {
    s->add_option("--level", c.level, "reduction level (1-based)");
    s->add_option("--variant", c.variant, "nested, simple or slowest");
  };
  auto add_sim = [&](CLI::App* s) {
    s->add_option("--tol", c.tol, "relative tolerance (absolute = tol/100)");
    s->add_option("--tspan", c.tspan, "t0,t1");
    s->add_option("--points", c.points, "number of output times");
    s->add_flag("--log-grid", c.log_grid, "logarithmic output times");
    s->add_option("--method", c.method, "rosenbrock or dopri5");
    s->add_option("--output", c.output, "trajectory CSV");
  };

  auto* stoich = app.add_subcommand("stoich", "species, rates, stoichiometric matrix and exact linear laws");
  add_model(stoich);
  auto* conslaws = app.add_subcommand("conslaws", "approximate and exact linear conservation laws");
  add_model(conslaws);
  auto* trop = app.add_subcommand("tropicalize", "total tropical equilibrations");
  add_model(trop);
  trop->add_option("--max-branches", c.max_branches, "branch budget of the enumeration");
  auto* scale = app.add_subcommand("scale", "rescaling, truncation and timescale groups");
  add_model(scale);
  auto* tr = app.add_subcommand("transform", "eliminate conservation laws");
  add_model(tr);
  tr->add_option("--mode", c.mode, "explicit or implicit");
  auto* ch = app.add_subcommand("chains", "hyperbolic attractivity of the quasi-steady state chain");
  add_model(ch);
  ch->add_option("--level", c.level, "last level to check (default: all)");
  auto* red = app.add_subcommand("reduce", "reduced model (after the explicit transform)");
  add_model(red);
  add_reduce(red);
  auto* sim = app.add_subcommand("simulate", "integrate the full (--variant full) or reduced model");
  add_model(sim);
  add_reduce(sim);
  add_sim(sim);
  auto* cmp = app.add_subcommand("compare", "errors of a reduced trajectory against a full one");
  cmp->add_option("--full", c.full_csv, "full trajectory CSV")->required();
  cmp->add_option("--reduced", c.reduced_csv, "reduced trajectory CSV")->required();
  cmp->add_option("--skip-layer", c.skip_layer, "ignore t below this time");
  cmp->add_option("--vars", c.vars, "comma separated columns (default: shared columns)");
  cmp->add_option("--out", c.out, "output file");
  auto* eq = app.add_subcommand("equilibration-check", "orders of production and consumption along a trajectory");
  add_model(eq);
  add_sim(eq);
  eq->add_option("--trajectory", c.trajectory_csv, "trajectory CSV (default: integrate the model)");
  auto* pipe = app.add_subcommand("pipeline", "all stages, one output file per stage");
  add_model(pipe);
  add_reduce(pipe);
  add_sim(pipe);
  pipe->add_option("--mode", c.mode, "explicit or implicit");
  pipe->add_option("--stage", c.stage, "stop after this stage");
  pipe->add_flag("--enumerate", c.enumerate, "enumerate all total equilibrations even when the model gives d");
  pipe->add_option("--max-branches", c.max_branches, "branch budget of the enumeration");
  pipe->add_option("--skip-layer", c.skip_layer, "boundary layer excluded from the comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*stoich) emit(stage("stoich", [&] { return stoich_json(load(c)); }), c.out);
    else if (*conslaws) emit(stage("conslaws", [&] { return conslaws_json(load(c), c); }), c.out);
    else if (*trop) emit(stage("tropicalize", [&] { return tropical_json(load(c), c, true); }), c.out);
    else if (*scale) {
      auto m = load(c);
      emit(stage("scale", [&] { return scaling_report(m.system, scale_model(m, c.g)); }), c.out);
    } else if (*tr) {
      auto m = load(c);
      auto o = transform_options(c);
      emit(stage("transform", [&] { return transform_report(transform(m, o)); }), c.out);
    } else if (*ch) {
      auto m = load(c);
      emit(stage("chains", [&] { return chains_json(m, c); }), c.out);
    } else if (*red) {
      auto m = load(c);
      auto s = stage("transform", [&] { return transform_explicit(m, 50, c.seed); });
      auto r = stage("reduce", [&] { return reduce_model(s.model, c); });
      emit(reduced_to_json(r), c.out);
    } else if (*sim) {
      return run_simulate(c);
    } else if (*cmp) {
      Trajectory a, b;
      try {
        a = read_csv(c.full_csv);
        b = read_csv(c.reduced_csv);
      } catch (const std::exception& e) {
        throw InputError(e.what());
      }
      emit(stage("compare", [&] { return comparison_json(compare(a, b, c.skip_layer, split_list(c.vars))); }), c.out);
    } else if (*eq) {
      auto m = load(c);
      Trajectory t;
      if (!c.trajectory_csv.empty()) {
        try {
          t = read_csv(c.trajectory_csv);
        } catch (const std::exception& e) {
          throw InputError(e.what());
        }
      } else {
        auto times = grid(c);
        auto opt = integrate_options(c);
        t = stage("simulate", [&] { return integrate_full(m.system, initial_state_vector(m.system), times, opt); });
      }
      double eps = m.epsilon ? m.epsilon->get_d() : 0.1;
      emit(stage("equilibration-check", [&] { return equilibration_json(equilibration_diagnostic(m.system, t, eps)); }),
           c.out);
    } else if (*pipe) {
      return run_pipeline(c);
    }
  } catch (const InputError& e) {
    spdlog::error("input error: {}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
