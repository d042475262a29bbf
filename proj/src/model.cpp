#include "tropored/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace tropored {

PolySystem::PolySystem(std::vector<std::string> species, std::vector<Parameter> parameters,
                       std::vector<Rate> rates, RationalMatrix stoich)
    : species_(std::move(species)),
      parameters_(std::move(parameters)),
      rates_(std::move(rates)),
      stoich_(std::move(stoich)) {
  validate();
}

PolySystem PolySystem::from_polynomials(std::vector<std::string> species,
                                        std::vector<Parameter> parameters,
                                        const std::vector<Polynomial>& rhs) {
  if (rhs.size() != species.size()) throw ModelError("one right-hand side per species required");
  std::set<std::string> pnames;
  for (const auto& p : parameters) pnames.insert(p.name);
  std::set<std::string> snames(species.begin(), species.end());
  std::vector<Rate> rates;
  std::map<std::pair<Monomial, Monomial>, std::size_t> index;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> entries(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    for (const auto& [m, c] : rhs[i].terms()) {
      for (const auto& [v, e] : m.factors())
        if (!pnames.count(v) && !snames.count(v))
          throw ModelError("unknown symbol '" + v + "' in right-hand side of " + species[i]);
      Monomial pm = m.restricted([&](const std::string& v) { return pnames.count(v) > 0; });
      Monomial sm = m.restricted([&](const std::string& v) { return snames.count(v) > 0; });
      auto key = std::make_pair(pm, sm);
      auto it = index.find(key);
      std::size_t j;
      if (it == index.end()) {
        j = rates.size();
        index.emplace(key, j);
        rates.push_back({pm, sm});
      } else {
        j = it->second;
      }
      entries[i].emplace_back(j, c);
    }
  }
  RationalMatrix s(species.size(), rates.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (const auto& [j, c] : entries[i]) s(i, j) += c;
  return PolySystem(std::move(species), std::move(parameters), std::move(rates), std::move(s));
}

std::optional<std::size_t> PolySystem::species_index(const std::string& name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i] == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> PolySystem::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    if (parameters_[i].name == name) return i;
  return std::nullopt;
}

Polynomial PolySystem::rate_polynomial(std::size_t j) const {
  return Polynomial::term(1, rates_.at(j).params * rates_.at(j).species);
}

Polynomial PolySystem::field(std::size_t i) const { return field_part(i, stoich_); }

Polynomial PolySystem::field_part(std::size_t i, const RationalMatrix& s) const {
  Polynomial f;
  for (std::size_t j = 0; j < r(); ++j)
    if (s(i, j) != 0) f += Polynomial::term(s(i, j), rates_[j].params * rates_[j].species);
  return f;
}

std::vector<Polynomial> PolySystem::field() const {
  std::vector<Polynomial> f;
  for (std::size_t i = 0; i < n(); ++i) f.push_back(field(i));
  return f;
}

void PolySystem::validate() const {
  if (stoich_.rows() != species_.size() || stoich_.cols() != rates_.size())
    throw ModelError("stoichiometry must be " + std::to_string(species_.size()) + "x" +
                     std::to_string(rates_.size()));
  std::set<std::string> names;
  for (const auto& s : species_)
    if (!names.insert(s).second) throw ModelError("duplicate symbol '" + s + "'");
  for (const auto& p : parameters_) {
    if (!names.insert(p.name).second) throw ModelError("duplicate symbol '" + p.name + "'");
    if (p.value && !(*p.value > 0))
      throw ModelError("parameter '" + p.name + "' must be strictly positive");
  }
  for (const auto& rate : rates_) {
    for (const auto& [v, e] : rate.params.factors())
      if (!is_parameter(v)) throw ModelError("rate uses unknown parameter '" + v + "'");
    for (const auto& [v, e] : rate.species.factors())
      if (!is_species(v)) throw ModelError("rate uses unknown species '" + v + "'");
  }
}

// ------------------------------------------------------------------- JSON

nlohmann::json rational_to_json(const Rational& q) { return q.get_str(); }

Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return rational_from_double(j.get<double>());
  throw ModelError("expected a rational number, got " + j.dump());
}

nlohmann::json polynomial_to_json(const Polynomial& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) {
    nlohmann::json mono = nlohmann::json::object();
    for (const auto& [v, e] : m.factors()) mono[v] = e;
    arr.push_back({{"coeff", c.get_str()}, {"monomial", mono}});
  }
  return arr;
}

Polynomial polynomial_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_polynomial(j.get<std::string>());
  if (!j.is_array()) throw ModelError("polynomial must be a term array or a string");
  Polynomial p;
  for (const auto& t : j) {
    std::vector<Monomial::Factor> f;
    for (const auto& [v, e] : t.at("monomial").items()) f.emplace_back(v, e.get<int>());
    p += Polynomial::term(rational_from_json(t.at("coeff")), Monomial(std::move(f)));
  }
  return p;
}

namespace {

Monomial monomial_from_json(const nlohmann::json& j) {
  std::vector<Monomial::Factor> f;
  for (const auto& [v, e] : j.items()) {
    if (!e.is_number_integer()) throw ModelError("monomial exponents must be integers");
    f.emplace_back(v, e.get<int>());
  }
  return Monomial(std::move(f));
}

nlohmann::json monomial_to_json(const Monomial& m) {
  nlohmann::json o = nlohmann::json::object();
  for (const auto& [v, e] : m.factors()) o[v] = e;
  return o;
}

}  // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    spec.name = j.value("name", "");
    std::vector<std::string> species = j.at("species").get<std::vector<std::string>>();
    std::vector<Parameter> params;
    const auto& pj = j.at("parameters");
    if (pj.is_object()) {
      for (const auto& [name, v] : pj.items()) {
        Parameter p{name, std::nullopt};
        if (!v.is_null()) p.value = rational_from_json(v).get_d();
        params.push_back(p);
      }
      std::sort(params.begin(), params.end(),
                [](const Parameter& a, const Parameter& b) { return name_less(a.name, b.name); });
    } else {
      for (const auto& v : pj) {
        Parameter p{v.at("name").get<std::string>(), std::nullopt};
        if (v.contains("value") && !v["value"].is_null())
          p.value = rational_from_json(v["value"]).get_d();
        params.push_back(p);
      }
    }
    PolySystem sys;
    if (j.contains("rates")) {
      std::vector<Rate> rates;
      for (const auto& rj : j.at("rates")) {
        Rate rate;
        if (rj.contains("param") && !rj["param"].is_null())
          rate.params = Monomial::var(rj["param"].get<std::string>());
        if (rj.contains("params")) rate.params = rate.params * monomial_from_json(rj["params"]);
        if (rj.contains("monomial")) rate.species = monomial_from_json(rj["monomial"]);
        rates.push_back(rate);
      }
      const auto& sj = j.at("stoichiometry");
      RationalMatrix s(species.size(), rates.size());
      if (sj.size() != species.size()) throw ModelError("stoichiometry needs one row per species");
      for (std::size_t i = 0; i < species.size(); ++i) {
        if (sj[i].size() != rates.size())
          throw ModelError("stoichiometry row " + std::to_string(i) + " has wrong length");
        for (std::size_t k = 0; k < rates.size(); ++k) s(i, k) = rational_from_json(sj[i][k]);
      }
      sys = PolySystem(species, params, rates, s);
    } else if (j.contains("odes")) {
      std::vector<Polynomial> rhs;
      for (const auto& s : species) rhs.push_back(polynomial_from_json(j.at("odes").at(s)));
      sys = PolySystem::from_polynomials(species, params, rhs);
    } else {
      throw ModelError("model needs 'rates' and 'stoichiometry'");
    }
    if (j.contains("laws"))
      for (const auto& l : j["laws"]) sys.user_laws.push_back(polynomial_from_json(l));
    if (j.contains("initial"))
      for (const auto& [k, v] : j["initial"].items()) {
        if (!sys.is_species(k)) throw ModelError("initial value for unknown species '" + k + "'");
        double x = rational_from_json(v).get_d();
        if (!(x >= 0)) throw ModelError("initial value of '" + k + "' must be non-negative");
        sys.initial[k] = x;
      }
    spec.system = std::move(sys);
    if (j.contains("orders")) {
      const auto& o = j["orders"];
      if (o.contains("epsilon")) spec.epsilon = rational_from_json(o["epsilon"]);
      if (o.contains("d"))
        for (const auto& [k, v] : o["d"].items()) spec.d[k] = rational_from_json(v);
      if (o.contains("e"))
        for (const auto& [k, v] : o["e"].items()) spec.e[k] = rational_from_json(v);
    }
    if (j.contains("pivot_preference"))
      spec.pivot_preference = j["pivot_preference"].get<std::vector<std::string>>();
    spec.new_variable_names = j.value("new_variable_names", "pivot");
    if (spec.new_variable_names != "pivot" && spec.new_variable_names != "fresh")
      throw ModelError("new_variable_names must be 'pivot' or 'fresh'");
    static const std::set<std::string> known{
        "name",   "species", "parameters", "rates",  "stoichiometry",    "odes",
        "laws",   "initial", "orders",     "pivot_preference", "new_variable_names"};
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) spec.extra[k] = v;
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("malformed model JSON: ") + e.what());
  }
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("cannot parse '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

nlohmann::json model_to_json(const ModelSpec& m) {
  const PolySystem& s = m.system;
  nlohmann::json j;
  if (!m.name.empty()) j["name"] = m.name;
  j["species"] = s.species();
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : s.parameters())
    params[p.name] = p.value ? nlohmann::json(*p.value) : nlohmann::json(nullptr);
  j["parameters"] = params;
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& r : s.rates()) {
    nlohmann::json rj;
    if (r.params.factors().size() == 1 && r.params.factors()[0].second == 1)
      rj["param"] = r.params.factors()[0].first;
    else if (!r.params.is_one())
      rj["params"] = monomial_to_json(r.params);
    rj["monomial"] = monomial_to_json(r.species);
    rates.push_back(rj);
  }
  j["rates"] = rates;
  nlohmann::json st = nlohmann::json::array();
  for (std::size_t i = 0; i < s.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < s.r(); ++k) {
      const Rational& q = s.stoich()(i, k);
      if (q.get_den() == 1 && q.get_num().fits_slong_p())
        row.push_back(q.get_num().get_si());
      else
        row.push_back(q.get_str());
    }
    st.push_back(row);
  }
  j["stoichiometry"] = st;
  if (!s.user_laws.empty()) {
    nlohmann::json laws = nlohmann::json::array();
    for (const auto& l : s.user_laws) laws.push_back(polynomial_to_json(l));
    j["laws"] = laws;
  }
  if (!s.initial.empty()) j["initial"] = s.initial;
  if (m.epsilon || !m.d.empty() || !m.e.empty()) {
    nlohmann::json o;
    if (m.epsilon) o["epsilon"] = m.epsilon->get_str();
    nlohmann::json d = nlohmann::json::object(), e = nlohmann::json::object();
    for (const auto& [k, v] : m.d) d[k] = v.get_str();
    for (const auto& [k, v] : m.e) e[k] = v.get_str();
    o["d"] = d;
    o["e"] = e;
    j["orders"] = o;
  }
  if (!m.pivot_preference.empty()) j["pivot_preference"] = m.pivot_preference;
  j["new_variable_names"] = m.new_variable_names;
  for (const auto& [k, v] : m.extra.items()) j[k] = v;
  return j;
}

std::vector<double> evaluate_field(const PolySystem& sys, const std::vector<double>& x,
                                   const std::vector<double>& k) {
  if (x.size() != sys.n()) throw std::invalid_argument("concentration vector has wrong length");
  if (k.size() != sys.parameters().size())
    throw std::invalid_argument("parameter vector has wrong length");
  for (double v : x)
    if (!(v > 0)) throw std::domain_error("concentrations must be strictly positive");
  std::vector<double> f(sys.n(), 0.0);
  for (std::size_t j = 0; j < sys.r(); ++j) {
    const Rate& rate = sys.rates()[j];
    double v = 1;
    for (const auto& [p, e] : rate.params.factors())
      v *= std::pow(k[*sys.parameter_index(p)], e);
    for (const auto& [s, e] : rate.species.factors()) v *= std::pow(x[*sys.species_index(s)], e);
    for (std::size_t i = 0; i < sys.n(); ++i)
      if (sys.stoich()(i, j) != 0) f[i] += sys.stoich()(i, j).get_d() * v;
  }
  return f;
}

}  // namespace tropored
