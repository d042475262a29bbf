#include "tropored/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace tropored {

NumericPolys::NumericPolys(const std::vector<Polynomial>& polys, const std::vector<std::string>& vars,
                           const std::map<std::string, double>& constants)
    : nvars_(vars.size()) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i]] = i;
  for (const auto& p : polys) {
    std::vector<Term> row;
    for (const auto& [mono, c] : p.terms()) {
      Term t{c.get_d(), {}};
      for (const auto& [v, e] : mono.factors()) {
        if (auto it = index.find(v); it != index.end()) {
          t.f.emplace_back(it->second, e);
        } else if (auto k = constants.find(v); k != constants.end()) {
          t.c *= std::pow(k->second, e);
        } else {
          throw ModelError("no value for symbol " + v);
        }
      }
      row.push_back(std::move(t));
    }
    rows_.push_back(std::move(row));
  }
}

double NumericPolys::term_value(const Term& t, const double* x) const {
  double v = t.c;
  for (const auto& [i, e] : t.f) {
    switch (e) {
      case 1: v *= x[i]; break;
      case 2: v *= x[i] * x[i]; break;
      default: v *= std::pow(x[i], e);
    }
  }
  return v;
}

double NumericPolys::eval(std::size_t i, const double* x) const {
  double s = 0;
  for (const auto& t : rows_[i]) s += term_value(t, x);
  return s;
}

Eigen::VectorXd NumericPolys::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = eval(i, x.data());
  return out;
}

double NumericPolys::term_scale(std::size_t i, const double* x) const {
  double s = 0;
  for (const auto& t : rows_[i]) s = std::max(s, std::abs(term_value(t, x)));
  return s;
}

std::pair<double, double> NumericPolys::split(std::size_t i, const double* x) const {
  double pos = 0, neg = 0;
  for (const auto& t : rows_[i]) {
    double v = term_value(t, x);
    (v > 0 ? pos : neg) += std::abs(v);
  }
  return {pos, neg};
}

NumericField::NumericField(const std::vector<Polynomial>& polys, const std::vector<std::string>& vars,
                           const std::map<std::string, double>& constants)
    : f_(polys, vars, constants) {
  std::vector<Polynomial> d;
  for (const auto& p : polys)
    for (const auto& v : vars) d.push_back(p.derivative(v));
  j_ = NumericPolys(d, vars, constants);
}

Eigen::MatrixXd NumericField::jacobian(const Eigen::VectorXd& x) const {
  const std::size_t n = nvars();
  Eigen::MatrixXd J(rows(), n);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) J(i, j) = j_.eval(i * n + j, x.data());
  return J;
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& J, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(J.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = J.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

}  // namespace

double scaled_residual(const NumericPolys& f, const double* x) {
  double m = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double s = f.term_scale(i, x);
    double r = f.eval(i, x);
    m = std::max(m, s > 0 ? std::abs(r) / s : std::abs(r));
  }
  return m;
}

namespace {

NewtonResult newton_once(const NumericField& F, const std::vector<std::size_t>& unknowns, std::vector<double> seed,
                         double tol, int max_iter) {
  NewtonResult p;
  for (auto i : unknowns)
    if (!(seed[i] > 0)) seed[i] = 1e-6;
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(seed.data(), static_cast<Eigen::Index>(seed.size()));
  double merit = scaled_residual(F.polys(), x.data());
  for (int it = 0; it < max_iter && merit > tol; ++it) {
    p.iterations = it + 1;
    Eigen::MatrixXd J = select_columns(F.jacobian(x), unknowns);
    for (std::size_t c = 0; c < unknowns.size(); ++c) J.col(static_cast<Eigen::Index>(c)) *= x[static_cast<Eigen::Index>(unknowns[c])];
    Eigen::VectorXd du = J.completeOrthogonalDecomposition().solve(-F.value(x));
    double big = du.cwiseAbs().maxCoeff();
    if (!std::isfinite(big)) break;
    if (big > 5) du *= 5 / big;
    double alpha = 1;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, alpha /= 2) {
      Eigen::VectorXd y = x;
      for (std::size_t c = 0; c < unknowns.size(); ++c) {
        auto i = static_cast<Eigen::Index>(unknowns[c]);
        y[i] = x[i] * std::exp(alpha * du[static_cast<Eigen::Index>(c)]);
      }
      double m = scaled_residual(F.polys(), y.data());
      if (m < merit || ls == 39) {
        moved = m < merit;
        x = y;
        merit = m;
        break;
      }
    }
    if (!moved && merit > tol) break;
  }
  p.x.assign(x.data(), x.data() + x.size());
  p.residual = merit;
  p.ok = merit <= tol * 1e3 && std::all_of(p.x.begin(), p.x.end(), [](double v) { return std::isfinite(v); });
  if (!p.ok) p.note = "Newton stopped at scaled residual " + std::to_string(merit);
  return p;
}

}  // namespace

// Log-space Newton can walk to the boundary when the seed sits on the wrong
// side of a fold; restart from the seed with the unknowns scaled by decades.
NewtonResult newton_positive(const NumericField& F, const std::vector<std::size_t>& unknowns, std::vector<double> seed,
                             double tol, int max_iter) {
  auto best = newton_once(F, unknowns, seed, tol, max_iter);
  if (best.ok) return best;
  int total = best.iterations;
  for (double f : {10.0, 0.1, 100.0, 0.01, 1e3, 1e-3}) {
    auto y = seed;
    for (auto i : unknowns) y[i] = (y[i] > 0 ? y[i] : 1.0) * f;
    auto r = newton_once(F, unknowns, y, tol, max_iter);
    total += r.iterations;
    if (r.ok) {
      r.iterations = total;
      return r;
    }
    if (r.residual < best.residual) best = r;
  }
  best.iterations = total;
  return best;
}

std::map<std::string, double> parameter_values(const PolySystem& sys) {
  std::map<std::string, double> out;
  for (const auto& p : sys.parameters()) {
    if (!p.value) throw ModelError("parameter " + p.name + " has no numeric value");
    out[p.name] = *p.value;
  }
  return out;
}

}  // namespace tropored
