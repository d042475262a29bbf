#include <Eigen/SVD>
#include "tropored/chains.hpp"

#include "tropored/conslaw.hpp"
#include "tropored/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace tropored {

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& M, std::size_t a) {
  const auto n = static_cast<Eigen::Index>(M.rows());
  const auto k = static_cast<Eigen::Index>(a);
  if (M.rows() != M.cols() || k > n) throw ChainError("schur_complement: bad block size");
  Eigen::MatrixXd A = M.topLeftCorner(k, k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (k > 0 && !lu.isInvertible()) throw ChainError("schur_complement: leading block is singular");
  if (k == 0) return M;
  return M.bottomRightCorner(n - k, n - k) - M.bottomLeftCorner(n - k, k) * lu.solve(M.topRightCorner(k, n - k));
}

SchurIdentities schur_identities(const Eigen::MatrixXd& M, std::size_t a) {
  SchurIdentities s;
  auto k = static_cast<Eigen::Index>(a);
  Eigen::MatrixXd A = M.topLeftCorner(k, k);
  Eigen::MatrixXd S = schur_complement(M, a);
  s.det_m = M.determinant();
  s.det_product = S.determinant() * A.determinant();
  double scale = std::max({std::abs(s.det_m), std::abs(s.det_product), 1e-300});
  s.det_rel_error = std::abs(s.det_m - s.det_product) / scale;
  // One absolute threshold for all three ranks; per-matrix relative thresholds
  // count the roundoff left in a small Schur complement as rank.
  double tol = 1e-9 * std::max(1.0, M.cwiseAbs().maxCoeff());
  auto rank = [tol](const Eigen::MatrixXd& X) {
    if (X.size() == 0) return std::size_t{0};
    auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(X).singularValues();
    return static_cast<std::size_t>((sv.array() > tol).count());
  };
  s.rank_m = rank(M);
  s.rank_sum = rank(S) + rank(A);
  return s;
}

std::vector<std::size_t> chain_variables(const ScaleResult& sc, std::size_t k) {
  return sc.decomposition.union_up_to(k);
}

std::size_t dynamic_levels(const ScaleResult& sc) {
  std::size_t n = 0;
  for (const auto& g : sc.decomposition.groups)
    if (g.order) ++n;
  return n;
}

namespace {

std::vector<Polynomial> level_rows(const PolySystem& sys, const ScaleResult& sc,
                                   const std::vector<std::size_t>& rows) {
  std::vector<Polynomial> out;
  for (auto i : rows) out.push_back(sys.field_part(i, sc.trunc.s1));
  return out;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& J, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(J.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = J.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

std::vector<std::size_t> group_members(const ScaleResult& sc, std::size_t k) {
  return sc.decomposition.groups.at(k - 1).species;
}

}  // namespace

Projection project_to_level(const PolySystem& sys, const ScaleResult& sc, std::size_t k,
                            const std::vector<double>& seed, const std::map<std::string, double>& params,
                            double tol, int max_iter) {
  auto X = chain_variables(sc, k);
  NumericField F(level_rows(sys, sc, X), sys.species(), params);
  return newton_positive(F, X, seed, tol, max_iter);
}

ChainReport chain_verify(const PolySystem& sys, const ScaleResult& sc, std::size_t l,
                         const std::vector<std::vector<double>>& seeds_in, std::mt19937_64& rng,
                         const ChainOptions& opt) {
  if (l < 1 || l > dynamic_levels(sc))
    throw ChainError("chain level " + std::to_string(l) + " out of range 1.." + std::to_string(dynamic_levels(sc)));
  ChainReport rep;
  rep.species = sys.species();
  auto params = parameter_values(sys);

  std::vector<std::vector<double>> seeds = seeds_in;
  if (seeds.empty()) {
    std::vector<double> x0(sys.n(), 1.0);
    for (std::size_t i = 0; i < sys.n(); ++i)
      if (auto it = sys.initial.find(sys.species()[i]); it != sys.initial.end() && it->second > 0) x0[i] = it->second;
    seeds.push_back(x0);
    std::normal_distribution<double> nd(0.0, 0.5);
    for (std::size_t s = 0; s < opt.perturbations; ++s) {
      auto y = x0;
      for (auto& v : y) v *= std::exp(nd(rng));
      seeds.push_back(y);
    }
  }

  auto vars = all_variables(sys);
  bool all_true = true;
  for (std::size_t k = 1; k <= l; ++k) {
    ChainLevel lev;
    lev.level = k;
    auto J = level_jacobian(sys, sc, k);
    bool nonzero = false;
    for (int t = 0; t < 4 && !nonzero; ++t) {
      Point pt;
      for (const auto& v : vars) pt[v] = random_positive_rational(rng);
      nonzero = evaluate_matrix(J, pt).determinant() != 0;
    }
    if (!nonzero) {
      lev.det = DetStatus::Zero;
      lev.hyperbolic = false;
      lev.notes.push_back("D_{Z_k} F_k^(1) is singular: chain broken");
      rep.levels.push_back(lev);
      rep.broken_at = k;
      rep.hyperbolic = false;
      return rep;
    }
    auto X = chain_variables(sc, k);
    std::size_t a = k == 1 ? 0 : chain_variables(sc, k - 1).size();
    NumericField F(level_rows(sys, sc, X), sys.species(), params);
    bool any_pos = false, any_marginal = false;
    for (const auto& seed : seeds) {
      auto p = newton_positive(F, X, seed, 1e-13, 200);
      if (!p.ok) {
        lev.notes.push_back("sample skipped: " + p.note);
        continue;
      }
      Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(p.x.data(), static_cast<Eigen::Index>(p.x.size()));
      Eigen::MatrixXd Jk = select_cols(F.jacobian(x), X);
      Eigen::MatrixXd S;
      try {
        S = schur_complement(Jk, a);
      } catch (const ChainError& e) {
        lev.notes.push_back(std::string("sample skipped: ") + e.what());
        continue;
      }
      Eigen::EigenSolver<Eigen::MatrixXd> es(S, false);
      std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
      double rho = 0;
      for (const auto& z : ev) rho = std::max(rho, std::abs(z));
      for (const auto& z : ev) {
        if (z.real() >= opt.rel_tol * rho && rho > 0) any_pos = true;
        else if (rho == 0 || z.real() > -opt.rel_tol * rho) any_marginal = true;
      }
      lev.samples.push_back(p.x);
      lev.eigenvalues.push_back(ev);
    }
    if (lev.samples.empty()) {
      lev.notes.push_back("no sample reached M_k");
    } else if (any_pos) {
      lev.hyperbolic = false;
    } else if (!any_marginal) {
      lev.hyperbolic = true;
    }
    all_true = all_true && lev.hyperbolic.value_or(false);
    if (lev.hyperbolic == false) rep.hyperbolic = false;
    rep.levels.push_back(lev);
  }
  if (!rep.hyperbolic) {
    if (all_true) rep.hyperbolic = true;
  }
  return rep;
}

QeDiagnostic qe_degeneracy_diagnostic(const PolySystem& sys, const ScaleResult& sc, std::size_t l,
                                      std::mt19937_64& rng, const std::optional<Polynomial>& law) {
  QeDiagnostic d;
  auto X = chain_variables(sc, l);
  for (auto i : X) d.species.push_back(sys.species()[i]);
  auto J = level_jacobian(sys, sc, l);
  auto vars = all_variables(sys);
  auto vs = sample_variety(level_rows(sys, sc, X), vars, 3, rng);
  std::vector<Point> pts = vs.points;
  d.status = vs.status;
  if (pts.empty()) {
    Point pt;
    for (const auto& v : vars) pt[v] = random_positive_rational(rng);
    pts.push_back(pt);
    d.status = "variety not sampled (" + vs.status + "); generic point used";
  }
  d.degenerate = std::all_of(pts.begin(), pts.end(), [&](const Point& p) { return evaluate_matrix(J, p).determinant() == 0; });
  RationalMatrix M = evaluate_matrix(J, pts.front());
  if (d.degenerate) d.covectors = left_kernel_irreducible(M);
  if (law) {
    std::vector<Rational> g;
    for (const auto& s : d.species) g.push_back(law->derivative(s).evaluate(pts.front()));
    auto r = M.left_multiply(g);
    d.law_in_kernel = std::all_of(r.begin(), r.end(), [](const Rational& v) { return v == 0; });
  }
  return d;
}

Lemma6Check lemma6_check(const PolySystem& sys, const ScaleResult& sc, std::size_t k,
                         const std::vector<double>& seed, const std::map<std::string, double>& params,
                         double rel_step) {
  if (k < 1 || k + 1 > dynamic_levels(sc)) throw ChainError("lemma6_check: level out of range");
  Lemma6Check out;
  auto Xk = chain_variables(sc, k);
  auto X1 = chain_variables(sc, k + 1);
  auto zk1 = group_members(sc, k + 1);
  NumericField Fk(level_rows(sys, sc, Xk), sys.species(), params);
  NumericField Fk1(level_rows(sys, sc, X1), sys.species(), params);
  NumericPolys slow(level_rows(sys, sc, zk1), sys.species(), params);
  auto p = newton_positive(Fk, Xk, seed, 1e-15, 300);
  out.projected = p.ok;
  if (!p.ok) throw ChainError("lemma6_check: projection onto M_k failed: " + p.note);
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(p.x.data(), static_cast<Eigen::Index>(p.x.size()));
  out.schur = schur_complement(select_cols(Fk1.jacobian(x), X1), Xk.size());

  const auto m = static_cast<Eigen::Index>(zk1.size());
  out.finite_difference.resize(m, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    auto j = zk1[static_cast<std::size_t>(c)];
    double h = rel_step * p.x[j];
    auto plus = p.x, minus = p.x;
    plus[j] += h;
    minus[j] -= h;
    auto pp = newton_positive(Fk, Xk, plus, 1e-15, 300);
    auto pm = newton_positive(Fk, Xk, minus, 1e-15, 300);
    if (!pp.ok || !pm.ok) throw ChainError("lemma6_check: projection failed during differencing");
    for (Eigen::Index r = 0; r < m; ++r) {
      auto rr = static_cast<std::size_t>(r);
      out.finite_difference(r, c) = (slow.eval(rr, pp.x.data()) - slow.eval(rr, pm.x.data())) / (2 * h);
    }
  }
  double scale = std::max(out.schur.cwiseAbs().maxCoeff(), 1e-300);
  out.rel_error = (out.schur - out.finite_difference).cwiseAbs().maxCoeff() / scale;
  return out;
}

nlohmann::json chain_report_json(const ChainReport& r) {
  nlohmann::json j;
  j["species"] = r.species;
  j["hyperbolic"] = r.hyperbolic ? nlohmann::json(*r.hyperbolic) : nlohmann::json("inconclusive");
  j["broken_at"] = r.broken_at ? nlohmann::json(*r.broken_at) : nlohmann::json(nullptr);
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.levels) {
    nlohmann::json lj;
    lj["level"] = l.level;
    lj["det_DZk_F1k"] = det_status_name(l.det);
    lj["hyperbolic"] = l.hyperbolic ? nlohmann::json(*l.hyperbolic) : nlohmann::json("inconclusive");
    nlohmann::json re = nlohmann::json::array();
    for (const auto& ev : l.eigenvalues) {
      std::vector<double> parts;
      for (const auto& z : ev) parts.push_back(z.real());
      re.push_back(parts);
    }
    lj["schur_eigen_realparts"] = re;
    lj["samples"] = l.samples;
    lj["notes"] = l.notes;
    levels.push_back(lj);
  }
  j["levels"] = levels;
  return j;
}

nlohmann::json qe_diagnostic_json(const QeDiagnostic& d) {
  nlohmann::json j;
  j["degenerate"] = d.degenerate;
  j["species"] = d.species;
  nlohmann::json cv = nlohmann::json::array();
  for (const auto& c : d.covectors) {
    std::vector<std::string> s;
    for (const auto& q : c) s.push_back(to_string(q));
    cv.push_back(s);
  }
  j["kernel_covectors"] = cv;
  if (d.law_in_kernel) j["law_in_kernel"] = *d.law_in_kernel;
  j["status"] = d.status;
  return j;
}

}  // namespace tropored
