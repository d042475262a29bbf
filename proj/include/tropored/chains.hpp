#pragma once

#include "tropored/numeric.hpp"
#include "tropored/scaling.hpp"
#include "tropored/transform.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <complex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropored {

class ChainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// M/A = D - C A^-1 B with A the leading a x a block.
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& M, std::size_t a);

struct SchurIdentities {
  double det_m = 0;
  double det_product = 0;  // det(M/A) det(A)
  std::size_t rank_m = 0;
  std::size_t rank_sum = 0;  // rk(M/A) + rk(A)
  double det_rel_error = 0;
};

SchurIdentities schur_identities(const Eigen::MatrixXd& M, std::size_t a);

// Ordered species of groups 1..k (fastest first).
std::vector<std::size_t> chain_variables(const ScaleResult& sc, std::size_t k);

// Number of levels with a finite timescale (the constant group is excluded).
std::size_t dynamic_levels(const ScaleResult& sc);

using Projection = NewtonResult;

// Newton (in log coordinates) on F^(1) rows of X_k = 0 for the X_k species,
// all other species fixed at their seed values.
Projection project_to_level(const PolySystem& sys, const ScaleResult& sc, std::size_t k,
                            const std::vector<double>& seed, const std::map<std::string, double>& params,
                            double tol = 1e-13, int max_iter = 200);

struct ChainLevel {
  std::size_t level = 0;
  DetStatus det = DetStatus::Nonzero;
  std::vector<std::vector<double>> samples;  // points of M_k
  std::vector<std::vector<std::complex<double>>> eigenvalues;
  std::optional<bool> hyperbolic;  // empty: inconclusive
  std::vector<std::string> notes;
};

struct ChainReport {
  std::vector<std::string> species;
  std::vector<ChainLevel> levels;
  std::optional<std::size_t> broken_at;
  std::optional<bool> hyperbolic;
};

struct ChainOptions {
  double rel_tol = 1e-8;      // Re(lambda) < -rel_tol * spectral radius
  std::size_t perturbations = 5;
};

// Hyperbolic attractivity of the chain M_0 > M_1 > ... > M_l, sampled at the
// projections of `seeds` (all species). Empty seeds: the initial state and
// random perturbations of it.
ChainReport chain_verify(const PolySystem& sys, const ScaleResult& sc, std::size_t l,
                         const std::vector<std::vector<double>>& seeds, std::mt19937_64& rng,
                         const ChainOptions& opt = {});

struct QeDiagnostic {
  bool degenerate = false;
  std::vector<std::string> species;              // X_l
  std::vector<std::vector<Rational>> covectors;  // left kernel at a point of M_l
  std::optional<bool> law_in_kernel;
  std::string status;
};

// Singularity of D_{X_l} F_l^(1) on the steady variety and its left-kernel covectors.
QeDiagnostic qe_degeneracy_diagnostic(const PolySystem& sys, const ScaleResult& sc, std::size_t l,
                                      std::mt19937_64& rng, const std::optional<Polynomial>& law = {});

struct Lemma6Check {
  Eigen::MatrixXd schur;
  Eigen::MatrixXd finite_difference;
  double rel_error = 0;
  bool projected = false;
};

// D_{z_{k+1}} f*_{k+1} by central differences of the eliminated map against
// the Schur complement of the stacked level Jacobians, at the projection of `seed` onto M_k.
Lemma6Check lemma6_check(const PolySystem& sys, const ScaleResult& sc, std::size_t k,
                         const std::vector<double>& seed, const std::map<std::string, double>& params,
                         double rel_step = 1e-5);

nlohmann::json chain_report_json(const ChainReport& r);
nlohmann::json qe_diagnostic_json(const QeDiagnostic& d);

}  // namespace tropored
