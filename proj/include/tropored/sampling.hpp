#pragma once

#include "tropored/linalg.hpp"
#include "tropored/polynomial.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace tropored {

using Point = std::map<std::string, Rational>;

// Log-uniform rational in [10^-3, 10^3] with a small denominator.
Rational random_positive_rational(std::mt19937_64& rng);

struct VarietySample {
  std::vector<Point> points;
  bool found = false;
  std::string status;  // "ok", "unconstrained" or "inconclusive: ..."
};

// Positive rational points of {eqs = 0} in the given variables. The
// equations are solved exactly for a jointly linear subset of variables; the
// remaining equations must then vanish exactly at the sample.
VarietySample sample_variety(const std::vector<Polynomial>& eqs, const std::vector<std::string>& vars,
                             std::size_t count, std::mt19937_64& rng, std::size_t max_tries = 400);

RationalMatrix evaluate_matrix(const std::vector<std::vector<Polynomial>>& m, const Point& p);

// Jacobian rows d f_i / d v_j.
std::vector<std::vector<Polynomial>> jacobian(const std::vector<Polynomial>& f,
                                              const std::vector<std::string>& vars);

struct RankReport {
  std::size_t rank = 0;
  bool certified = false;  // Monte-Carlo rank: never certified
  bool conclusive = false;
  std::size_t samples = 0;
  std::string status;
};

// Maximum rank over random points of the constraint set (or of the whole
// positive orthant when there are no constraints).
RankReport generic_rank(const std::vector<std::vector<Polynomial>>& m,
                        const std::vector<Polynomial>& constraints,
                        const std::vector<std::string>& vars, std::mt19937_64& rng,
                        std::size_t samples = 25);

}  // namespace tropored
