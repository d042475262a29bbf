#pragma once

#include "tropored/model.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace tropored {

// Polynomials compiled for double evaluation over a fixed variable order.
// Symbols that are not variables are replaced by `constants`.
class NumericPolys {
public:
  NumericPolys() = default;
  NumericPolys(const std::vector<Polynomial>& polys, const std::vector<std::string>& vars,
               const std::map<std::string, double>& constants);

  std::size_t size() const { return rows_.size(); }
  std::size_t nvars() const { return nvars_; }
  double eval(std::size_t i, const double* x) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  // Largest absolute term of row i, used as a residual scale.
  double term_scale(std::size_t i, const double* x) const;
  // Sums of positive and of negative terms of row i (the latter as a magnitude).
  std::pair<double, double> split(std::size_t i, const double* x) const;

private:
  struct Term {
    double c;
    std::vector<std::pair<std::size_t, int>> f;
  };
  double term_value(const Term& t, const double* x) const;
  std::vector<std::vector<Term>> rows_;
  std::size_t nvars_ = 0;
};

// Field and Jacobian of `polys` with respect to `vars`.
class NumericField {
public:
  NumericField() = default;
  NumericField(const std::vector<Polynomial>& polys, const std::vector<std::string>& vars,
               const std::map<std::string, double>& constants);
  std::size_t rows() const { return f_.size(); }
  std::size_t nvars() const { return f_.nvars(); }
  Eigen::VectorXd value(const Eigen::VectorXd& x) const { return f_.eval(x); }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  const NumericPolys& polys() const { return f_; }

private:
  NumericPolys f_;
  NumericPolys j_;  // row-major, rows x nvars
};

struct NewtonResult {
  bool ok = false;
  std::vector<double> x;  // full variable vector
  double residual = 0;    // max scaled residual
  int iterations = 0;
  std::string note;
};

// Damped Newton in log coordinates on the rows of F for the positive
// `unknowns`; the other entries of x stay fixed. Residuals are scaled by the
// largest term of each row.
NewtonResult newton_positive(const NumericField& F, const std::vector<std::size_t>& unknowns, std::vector<double> x,
                             double tol = 1e-13, int max_iter = 200);

// Max scaled residual of all rows at x.
double scaled_residual(const NumericPolys& f, const double* x);

// Parameter values of a system; every parameter must have one.
std::map<std::string, double> parameter_values(const PolySystem& sys);

}  // namespace tropored
