#pragma once

#include "tropored/polynomial.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace tropored {

// Dense matrix over exact rationals.
class RationalMatrix {
public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), a_(rows * cols) {}
  explicit RationalMatrix(const std::vector<std::vector<Rational>>& rows);
  static RationalMatrix identity(std::size_t n);

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  Rational& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
  std::vector<Rational> row(std::size_t i) const;
  std::vector<Rational> col(std::size_t j) const;

  RationalMatrix transpose() const;
  RationalMatrix operator*(const RationalMatrix& o) const;
  std::vector<Rational> operator*(const std::vector<Rational>& v) const;
  // v^T M
  std::vector<Rational> left_multiply(const std::vector<Rational>& v) const;
  RationalMatrix select_rows(const std::vector<std::size_t>& idx) const;
  RationalMatrix select_cols(const std::vector<std::size_t>& idx) const;
  bool is_zero() const;
  bool operator==(const RationalMatrix& o) const;

  // Reduced row echelon form in place; returns pivot columns.
  std::vector<std::size_t> rref();
  std::size_t rank() const;
  Rational determinant() const;
  // Basis of {v : M v = 0}, one vector per free column of the RREF.
  std::vector<std::vector<Rational>> kernel() const;
  std::vector<std::vector<Rational>> left_kernel() const { return transpose().kernel(); }
  // Solves M x = b; returns false when inconsistent. Free variables set to 0.
  bool solve(const std::vector<Rational>& b, std::vector<Rational>& x) const;
  RationalMatrix inverse() const;

private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<Rational> a_;
};

// Scales a rational vector to a primitive integer vector (gcd 1), keeping sign.
std::vector<Rational> primitive_integer(const std::vector<Rational>& v);
std::vector<std::size_t> support(const std::vector<Rational>& v);
bool semi_positive(const std::vector<Rational>& v);

using VectorOrder = std::function<bool(const std::vector<Rational>&, const std::vector<Rational>&)>;

// Basis of the left kernel made of minimal-support (elementary) vectors.
// Semi-positive vectors are preferred, then smaller supports, then lexicographic order.
// A caller-supplied order, when given, takes precedence over these rules.
std::vector<std::vector<Rational>> left_kernel_irreducible(const RationalMatrix& m,
                                                          const VectorOrder& first = {});

// True when no nonzero left-kernel vector has support strictly inside supp(v).
bool is_elementary(const RationalMatrix& m, const std::vector<Rational>& v);

Rational lcm_of_denominators(const std::vector<Rational>& v);

}  // namespace tropored
