#include "test_support.hpp"
#include "tropored/chains.hpp"
#include "tropored/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tropored;

namespace {

// Block elimination by hand: Gaussian elimination of the first a columns
// without pivoting leaves M/A in the trailing block.
Eigen::MatrixXd eliminate_leading(Eigen::MatrixXd M, int a) {
  for (int p = 0; p < a; ++p)
    for (int r = p + 1; r < M.rows(); ++r) {
      double f = M(r, p) / M(p, p);
      M.row(r) -= f * M.row(p);
    }
  return M.bottomRightCorner(M.rows() - a, M.cols() - a);
}

const TransformState& mm_state() {
  static const TransformState s = transform_explicit(testsupport::load("michaelis_menten"));
  return s;
}

}  // namespace

TEST_CASE("Schur complement of small matrices") {
  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 1, 2;
  auto S = schur_complement(M, 1);
  REQUIRE(S.rows() == 1);
  CHECK(S(0, 0) == doctest::Approx(1.5));

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  CHECK(schur_complement(I, 2).isApprox(Eigen::MatrixXd::Identity(2, 2)));

  Eigen::MatrixXd Z(2, 2);
  Z << 0, 1, 1, 0;
  CHECK_THROWS_AS(schur_complement(Z, 1), ChainError);
}

TEST_CASE("Schur complement agrees with block elimination and the det/rank identities") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd M(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) M(i, j) = nd(rng) + (i == j ? 4.0 : 0.0);
    int a = 1 + trial % 5;
    auto S = schur_complement(M, static_cast<std::size_t>(a));
    CHECK((S - eliminate_leading(M, a)).norm() <= 1e-10 * (1 + S.norm()));
    auto id = schur_identities(M, static_cast<std::size_t>(a));
    CHECK(id.det_m == doctest::Approx(M.determinant()).epsilon(1e-10));
    CHECK(id.det_rel_error < 1e-9);
    CHECK(id.rank_m == id.rank_sum);
  }
  // Rank additivity on a singular matrix with invertible leading block.
  Eigen::MatrixXd R(3, 3);
  R << 1, 2, 3, 2, 5, 7, 3, 7, 10;  // third row = first + second
  auto id = schur_identities(R, 1);
  CHECK(id.rank_m == 2);
  CHECK(id.rank_sum == 2);
}

TEST_CASE("MM chain: level-1 eigenvalue is -sqrt(B^2 + 4 k1 k2 x4)") {
  const auto& s = mm_state();
  const auto& sys = s.model.system;
  auto sc = scale_model(s.model);
  REQUIRE(dynamic_levels(sc) == 2);
  REQUIRE(sys.species() == std::vector<std::string>{"x1", "x4"});
  auto k = parameter_values(sys);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<std::vector<double>> seeds;
  for (int i = 0; i < 10; ++i) seeds.push_back({u(rng), u(rng)});
  auto rep = chain_verify(sys, sc, 1, seeds, rng);
  REQUIRE(rep.levels.size() == 1);
  const auto& lv = rep.levels[0];
  REQUIRE(lv.samples.size() == seeds.size());
  for (std::size_t i = 0; i < lv.samples.size(); ++i) {
    double x4 = lv.samples[i][1];
    double B = k["k1"] * k["k4"] - k["k1"] * x4 + k["k2"];
    double expect = -std::sqrt(B * B + 4 * k["k1"] * k["k2"] * x4);
    REQUIRE(lv.eigenvalues[i].size() == 1);
    CHECK(lv.eigenvalues[i][0].real() == doctest::Approx(expect).epsilon(1e-10));
    CHECK(lv.eigenvalues[i][0].imag() == 0.0);
  }
  CHECK(lv.hyperbolic == std::optional<bool>(true));
  CHECK(rep.hyperbolic == std::optional<bool>(true));
  CHECK_FALSE(rep.broken_at.has_value());
}

TEST_CASE("MM chain at the initial state gives -sqrt(5)") {
  const auto& s = mm_state();
  auto sc = scale_model(s.model);
  std::mt19937_64 rng(1);
  auto rep = chain_verify(s.model.system, sc, 1, {}, rng);
  REQUIRE_FALSE(rep.levels[0].eigenvalues.empty());
  CHECK(rep.levels[0].eigenvalues[0][0].real() == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-10));
  auto j = chain_report_json(rep);
  CHECK(j["levels"].size() == 1);
}

TEST_CASE("Example 2 chain is broken at level 1") {
  auto m = testsupport::load("example2");
  auto sc = scale_model(m);
  std::mt19937_64 rng(1);
  auto rep = chain_verify(m.system, sc, 1, {}, rng);
  REQUIRE(rep.broken_at.has_value());
  CHECK(*rep.broken_at == 1);
  CHECK(rep.hyperbolic != std::optional<bool>(true));
}

TEST_CASE("QE diagnostic of untransformed MM finds both conservation covectors") {
  auto m = testsupport::load("michaelis_menten");
  auto sc = scale_model(m);
  std::mt19937_64 rng(5);
  auto d = qe_degeneracy_diagnostic(m.system, sc, 1, rng, testsupport::P("x1 + x2"));
  CHECK(d.degenerate);
  REQUIRE(d.species == std::vector<std::string>{"x1", "x2", "x3"});
  REQUIRE(d.covectors.size() == 2);
  // Span check: stacking with (1,1,0) and (0,1,1) keeps rank 2.
  Eigen::MatrixXd K(4, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) K(i, j) = d.covectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get_d();
  K.row(2) << 1, 1, 0;
  K.row(3) << 0, 1, 1;
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(K).rank() == 2);
  CHECK(d.law_in_kernel == std::optional<bool>(true));
  CHECK(qe_diagnostic_json(d)["kernel_covectors"].size() == 2);
}

TEST_CASE("Transformed MM level 1 is not degenerate") {
  const auto& s = mm_state();
  auto sc = scale_model(s.model);
  std::mt19937_64 rng(5);
  auto d = qe_degeneracy_diagnostic(s.model.system, sc, 1, rng);
  CHECK_FALSE(d.degenerate);
  CHECK(d.covectors.empty());
}

TEST_CASE("Eliminated-map derivative equals the Schur complement") {
  for (const char* name : {"michaelis_menten", "linear4"}) {
    CAPTURE(name);
    auto s = transform_explicit(testsupport::load(name));
    auto sc = scale_model(s.model);
    auto params = parameter_values(s.model.system);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (std::size_t k = 1; k + 1 <= dynamic_levels(sc); ++k) {
      for (int trial = 0; trial < 3; ++trial) {
        auto seed = initial_state_vector(s.model.system);
        for (auto& v : seed) v *= u(rng);
        auto c = lemma6_check(s.model.system, sc, k, seed, params);
        CHECK(c.projected);
        CHECK(c.rel_error < 1e-6);
      }
    }
  }
}
