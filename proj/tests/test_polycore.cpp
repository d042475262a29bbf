#include "test_support.hpp"
#include "tropored/conslaw.hpp"
#include "tropored/linalg.hpp"
#include "tropored/sampling.hpp"

#include <doctest.h>

#include <random>

using namespace tropored;
using testsupport::P;

TEST_CASE("rational parsing") {
  CHECK(parse_rational("3") == 3);
  CHECK(parse_rational("-2/4") == Rational(-1, 2));
  CHECK(parse_rational("0.125") == Rational(1, 8));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational("abc"));
}

TEST_CASE("polynomial arithmetic is canonical") {
  Polynomial a = P("x1 + x2"), b = P("x2 + x1");
  CHECK(a == b);
  CHECK((a - b).is_zero());
  CHECK(P("(x1+x2)^2") == P("x1^2 + 2*x1*x2 + x2^2"));
  CHECK(P("x1*x2/x2") == P("x1"));
  CHECK(P("k1*x1*(k4 - x4 + x1)").derivative("x1") == P("k1*k4 - k1*x4 + 2*k1*x1"));
  CHECK(P("x1*x3").substitute({{"x3", P("k4 - x2")}}) == P("k4*x1 - x1*x2"));
  CHECK(P("x1^(-1)*x2").substitute({{"x1", P("2*q")}}) == P("1/2*q^(-1)*x2"));
  CHECK_THROWS(P("x1^(-1)").substitute({{"x1", P("a + b")}}));
  CHECK(name_less("x2", "x10"));
  CHECK(P("x10 + x2").str() == "x2 + x10");
}

TEST_CASE("polynomial orders") {
  OrderMap w{{"x1", -2}, {"x2", -1}, {"k1", 2}};
  CHECK(*P("k1*x1 + x2").order(w) == -1);
  CHECK(P("k1*x1 + x2").dominant_part(w) == P("x2"));
  CHECK(!Polynomial().order(w));
}

TEST_CASE("symbolic determinant") {
  std::vector<std::vector<Polynomial>> m{{P("-k1*x3"), P("k2"), P("-k1*x1")},
                                         {P("1"), P("1"), P("0")},
                                         {P("0"), P("1"), P("1")}};
  // Cofactor expansion by hand: -k1 x3 - k2 - k1 x1.
  CHECK(symbolic_determinant(m) == P("-k2 - k1*x1 - k1*x3"));
}

TEST_CASE("evaluate_field") {
  auto mm = testsupport::load("michaelis_menten");
  // MM at x=(1,1,1), k=(1,1,1): (-1+1, 1-1-1, -1+1+1).
  auto f = evaluate_field(mm.system, {1, 1, 1}, {1, 1, 1});
  CHECK(f[0] == doctest::Approx(0));
  CHECK(f[1] == doctest::Approx(-1));
  CHECK(f[2] == doctest::Approx(1));
  auto ex2 = testsupport::load("example2");
  auto g = evaluate_field(ex2.system, {0.5, 0.5}, {});
  CHECK(g[0] == doctest::Approx(0));
  CHECK(g[1] == doctest::Approx(0));
  CHECK_THROWS(evaluate_field(mm.system, {1, 0, 1}, {1, 1, 1}));
  CHECK_THROWS(evaluate_field(mm.system, {1, 1}, {1, 1, 1}));
  // Linearity in k: scaling k3 scales only its rate's contribution.
  auto h = evaluate_field(mm.system, {0.3, 0.7, 2.0}, {1, 1, 2});
  auto h1 = evaluate_field(mm.system, {0.3, 0.7, 2.0}, {1, 1, 1});
  CHECK(h[1] - h1[1] == doctest::Approx(-0.7));
  CHECK(h[0] == doctest::Approx(h1[0]));
}

TEST_CASE("all-zero stoichiometry gives a zero field") {
  PolySystem sys({"x1"}, {{"k1", 1.0}}, {{Monomial::var("k1"), Monomial::var("x1")}},
                 RationalMatrix(1, 1));
  CHECK(evaluate_field(sys, {2.0}, {1.0})[0] == 0.0);
}

TEST_CASE("from_polynomials recovers rates and stoichiometry") {
  auto sys = PolySystem::from_polynomials({"x1", "x2", "x3"}, {{"k1", 1.0}, {"k2", 1.0}, {"k3", 1.0}},
                                          {P("-k1*x1*x3 + k2*x2"), P("k1*x1*x3 - k2*x2 - k3*x2"),
                                           P("-k1*x1*x3 + k2*x2 + k3*x2")});
  CHECK(sys.r() == 3);
  CHECK(sys.field(2) == P("-k1*x1*x3 + k2*x2 + k3*x2"));
  CHECK_THROWS_AS(PolySystem::from_polynomials({"x1"}, {}, {P("k9*x1")}), ModelError);
}

TEST_CASE("model JSON round trip and validation") {
  auto m = testsupport::load("tgfb");
  auto j = model_to_json(m);
  auto back = model_from_json(j);
  CHECK(back.system.field() == m.system.field());
  CHECK(back.d == m.d);
  nlohmann::json bad = j;
  bad["stoichiometry"][0].erase(0);
  CHECK_THROWS_AS(model_from_json(bad), ModelError);
  nlohmann::json neg = j;
  neg["parameters"]["k1"] = -1.0;
  CHECK_THROWS_AS(model_from_json(neg), ModelError);
}

TEST_CASE("left_kernel_irreducible") {
  auto mm = testsupport::load("michaelis_menten");
  auto sc = testsupport::scale(mm);
  auto basis = left_kernel_irreducible(sc.trunc.s1);
  REQUIRE(basis.size() == 2);
  std::vector<Rational> a{1, 1, 0}, b{0, 1, 1};
  CHECK(basis[0] == a);
  CHECK(basis[1] == b);
  for (const auto& c : basis) CHECK(RationalMatrix(sc.trunc.s1).left_multiply(c) ==
                                    std::vector<Rational>(sc.trunc.s1.cols(), 0));

  auto l4 = testsupport::load("linear4");
  auto b4 = left_kernel_irreducible(testsupport::scale(l4).trunc.s1);
  REQUIRE(b4.size() == 2);
  CHECK(b4[0] == std::vector<Rational>{1, 1, 0, 0});
  CHECK(b4[1] == std::vector<Rational>{0, 0, 1, 1});

  CHECK(left_kernel_irreducible(RationalMatrix::identity(3)).empty());
}

TEST_CASE("irreducible basis prefers small semi-positive supports") {
  // Kernel spanned by (1,1,0,0),(0,0,1,1); a basis vector like (1,1,1,1) must be split.
  RationalMatrix m(std::vector<std::vector<Rational>>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  auto b = left_kernel_irreducible(m);
  REQUIRE(b.size() == 2);
  CHECK(support(b[0]).size() == 2);
  CHECK(support(b[1]).size() == 2);
  CHECK(is_elementary(m, b[0]));
  CHECK(!is_elementary(m, {1, 1, 1, 1}));
}

TEST_CASE("random kernels: basis size and orthogonality") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-2, 2);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 3 + trial % 5, r = 2 + trial % 4;
    RationalMatrix m(n, r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < r; ++j) m(i, j) = coef(rng);
    auto b = left_kernel_irreducible(m);
    CHECK(b.size() == n - m.rank());
    for (const auto& v : b) {
      CHECK(m.left_multiply(v) == std::vector<Rational>(r, 0));
      CHECK(is_elementary(m, v));
    }
    if (!b.empty()) CHECK(RationalMatrix(b).rank() == b.size());
  }
}

TEST_CASE("generic rank") {
  std::mt19937_64 rng(1);
  auto mm = testsupport::load("michaelis_menten");
  auto sc = testsupport::scale(mm);
  auto f1 = sc.trunc.f1(mm.system);
  std::vector<Polynomial> stacked = f1;
  stacked.push_back(P("x1 + x2"));
  stacked.push_back(P("x2 + x3"));
  auto J = jacobian(stacked, mm.system.species());
  auto r = generic_rank(J, {f1[0]}, all_variables(mm.system), rng);
  CHECK(r.conclusive);
  CHECK(!r.certified);
  CHECK(r.rank == 3);

  auto ex2 = testsupport::load("example2");
  auto f = ex2.system.field();
  f.push_back(P("x1 + x2"));
  auto r2 = generic_rank(jacobian(f, ex2.system.species()), {ex2.system.field(0)},
                         all_variables(ex2.system), rng);
  CHECK(r2.rank == 1);

  std::vector<std::vector<Polynomial>> zero(2, std::vector<Polynomial>(2));
  CHECK(generic_rank(zero, {}, {"x1"}, rng).rank == 0);
  // x1 + 1 = 0 has no positive point: inconclusive, never a silent zero.
  auto bad = generic_rank(zero, {P("x1 + 1")}, {"x1"}, rng);
  CHECK(!bad.conclusive);
}

TEST_CASE("generic rank is monotone in the sample count") {
  auto mm = testsupport::load("michaelis_menten");
  auto J = jacobian(mm.system.field(), mm.system.species());
  std::size_t prev = 0;
  for (std::size_t n : {1, 5, 25}) {
    std::mt19937_64 rng(3);
    auto r = generic_rank(J, {}, all_variables(mm.system), rng, n);
    CHECK(r.rank >= prev);
    prev = r.rank;
  }
}
