#include "test_support.hpp"
#include "tropored/reduce.hpp"
#include "tropored/transform.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tropored;
using testsupport::P;

namespace {

const TransformState& mm_state() {
  static const TransformState s = transform_explicit(testsupport::load("michaelis_menten"));
  return s;
}

const TransformState& tgfb_state() {
  static const TransformState s = transform_explicit(testsupport::load("tgfb"));
  return s;
}

}  // namespace

TEST_CASE("MM slowest reduction is a single quadratic") {
  auto r = reduce_at(mm_state().model, 0, ReduceVariant::Slowest);
  CHECK(r.slaved == std::vector<std::string>{"x1"});
  CHECK(r.driving == std::vector<std::string>{"x4"});
  CHECK(r.quenched.empty());
  REQUIRE(r.plan.size() == 1);
  const auto& st = r.plan[0];
  CHECK(st.kind == SolveStep::Kind::Quadratic);
  CHECK(st.a == P("k1"));
  CHECK(st.b == P("k1*k4 - k1*x4 + k2"));
  CHECK(st.c == P("-k2*x4"));
  CHECK(st.branch == 1);
  REQUIRE(r.driving_odes.size() == 1);
  CHECK(r.driving_odes[0] == P("k3*x1 - k3*x4"));

  // k1 = k2 = 1, k4 = x2 + x3 = 1 at the initial state.
  auto v = eliminate_fast(r, {{"x4", 1.0}});
  CHECK(v.at("x1") == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-14));

  auto j = reduced_to_json(r);
  CHECK(j["variant"] == "slowest");
  CHECK(j["closed_forms"].size() == 1);
}

TEST_CASE("MM eliminated x1 is the positive root of the fast equation") {
  auto r = reduce_at(mm_state().model, 0, ReduceVariant::Slowest);
  const auto& k = r.parameters;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  FastEliminator elim(r);
  for (int i = 0; i < 50; ++i) {
    double x4 = u(rng);
    double x1 = elim.solve({{"x4", x4}}).at("x1");
    double f = -k.at("k1") * k.at("k4") * x1 - k.at("k1") * x1 * x1 + k.at("k1") * x1 * x4 - k.at("k2") * x1 +
               k.at("k2") * x4;
    CHECK(x1 > 0);
    CHECK(std::abs(f) <= 1e-12 * (1 + x4 + x1 * x1));
    CHECK(slaved_residual(r, {{"x1", x1}, {"x4", x4}}) < 1e-12);
  }
}

TEST_CASE("Reduction below a degenerate level is rejected") {
  auto m = testsupport::load("michaelis_menten");
  CHECK_THROWS_AS(reduce_at(m, 2, ReduceVariant::Simple), ReduceError);
  CHECK_THROWS_AS(reduce_at(mm_state().model, 7, ReduceVariant::Simple), ReduceError);
  CHECK_THROWS_AS(parse_variant("fastest"), ReduceError);
}

TEST_CASE("TGF-beta slowest reduction matches the closed forms of the reduced model table") {
  const auto& m = tgfb_state().model;
  auto r = reduce_at(m, 0, ReduceVariant::Slowest);
  REQUIRE(r.driving == std::vector<std::string>{"x15"});
  CHECK(r.slaved.size() == 17);
  REQUIRE(r.driving_odes.size() == 1);
  CHECK(r.driving_odes[0] == P("k18 - x12*(k20 + k26) + k26*x12 + k30*x11 - k22*k37*x12*x13"));

  const auto& k = r.parameters;
  auto K = [&](int i) { return k.at("k" + std::to_string(i)); };
  for (double x15 : {0.5 * m.system.initial.at("x15"), m.system.initial.at("x15"), 3.0 * m.system.initial.at("x15")}) {
    CAPTURE(x15);
    auto v = eliminate_fast(r, {{"x15", x15}});
    CHECK(v.at("x11") == doctest::Approx(K(19) * K(23) / (K(25) * K(30))).epsilon(1e-9));
    CHECK(v.at("x14") == doctest::Approx(K(19) / K(25)).epsilon(1e-9));
    CHECK(v.at("x12") == doctest::Approx(K(27) * x15 / K(26)).epsilon(1e-9));
    CHECK(v.at("x13") ==
          doctest::Approx(K(19) * (K(23) + K(25)) * K(26) / (K(22) * K(25) * K(27) * K(37) * x15)).epsilon(1e-9));
    CHECK(v.at("x16") == doctest::Approx(K(19) * K(26) * K(28) * (K(23) + K(25)) /
                                         (K(22) * K(25) * K(27) * K(29) * K(37) * x15))
                             .epsilon(1e-9));
    CHECK(v.at("x19") == doctest::Approx(K(34) * v.at("x18") / K(32)).epsilon(1e-9));
    CHECK(v.at("x20") == doctest::Approx(K(34) * v.at("x18") / (K(33) * K(38))).epsilon(1e-9));
    // The table writes x2 with its own name for the law k40 - k41.
    CHECK(v.at("x2") == doctest::Approx(K(1) * (K(40) - K(41)) / K(2)).epsilon(1e-9));
    std::map<std::string, double> all = v;
    all["x15"] = x15;
    CHECK(slaved_residual(r, all) < 1e-10);
    for (const auto& [name, val] : v) CHECK_MESSAGE(val > 0, name);
  }
}

TEST_CASE("Nested and simple variants share the slaved manifold") {
  const auto& m = tgfb_state().model;
  for (std::size_t l = 2; l <= 4; ++l) {
    CAPTURE(l);
    auto rs = reduce_at(m, l, ReduceVariant::Simple);
    auto rn = reduce_at(m, l, ReduceVariant::Nested);
    CHECK(rs.slaved == rn.slaved);
    CHECK(rs.driving == rn.driving);
    CHECK(rs.quenched == rn.quenched);
    CHECK(rs.driving_odes == rn.driving_odes);
    CHECK(rn.quenched_odes.size() == rn.quenched.size());
    CHECK(rn.quenched_delta_orders.size() == rn.quenched.size());
    for (const auto& d : rn.quenched_delta_orders) CHECK(d > 0);
    CHECK(rs.quenched_odes.empty());
    CHECK(rs.quenched_values.size() == rs.quenched.size());

    std::map<std::string, double> known;
    for (const auto& v : rs.driving) known[v] = m.system.initial.at(v);
    for (const auto& v : rs.quenched) known[v] = m.system.initial.at(v);
    auto a = eliminate_fast(rs, known);
    auto b = eliminate_fast(rn, known);
    for (const auto& v : rs.slaved) CHECK(a.at(v) == doctest::Approx(b.at(v)).epsilon(1e-10));
  }
}
