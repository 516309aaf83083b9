#include <doctest.h>

#include <cmath>

#include "qnet/gadgets.hpp"
#include "qnet/independent.hpp"
#include "qnet/verify.hpp"

using namespace qnet;

namespace {

TargetFunction square() {
  TargetFunction f;
  f.name = "square";
  f.eval = [](std::span<const double> x) { return x[0] * x[0]; };
  f.exact = [](std::span<const Rational> x) { return Rational(x[0] * x[0]); };
  return f;
}

}  // namespace

TEST_CASE("sup error on the squaring network") {
  const Network sq = build_squaring(3);
  SupErrorOptions opts;
  opts.function_lipschitz = 2;
  const Certificate c = sup_error(sq, square(), ratio(1, 64), 0.01, opts);
  // Midpoints of the 1/8 grid are on the 1/64 grid, where the chord is 2^-8 above x^2.
  CHECK(c.measured_sup_error == doctest::Approx(std::ldexp(1.0, -8)).epsilon(1e-9));
  CHECK(c.points == 65);
  CHECK(c.audit_gap >= 0);
  CHECK(c.audit_gap <= 1e-12);
  CHECK(c.certified_sup_error == doctest::Approx(c.measured_sup_error + 2.0 / 64 * c.slope_bound));
  CHECK(c.slope_bound <= 2 + 2 + 1e-9);
  CHECK(c.pass == (c.certified_sup_error <= 0.01));

  const Certificate tight = sup_error(sq, square(), ratio(1, 64), 1e-3, opts);
  CHECK_FALSE(tight.pass);

  const nlohmann::json j = certificate_to_json(c);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.contains("measured_sup_error"));
  CHECK(j.contains("certified_sup_error"));
  CHECK(j.at("pass").get<bool>() == c.pass);
}

TEST_CASE("exact interpolation of a linear target measures zero") {
  const TargetFunction f = make_function("linear:x", 1);
  const Network net = build_weight_gadget_nonlinear(Rational(1), 4, 2).network;
  SupErrorOptions opts;
  opts.network_lipschitz = 1;
  const Certificate c = sup_error(net, f, ratio(1, 256), 0.1, opts);
  CHECK(c.measured_sup_error == 0);
  CHECK(c.slope_bound == 2);
  CHECK(c.pass);
}

TEST_CASE("grid size cap") {
  SupErrorOptions opts;
  opts.max_points = 100;
  CHECK_THROWS_AS(sup_error(build_squaring(2), square(), ratio(1, 1024), 0.1, opts), ResourceCapExceeded);
  CHECK_THROWS(sup_error(build_squaring(2), square(), Rational(0), 0.1));
}

TEST_CASE("reference interpolation oracle") {
  const auto o = reference_interp_oracle({{Rational(0), Rational(0)},
                                          {ratio(1, 2), ratio(1, 4)},
                                          {Rational(1), Rational(1)}});
  CHECK(o(ratio(1, 4)) == ratio(1, 8));
  CHECK(o(ratio(1, 2)) == ratio(1, 4));
  CHECK(o(Rational(1)) == 1);
  CHECK(o(ratio(3, 4)) == ratio(5, 8));

  for (int r = 1; r <= 6; ++r) {
    const long k_max = 1L << r;
    std::vector<std::pair<Rational, Rational>> bp;
    for (long k = 0; k <= k_max; ++k) bp.emplace_back(ratio(k, k_max), ratio(k * k, k_max * k_max));
    const auto chord = reference_interp_oracle(bp);
    const Network sq = build_squaring(r);
    for (int i = 0; i <= 4096; i += 7) CHECK(chord(ratio(i, 4096)) == eval(sq, ratio(i, 4096)));
  }

  CHECK_THROWS_AS(reference_interp_oracle({{Rational(1), Rational(0)}, {Rational(0), Rational(0)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_interp_oracle({{Rational(0), Rational(0)}, {Rational(0), Rational(1)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(reference_interp_oracle({}), std::invalid_argument);
}

TEST_CASE("weight flip is caught") {
  const Network sq = build_squaring(3);
  for (const auto& p : squaring_properties(sq, 3)) CHECK(p.passed());
  const Network bad = flip_one_weight(sq);
  CHECK_FALSE(bad == sq);
  CHECK(validate(bad).empty());
  bool caught = false;
  for (const auto& p : squaring_properties(bad, 3)) caught = caught || !p.passed();
  CHECK(caught);
}

TEST_CASE("property suite") {
  const SuiteReport a = run_property_suite(7, SuiteSizes{40, 3, 3});
  CHECK(a.mutation_detected);
  for (const auto& p : a.properties) {
    CAPTURE(p.module);
    CAPTURE(p.name);
    CHECK(p.passed());
    CHECK(p.cases > 0);
  }
  CHECK(a.all_passed());

  const SuiteReport b = run_property_suite(7, SuiteSizes{40, 3, 3});
  CHECK(suite_to_json(a).dump() == suite_to_json(b).dump());
  const std::string table = suite_to_table(a);
  CHECK(table.find("overall: PASS") != std::string::npos);

  for (const char* module : {"qnet-core", "gadgets", "synth-independent", "synth-dependent", "bounds", "verify"}) {
    bool seen = false;
    for (const auto& p : a.properties) seen = seen || p.module == module;
    CHECK_MESSAGE(seen, module);
  }
}
