#include <doctest.h>

#include <cmath>

#include "qnet/dependent.hpp"
#include "qnet/verify.hpp"

using namespace qnet;

namespace {

TargetFunction third() { return piecewise_linear("third", {Rational(0), Rational(1)}, {Rational(0), ratio(1, 3)}); }

// Walks f~ forward at slope +-1 toward f+ with a fine step, interval by interval.
std::vector<double> simulate_ftilde(const TargetFunction& f, int t, int T, int steps_per_interval) {
  const auto v = ftilde_breakpoints(f, t, T);
  std::vector<double> out{to_double(v[0])};
  const double h = 1.0 / (static_cast<double>(T) * steps_per_interval);
  for (int i = 0; i < T; ++i) {
    const double end = static_cast<double>(i + 1) / T;
    const double offset = to_double(v[static_cast<std::size_t>(i + 1)]) - f(end);
    double y = to_double(v[static_cast<std::size_t>(i)]);
    for (int s = 1; s <= steps_per_interval; ++s) {
      const double x = static_cast<double>(i) / T + s * h;
      const double target = f(x) + offset;
      const double moved = y + (target > y ? h : -h);
      y = (target - y) * (target - moved) <= 0 ? target : moved;
      out.push_back(y);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dependent plan parameters") {
  const DependentPlan p = plan_dependent(ratio(1, 10), 2, QuantMode::Nonlinear, Strategy::Cached);
  CHECK(p.m == 2);
  CHECK(p.t == 1);
  CHECK(p.delta == ratio(1, 16));
  CHECK(p.T == 25);
  CHECK(p.T_interp == 10);
  CHECK(p.t_interp == 4);
  CHECK(p.intervals() == 25);
  CHECK(p.margin() <= p.delta);

  const DependentPlan q = plan_dependent(ratio(1, 20), 4, QuantMode::Linear, Strategy::InterpolationOnly);
  CHECK(q.m == 3);
  CHECK(q.t == 2);
  CHECK(q.delta == ratio(1, 24));
  CHECK(q.T == 38);
  CHECK(q.T_interp == 20);
  CHECK(q.t_interp == 5);
  CHECK(q.intervals() == 20);
  CHECK(q.grid_spacing() == ratio(1, 8 * 20 * 32));

  const DependentPlan coarse = plan_dependent(ratio(1, 2), 2, QuantMode::Nonlinear, Strategy::Cached);
  CHECK(coarse.m == 1);
  CHECK(coarse.t >= 1);

  CHECK(to_string(Strategy::Cached) == "cached");
  CHECK(parse_strategy("interpolation") == Strategy::InterpolationOnly);
  CHECK_THROWS(parse_strategy("spline"));
  CHECK_THROWS_AS(plan_dependent(Rational(0), 2, QuantMode::Nonlinear, Strategy::Cached),
                  std::invalid_argument);
  CHECK_THROWS_AS(plan_dependent(ratio(3, 2), 2, QuantMode::Nonlinear, Strategy::Cached),
                  std::invalid_argument);
  CHECK_THROWS_AS(plan_dependent(ratio(1, 4), 1, QuantMode::Nonlinear, Strategy::Cached),
                  std::invalid_argument);
}

TEST_CASE("breakpoints of the transformed function") {
  for (int i : {0, 1, 2, 3, 4}) CHECK(ftilde_breakpoints(make_function("zero", 1), 3, 4)[i] == 0);
  CHECK(ftilde_breakpoints(make_function("linear:x", 1), 2, 4)[1] == ratio(1, 4));
  const auto v = ftilde_breakpoints(third(), 1, 2);
  CHECK(v.size() == 3);
  CHECK(v[1] == ratio(1, 4));
  CHECK(v[2] == ratio(1, 2));
}

TEST_CASE("transformed function follows its defining dynamics") {
  SUBCASE("on-grid function is unchanged") {
    const TargetFunction f = make_function("linear:x", 1);
    for (int k = 0; k <= 64; ++k) {
      CHECK(ftilde_eval_exact(f, 2, 4, ratio(k, 64)) == ratio(k, 64));
      CHECK(ftilde_eval(f, 2, 4, k / 64.0) == doctest::Approx(k / 64.0).epsilon(1e-12));
    }
  }
  SUBCASE("x/3 with T = 2, t = 1") {
    const TargetFunction f = third();
    const int steps = 1 << 14;
    const auto sim = simulate_ftilde(f, 1, 2, steps);
    for (std::size_t j = 0; j < sim.size(); j += 97) {
      const double x = static_cast<double>(j) / (2.0 * steps);
      const double y = ftilde_eval(f, 1, 2, x);
      CHECK(std::fabs(y - sim[j]) <= 4.0 / (2.0 * steps));
      CHECK(std::fabs(y - f(x)) <= 0.25);
    }
  }
  SUBCASE("random functions") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TargetFunction f = random_piecewise_linear(seed);
      for (int T : {4, 16}) {
        for (int t : {2, 4}) {
          const auto v = ftilde_breakpoints(f, t, T);
          for (int i = 0; i <= T; ++i) {
            CHECK(ftilde_eval_exact(f, t, T, ratio(i, T)) == v[static_cast<std::size_t>(i)]);
            CHECK(std::fabs(ftilde_eval(f, t, T, static_cast<double>(i) / T) -
                            to_double(v[static_cast<std::size_t>(i)])) <= 1e-12);
          }
          const int steps = 2048;
          const auto sim = simulate_ftilde(f, t, T, steps);
          double worst = 0;
          for (std::size_t j = 0; j < sim.size(); j += 13) {
            const double x = static_cast<double>(j) / (static_cast<double>(T) * steps);
            worst = std::max(worst, std::fabs(ftilde_eval(f, t, T, x) - sim[j]));
          }
          CHECK(worst <= 4.0 / (static_cast<double>(T) * steps));
        }
      }
    }
  }
}

TEST_CASE("crossing detects a broken Lipschitz certificate") {
  // Slope 28/5 runs away from a slope-1 segment that starts below it.
  const TargetFunction steep = piecewise_linear("steep", {Rational(0), ratio(1, 8), Rational(1)},
                                                {ratio(1, 10), ratio(4, 5), ratio(4, 5)});
  CHECK_THROWS_AS(ftilde_crossing(steep, 1, 2, 0), std::domain_error);
}

TEST_CASE("dependent builds") {
  SUBCASE("zero function") {
    for (Strategy s : {Strategy::InterpolationOnly, Strategy::Cached}) {
      const DependentPlan p = plan_dependent(ratio(1, 10), 2, QuantMode::Nonlinear, s);
      const DependentBuild b = build_dependent(make_function("zero", 1), p);
      CHECK(validate(b.network).empty());
      for (int k = 0; k <= 50; ++k) CHECK(eval(b.network, ratio(k, 50)) == 0);
    }
  }
  SUBCASE("identity function") {
    const TargetFunction f = make_function("linear:x", 1);
    const DependentPlan p = plan_dependent(ratio(1, 10), 2, QuantMode::Nonlinear, Strategy::InterpolationOnly);
    const Certificate c = sup_error(build_dependent(f, p).network, f, p.grid_spacing(), 0.1);
    CHECK(c.pass);
    CHECK(c.measured_sup_error <= to_double(pow2(-p.t_interp) / p.T_interp) + 1e-12);
  }
  SUBCASE("random functions, both strategies and modes") {
    for (std::uint64_t seed : {1u, 2u}) {
      const TargetFunction f = random_piecewise_linear(seed);
      for (Strategy s : {Strategy::InterpolationOnly, Strategy::Cached}) {
        for (auto [lambda, mode] : {std::pair{2, QuantMode::Nonlinear}, std::pair{4, QuantMode::Linear}}) {
          for (const Rational& eps : {ratio(1, 5), ratio(1, 10)}) {
            CAPTURE(seed);
            CAPTURE(to_string(s));
            CAPTURE(lambda);
            const DependentPlan p = plan_dependent(eps, lambda, mode, s);
            const DependentBuild b = build_dependent(f, p);
            CHECK(validate(b.network).empty());
            CHECK(b.network.codebook.lambda() == lambda);
            const Certificate c = sup_error(b.network, f, p.grid_spacing(), to_double(eps));
            CHECK(c.pass);
            CHECK(static_cast<double>(complexity(b.network).weight_count) <= predicted_dependent_weights(p));
          }
        }
      }
    }
  }
  SUBCASE("errors") {
    const DependentPlan p = plan_dependent(ratio(1, 10), 2, QuantMode::Nonlinear, Strategy::Cached);
    CHECK_THROWS_AS(build_dependent(make_function("linear:x", 2), p), std::invalid_argument);
    CHECK_THROWS_AS(build_dependent(make_function("linear:x", 1), p, 10.0), ResourceCapExceeded);
  }
}
