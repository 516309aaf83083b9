#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "qnet/bounds.hpp"
#include "qnet/compose.hpp"
#include "qnet/dependent.hpp"
#include "qnet/gadgets.hpp"
#include "qnet/independent.hpp"
#include "qnet/network_json.hpp"
#include "qnet/verify.hpp"

namespace qnet {

namespace {

class Check {
 public:
  Check(std::string module, std::string name, double limit) {
    r_.module = std::move(module);
    r_.name = std::move(name);
    r_.limit = limit;
  }
  // Records one case whose checked quantity is `value` (<= limit passes).
  void value(double v) {
    ++r_.cases;
    r_.worst = std::max(r_.worst, v);
    if (!(v <= r_.limit)) ++r_.failures;
  }
  void ok(bool passed) { value(passed ? 0.0 : 1.0); }
  PropertyResult done() const { return r_; }

 private:
  PropertyResult r_;
};

double rel_gap(double a, double b) {
  return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

Rational random_dyadic(std::mt19937_64& rng, int bits, bool signed_range) {
  const long span = 1L << bits;
  std::uniform_int_distribution<long> pick(signed_range ? -span : 0, span);
  return Rational(pick(rng)) / Rational(span);
}

std::vector<Rational> random_point(std::mt19937_64& rng, const Network& net) {
  std::vector<Rational> x;
  const bool signed_range = net.domain.lo < 0;
  for (int k = 0; k < net.input_dim; ++k) x.push_back(random_dyadic(rng, 12, signed_range));
  return x;
}

std::vector<double> to_doubles(const std::vector<Rational>& x) {
  std::vector<double> out;
  for (const auto& v : x) out.push_back(to_double(v));
  return out;
}

std::vector<PropertyResult> core_properties(std::mt19937_64& rng, const SuiteSizes& sizes,
                                            const std::vector<Network>& nets) {
  Check exact_vs_float("qnet-core", "float evaluation matches exact", 1e-12);
  Check well_formed("qnet-core", "validate is empty for constructed networks", 0);
  Check round_trip("qnet-core", "json round trip evaluates identically", 0);
  Check pwl("qnet-core", "secant consistency inside linear pieces", 1e-12);
  for (const Network& net : nets) {
    well_formed.value(static_cast<double>(validate(net).size()));
    const Network back = from_json(to_json(net));
    round_trip.ok(back == net);
    for (int i = 0; i < sizes.random_points / 4; ++i) {
      auto x = random_point(rng, net);
      const Rational exact = eval(net, x);
      exact_vs_float.value(rel_gap(eval_f64(net, to_doubles(x)), to_double(exact)));
      round_trip.ok(eval(back, x) == exact);
    }
    // Three points a tiny dyadic step apart almost always share a linear piece.
    if (net.input_dim == 1) {
      for (int i = 0; i < sizes.random_points / 4; ++i) {
        Rational a = random_dyadic(rng, 10, net.domain.lo < 0);
        if (a >= net.domain.hi) a -= pow2(-9);
        const Rational h = pow2(-30);
        const Rational y0 = eval(net, a), y1 = eval(net, Rational(a + h)),
                       y2 = eval(net, Rational(a + 2 * h));
        pwl.value(std::fabs(to_double(Rational((y2 - y1) - (y1 - y0)) / h)));
      }
    }
  }

  Check additivity("qnet-core", "serial composition adds weights plus glue", 0);
  for (int r = 1; r <= 3; ++r) {
    const Network a = build_squaring(r);
    const Network b = build_squaring(r + 1);
    const Composed c = compose_serial(a, b, true);
    const auto total = complexity(c.network).weight_count;
    const auto parts = complexity(a).weight_count + complexity(b).weight_count + c.glue_weights;
    additivity.value(std::fabs(static_cast<double>(total - parts)));
  }
  return {exact_vs_float.done(), well_formed.done(), round_trip.done(), pwl.done(),
          additivity.done()};
}

std::vector<PropertyResult> gadget_properties(std::mt19937_64& rng, const SuiteSizes& sizes) {
  std::vector<PropertyResult> out;
  for (int r = 1; r <= sizes.max_r; ++r) {
    for (auto& p : squaring_properties(build_squaring(r), r)) out.push_back(std::move(p));
  }

  Check symmetry("gadgets", "multiplier is symmetric", 0);
  Check zero("gadgets", "multiplier vanishes on the axes", 0);
  for (int r = 1; r <= 3; ++r) {
    const Network m = build_multiplier(r);
    for (int i = 0; i < sizes.random_points / 4; ++i) {
      const Rational x = random_dyadic(rng, 6, true), y = random_dyadic(rng, 6, true);
      const std::vector<Rational> xy{x, y}, yx{y, x};
      symmetry.ok(eval(m, xy) == eval(m, yx));
      const std::vector<Rational> x0{x, Rational(0)}, x1{Rational(0), y};
      zero.ok(eval(m, x0) == 0 && eval(m, x1) == 0);
    }
  }

  Check linearity("gadgets", "weight gadget is odd and positively homogeneous", 0);
  Check counts("gadgets", "weight gadget within explicit counts (ratio)", 1);
  for (int lambda : {2, 3, 4}) {
    for (int t : {4, 9}) {
      const Rational w = random_dyadic(rng, t, true);
      const GadgetNetwork gn = build_weight_gadget_nonlinear(w, t, lambda);
      const int te = gn.info.effective_t;
      const double rho = gn.info.radix;
      const double depth_cap = lambda * (rho - 1) + 1;
      const double weight_cap = 4.0 * te * lambda * (rho - 1) + 8.0 * te + 4;
      counts.value(gn.info.cascade_depth / depth_cap);
      counts.value(static_cast<double>(complexity(gn.network).weight_count) / weight_cap);
      for (int i = 0; i < 8; ++i) {
        const Rational x = random_dyadic(rng, 5, true);
        const Rational a = random_dyadic(rng, 3, false);
        const std::vector<Rational> vx{x}, vnx{Rational(-x)}, vax{Rational(a * x)};
        const Rational y = eval(gn.network, vx);
        linearity.ok(eval(gn.network, vnx) == -y);
        if (abs(Rational(a * x)) <= 1) linearity.ok(eval(gn.network, vax) == a * y);
        linearity.ok(y == gn.info.realized * x);
      }
    }
  }

  Check trapezoid("gadgets", "h-block matches the trapezoid", 0);
  for (int N : {2, 4, 7}) {
    for (int m = 0; m <= N; ++m) {
      const Network h = build_h_block(N, m);
      for (int i = 0; i <= 6 * N; ++i) {
        const Rational x = ratio(i, 6 * N);
        trapezoid.ok(eval(h, x) == trapezoid_value(Rational(3 * N * x - 3 * m)));
      }
    }
  }
  out.push_back(symmetry.done());
  out.push_back(zero.done());
  out.push_back(linearity.done());
  out.push_back(counts.done());
  out.push_back(trapezoid.done());
  return out;
}

std::vector<PropertyResult> independent_properties(std::mt19937_64& rng, const SuiteSizes& sizes) {
  Check unity("synth-independent", "bumps form a partition of unity", 1e-9);
  Check support("synth-independent", "bumps vanish outside their support", 0);
  Check active("synth-independent", "at most 2^d bumps active", 0);
  for (int N : {3, 5, 12}) {
    std::vector<Network> blocks;
    for (int m = 0; m <= N; ++m) blocks.push_back(build_h_block(N, m));
    for (int i = 0; i < sizes.random_points; ++i) {
      const std::vector<double> x{to_double(random_dyadic(rng, 12, false)),
                                  to_double(random_dyadic(rng, 12, false))};
      double sum = 0;
      int count = 0;
      for (int m0 = 0; m0 <= N; ++m0) {
        const double h0 = eval_f64(blocks[static_cast<std::size_t>(m0)], x[0]);
        for (int m1 = 0; m1 <= N; ++m1) {
          const double h1 = eval_f64(blocks[static_cast<std::size_t>(m1)], x[1]);
          const double psi = h0 * h1;
          sum += psi;
          if (psi != 0) ++count;
          const bool outside = std::fabs(x[0] - static_cast<double>(m0) / N) >= 2.0 / (3 * N) ||
                               std::fabs(x[1] - static_cast<double>(m1) / N) >= 2.0 / (3 * N);
          if (outside) support.value(std::fabs(psi));
        }
      }
      unity.value(std::fabs(sum - 1));
      active.ok(count <= 4);
    }
  }

  Check block("synth-independent", "block error within its bound (ratio)", 1);
  const IndependentPlan plan = plan_independent(1, 2, Rational(1, 4), 2, QuantMode::Nonlinear);
  for (int m : {0, plan.N / 2, plan.N}) {
    for (const MultiIndex& alpha : multi_indices(1, plan.n - 1)) {
      const std::vector<int> mv{m};
      const Network net = build_block_network(plan, mv, alpha);
      const double bound = to_double(block_error_bound(plan, alpha));
      for (int i = 0; i < sizes.random_points / 4; ++i) {
        const std::vector<Rational> x{random_dyadic(rng, 10, false)};
        block.value(std::fabs(to_double(Rational(eval(net, x) - block_target(plan, mv, alpha, x)))) /
                    bound);
      }
    }
  }

  Check end_to_end("synth-independent", "certified error within budget (ratio)", 1);
  for (const char* spec : {"poly:x2_half", "abs_shift"}) {
    const TargetFunction f = make_function(spec, 1);
    const IndependentPlan p = plan_independent(1, std::min(f.max_order, 2), Rational(1, 2), 2, QuantMode::Nonlinear);
    const IndependentBuild b = build_independent(f, p);
    const Certificate c = sup_error(b.network, f, Rational(1, 8 * p.N * 4), 0.5);
    end_to_end.value(c.certified_sup_error / to_double(error_budget(p).total));
  }
  return {unity.done(), support.done(), active.done(), block.done(), end_to_end.done()};
}

std::vector<PropertyResult> dependent_properties(const SuiteSizes& sizes, std::uint64_t seed) {
  Check formula("synth-dependent", "breakpoints are the rounded-up grid values", 0);
  Check lipschitz("synth-dependent", "transformed function is 1-Lipschitz (ratio)", 1 + 1e-9);
  Check closeness("synth-dependent", "transformed function stays close (ratio)", 1);
  Check above("synth-dependent", "breakpoints lie on or above f", 0);
  for (int k = 0; k < sizes.random_functions; ++k) {
    const TargetFunction f = random_piecewise_linear(seed + static_cast<std::uint64_t>(k));
    for (int T : {4, 16}) {
      for (int t : {2, 4}) {
        const auto v = ftilde_breakpoints(f, t, T);
        const Rational step = pow2(-t) / T;
        for (int i = 0; i <= T; ++i) {
          const Rational fx = f.exact_at(ratio(i, T));
          const Rational expected = Rational(ceil_div(fx / step)) * step;
          formula.ok(v[static_cast<std::size_t>(i)] == expected);
          above.ok(v[static_cast<std::size_t>(i)] >= fx);
          formula.ok(ftilde_eval_exact(f, t, T, ratio(i, T)) == expected);
        }
        const int samples = 64 * T;
        double prev = ftilde_eval(f, t, T, 0.0);
        for (int j = 1; j <= samples; ++j) {
          const double x = static_cast<double>(j) / samples;
          const double y = ftilde_eval(f, t, T, x);
          lipschitz.value(std::fabs(y - prev) * samples);
          closeness.value(std::fabs(y - f(x)) / to_double(step));
          prev = y;
        }
      }
    }
  }

  Check end_to_end("synth-dependent", "certified error within epsilon (ratio)", 1);
  for (int k = 0; k < std::min(sizes.random_functions, 3); ++k) {
    const TargetFunction f = random_piecewise_linear(seed + static_cast<std::uint64_t>(k));
    for (Strategy s : {Strategy::InterpolationOnly, Strategy::Cached}) {
      const DependentPlan p = plan_dependent(Rational(1, 5), 2, QuantMode::Nonlinear, s);
      const DependentBuild b = build_dependent(f, p);
      const Certificate c = sup_error(b.network, f, p.grid_spacing(), 0.2);
      end_to_end.value(c.certified_sup_error / 0.2);
    }
  }
  return {formula.done(), lipschitz.done(), closeness.done(), above.done(), end_to_end.done()};
}

std::vector<PropertyResult> bounds_properties(std::mt19937_64& rng, const SuiteSizes& sizes) {
  Check increasing("bounds", "scaled derivative increases in lambda", 0);
  Check minimal("bounds", "lambda_opt minimizes the bound (relative excess)", 1e-9);
  Check scale("bounds", "lambda_opt independent of theta1 (relative)", 1e-9);
  std::uniform_real_distribution<double> log_d(0, std::log(1e6));
  std::uniform_real_distribution<double> eps(0.001, 0.49);
  const int models = std::max(4, sizes.random_functions);
  for (int i = 0; i < models; ++i) {
    BoundModel model{std::exp(log_d(rng)), static_cast<double>(1 << (i % 3)), eps(rng), 1.0};
    double prev = ms(2.0, model);
    for (double lam = 2.0 * 1.1; lam <= 1 << 20; lam *= 1.1) {
      const double cur = ms(lam, model);
      increasing.ok(cur > prev);
      prev = cur;
    }
    const double opt = lambda_opt(model);
    const double best = memory_bound(opt, model);
    for (int j = 0; j <= 400; ++j) {
      const double lam = 2 + (10 * opt - 2) * j / 400.0;
      minimal.value((best - memory_bound(lam, model)) / best);
    }
    for (double theta1 : {0.1, 10.0}) {
      BoundModel scaled = model;
      scaled.theta1 = theta1;
      scale.value(std::fabs(lambda_opt(scaled) - opt) / opt);
    }
  }
  return {increasing.done(), minimal.done(), scale.done()};
}

std::vector<PropertyResult> verify_properties(std::mt19937_64& rng, const SuiteSizes& sizes) {
  Check oracle("verify", "reference interpolant matches exact targets", 0);
  Check audit("verify", "float and exact agree at the certified argmax", 1e-12);
  for (int k = 0; k < sizes.random_functions; ++k) {
    const TargetFunction f = random_piecewise_linear(rng());
    std::vector<std::pair<Rational, Rational>> bp;
    std::vector<Rational> xs{Rational(0)};
    for (const auto& x : f.kinks) {
      if (x > 0 && x < 1) xs.push_back(x);
    }
    xs.emplace_back(1);
    for (const auto& x : xs) bp.emplace_back(x, f.exact_at(x));
    const auto interp = reference_interp_oracle(bp);
    for (int i = 0; i < sizes.random_points / 4; ++i) {
      const Rational x = random_dyadic(rng, 14, false);
      oracle.ok(interp(x) == f.exact_at(x));
    }
    const DependentPlan p =
        plan_dependent(Rational(1, 4), 2, QuantMode::Nonlinear, Strategy::InterpolationOnly);
    const Certificate c = sup_error(build_dependent(f, p).network, f, p.grid_spacing(), 0.25);
    audit.value(std::max(0.0, c.audit_gap));
  }
  return {oracle.done(), audit.done()};
}

}  // namespace

bool SuiteReport::all_passed() const {
  return mutation_detected &&
         std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed(); });
}

std::vector<PropertyResult> squaring_properties(const Network& net, int r) {
  const std::string suffix = " (r=" + std::to_string(r) + ")";
  Check exact("gadgets", "squaring exact at breakpoints" + suffix, 0);
  Check saturation("gadgets", "squaring midpoint error saturates" + suffix, 0);
  Check monotone("gadgets", "squaring nondecreasing" + suffix, 0);
  const long k_max = 1L << r;
  const Rational bound = pow2(-2 * (r + 1));
  Rational prev = eval(net, Rational(0));
  for (long k = 0; k <= k_max; ++k) {
    const Rational x = ratio(k, k_max);
    const Rational y = eval(net, x);
    exact.ok(y == x * x);
    if (k > 0) {
      const Rational mid = ratio(2 * k - 1, 2 * k_max);
      const Rational ym = eval(net, mid);
      saturation.ok(ym - mid * mid == bound);
      monotone.ok(ym >= prev && y >= ym);
    }
    prev = y;
  }
  return {exact.done(), saturation.done(), monotone.done()};
}

SuiteReport run_property_suite(std::uint64_t seed, const SuiteSizes& sizes) {
  SuiteReport report;
  report.seed = seed;
  std::mt19937_64 rng(seed);
  auto take = [&](std::vector<PropertyResult> ps) {
    for (auto& p : ps) report.properties.push_back(std::move(p));
  };

  std::vector<Network> nets{build_g(), build_squaring(2), build_squaring_naive(2), build_abs(),
                            build_multiplier(2), build_h_block(4, 2),
                            build_weight_gadget_nonlinear(Rational(5, 16), 4, 2).network,
                            build_weight_gadget_linear(Rational(-3, 8), 4, 4).network};
  take(core_properties(rng, sizes, nets));
  take(gadget_properties(rng, sizes));
  take(independent_properties(rng, sizes));
  take(dependent_properties(sizes, seed));
  take(bounds_properties(rng, sizes));
  take(verify_properties(rng, sizes));

  const int r = std::min(3, sizes.max_r);
  for (const auto& p : squaring_properties(flip_one_weight(build_squaring(r)), r)) {
    if (!p.passed()) report.mutation_detected = true;
  }
  return report;
}

nlohmann::json suite_to_json(const SuiteReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = report.seed;
  j["mutation_detected"] = report.mutation_detected;
  j["all_passed"] = report.all_passed();
  auto& list = j["properties"] = nlohmann::json::array();
  for (const auto& p : report.properties) {
    list.push_back({{"module", p.module},
                    {"name", p.name},
                    {"cases", p.cases},
                    {"failures", p.failures},
                    {"worst", p.worst},
                    {"limit", p.limit},
                    {"slack", p.slack()},
                    {"passed", p.passed()}});
  }
  return j;
}

std::string suite_to_table(const SuiteReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(19) << "module" << std::setw(58) << "property" << std::right
     << std::setw(8) << "cases" << std::setw(9) << "failures" << std::setw(14) << "slack"
     << "  result\n";
  for (const auto& p : report.properties) {
    os << std::left << std::setw(19) << p.module << std::setw(58) << p.name << std::right
       << std::setw(8) << p.cases << std::setw(9) << p.failures << std::setw(14)
       << std::setprecision(4) << std::scientific << p.slack() << std::defaultfloat << "  "
       << (p.passed() ? "PASS" : "FAIL") << "\n";
  }
  os << "mutation test: " << (report.mutation_detected ? "caught" : "MISSED") << "\n";
  os << "overall: " << (report.all_passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace qnet
