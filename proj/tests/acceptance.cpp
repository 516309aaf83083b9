// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qnet/bounds.hpp"
#include "qnet/dependent.hpp"
#include "qnet/gadgets.hpp"
#include "qnet/independent.hpp"
#include "qnet/network_json.hpp"
#include "qnet/verify.hpp"

using namespace qnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Every network built below passes through here for the infrastructure criterion.
struct Registry {
  std::int64_t networks = 0;
  std::int64_t invalid = 0;
  std::vector<Network> samples;  // a few networks kept for JSON round trips
  void track(const Network& net, bool keep = false) {
    ++networks;
    if (!validate(net).empty()) ++invalid;
    if (keep) samples.push_back(net);
  }
};

Registry registry;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome squaring_exactness() {
  const auto start = Clock::now();
  Outcome out;
  double worst_ratio = 0;
  for (int r = 1; r <= 8; ++r) {
    const Network sq = build_squaring(r);
    registry.track(sq, r == 4);
    const long k_max = 1L << r;
    for (long k = 0; k <= k_max; ++k) {
      const Rational x = ratio(k, k_max);
      if (eval(sq, x) != x * x) out.pass = false;
    }
    const Rational bound = pow2(-2 * (r + 1));
    for (long k = 0; k < k_max; ++k) {
      const Rational mid = ratio(2 * k + 1, 2 * k_max);
      if (eval(sq, mid) - mid * mid != bound) out.pass = false;
    }
    Rational worst = 0;
    const long grid = 1L << 13;
    for (long k = 0; k <= grid; ++k) {
      const Rational x = ratio(k, grid);
      const Rational e = abs(Rational(eval(sq, x) - x * x));
      if (e > worst) worst = e;
    }
    if (worst > bound) out.pass = false;
    worst_ratio = std::max(worst_ratio, to_double(worst / bound));
  }
  const double secs = seconds_since(start);
  if (secs >= 10) out.pass = false;
  out.detail = "max error/bound=" + fmt(worst_ratio) + " time=" + fmt(secs) + "s";
  return out;
}

Outcome multiplier_accuracy() {
  const auto start = Clock::now();
  Outcome out;
  double worst_ratio = 0;
  for (int r : {2, 4, 6}) {
    const Network m = build_multiplier(r);
    registry.track(m, r == 2);
    const CompiledNetwork c(m);
    std::vector<double> pts;
    for (int i = 0; i <= 128; ++i) {
      for (int j = 0; j <= 128; ++j) {
        pts.push_back(-1 + i / 64.0);
        pts.push_back(-1 + j / 64.0);
      }
    }
    std::vector<double> y(pts.size() / 2);
    c.eval_batch(pts, y);
    const double bound = 6 * std::ldexp(1.0, -2 * (r + 1));
    double worst = 0;
    for (std::size_t p = 0; p < y.size(); ++p) {
      worst = std::max(worst, std::fabs(y[p] - pts[2 * p] * pts[2 * p + 1]));
    }
    if (worst > bound) out.pass = false;
    worst_ratio = std::max(worst_ratio, worst / bound);
    for (int i = 0; i <= 128; ++i) {
      const Rational v = ratio(i - 64, 64);
      const std::vector<Rational> a{v, Rational(0)}, b{Rational(0), v};
      if (eval(m, a) != 0 || eval(m, b) != 0) out.pass = false;
    }
  }
  const double secs = seconds_since(start);
  if (secs >= 30) out.pass = false;
  out.detail = "max error/bound=" + fmt(worst_ratio) + " time=" + fmt(secs) + "s";
  return out;
}

std::vector<Rational> gadget_test_points() {
  std::vector<Rational> xs;
  for (int k = -16; k <= 16; ++k) xs.push_back(ratio(k, 16));
  return xs;
}

// Checks w' x on the 33 test points. The compiled float path sees only dyadic
// values with few significant bits, so its comparison is exact; the rational
// path is run as well when `exact_too` is set.
bool gadget_realizes(const GadgetNetwork& g, const Rational& w, bool exact_too) {
  if (g.info.realized != w) return false;
  const CompiledNetwork c(g.network);
  const auto xs = gadget_test_points();
  std::vector<double> in, y(xs.size());
  for (const auto& x : xs) in.push_back(to_double(x));
  c.eval_batch(in, y);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (y[i] != to_double(w * xs[i])) return false;
  }
  if (exact_too) {
    for (const auto& x : xs) {
      if (eval(g.network, x) != w * x) return false;
    }
  }
  return true;
}

Outcome nonlinear_gadget() {
  Outcome out;
  std::int64_t weights_checked = 0;
  double worst_depth = 0, worst_count = 0;
  std::mt19937_64 rng(3);
  for (int lambda : {2, 3, 4}) {
    for (int t : {4, 9, 16}) {
      const int effective = build_weight_gadget_nonlinear(Rational(0), t, lambda).info.effective_t;
      auto check = [&](const Rational& w, bool exact_too) {
        const GadgetNetwork g = build_weight_gadget_nonlinear(w, t, lambda);
        registry.track(g.network);
        ++weights_checked;
        const double rho = g.info.radix;
        const double depth_cap = lambda * (rho - 1) + 1;
        const double count_cap = 4.0 * g.info.effective_t * lambda * (rho - 1) + 8.0 * g.info.effective_t + 4;
        worst_depth = std::max(worst_depth, g.info.cascade_depth / depth_cap);
        worst_count = std::max(worst_count, complexity(g.network).weight_count / count_cap);
        if (!gadget_realizes(g, w, exact_too)) out.pass = false;
      };
      // Every multiple of 2^-t, rational path on a stride.
      const long steps = 1L << t;
      const long stride = t <= 9 ? 1 : 97;
      for (long k = -steps; k <= steps; ++k) check(ratio(k, steps), k % stride == 0);
      if (effective > t) {
        // Finer effective resolutions: every single-digit weight plus a sample.
        const long fine = 1L << effective;
        for (int b = 1; b <= effective; ++b) {
          check(pow2(-b), true);
          check(Rational(-pow2(-b)), true);
        }
        std::uniform_int_distribution<long> pick(-fine, fine);
        for (int i = 0; i < 200; ++i) check(ratio(pick(rng), fine), i % 10 == 0);
      }
    }
  }
  if (worst_depth > 1 || worst_count > 1) out.pass = false;
  out.detail = "weights=" + std::to_string(weights_checked) + " depth/cap=" + fmt(worst_depth) +
               " count/cap=" + fmt(worst_count);
  return out;
}

Outcome linear_gadget() {
  Outcome out;
  std::int64_t weights_checked = 0;
  double worst_depth = 0;
  for (int lambda : {2, 4, 16}) {
    const int log_lambda = static_cast<int>(std::lround(std::log2(lambda)));
    for (int t : {4, 8, 12}) {
      const long steps = 1L << t;
      const long stride = t <= 8 ? 1 : 61;
      const int depth_cap = (t + log_lambda - 1) / log_lambda + 1;
      for (long k = -steps; k <= steps; ++k) {
        const Rational w = ratio(k, steps);
        const GadgetNetwork g = build_weight_gadget_linear(w, t, lambda);
        registry.track(g.network);
        ++weights_checked;
        if (!gadget_realizes(g, w, k % stride == 0)) out.pass = false;
        if (g.info.cascade_depth > depth_cap) out.pass = false;
        worst_depth = std::max(worst_depth, static_cast<double>(g.info.cascade_depth) / depth_cap);
      }
    }
  }
  out.detail = "weights=" + std::to_string(weights_checked) + " depth/cap=" + fmt(worst_depth);
  return out;
}

// Sum over the grid of products of standalone h-block outputs.
double partition_sum(const std::vector<std::vector<double>>& h_by_axis, int d, int N) {
  double sum = 0;
  for (const auto& m : grid_points(d, N)) {
    double prod = 1;
    for (int k = 0; k < d; ++k) prod *= h_by_axis[static_cast<std::size_t>(k)][static_cast<std::size_t>(m[k])];
    sum += prod;
  }
  return sum;
}

Outcome independent_end_to_end() {
  Outcome out;
  struct Case {
    const char* f;
    int d, n;
  };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0, 1);
  std::uniform_int_distribution<long> dyadic(0, 1L << 12);
  double worst_cert = 0, worst_pou = 0, worst_block = 0, slowest = 0;
  for (const Case& c : {Case{"poly:x2_half", 1, 2}, Case{"poly:xy_half", 2, 2}, Case{"abs_shift", 1, 1}}) {
    const TargetFunction f = make_function(c.f, c.d);
    for (const Rational& eps : {ratio(1, 2), ratio(1, 4), ratio(1, 10)}) {
      const auto start = Clock::now();
      const IndependentPlan plan = plan_independent(c.d, c.n, eps, 2, QuantMode::Nonlinear);
      const IndependentBuild b = build_independent(f, plan);
      registry.track(b.network, c.d == 1 && eps == ratio(1, 2));
      const Rational spacing = c.d == 1 ? ratio(1, 4096) : ratio(1, 128);
      const Certificate cert = sup_error(b.network, f, spacing, to_double(eps));
      const double secs = seconds_since(start);
      slowest = std::max(slowest, secs);
      if (!cert.pass || secs >= 300) out.pass = false;
      worst_cert = std::max(worst_cert, cert.certified_sup_error / to_double(eps));

      std::vector<Network> blocks;
      for (int m = 0; m <= plan.N; ++m) blocks.push_back(build_h_block(plan.N, m));
      for (int p = 0; p < 1000; ++p) {
        std::vector<std::vector<double>> h(static_cast<std::size_t>(c.d));
        for (int k = 0; k < c.d; ++k) {
          const double x = unit(rng);
          for (const Network& blk : blocks) h[static_cast<std::size_t>(k)].push_back(eval_f64(blk, x));
        }
        const double err = std::fabs(partition_sum(h, c.d, plan.N) - 1);
        worst_pou = std::max(worst_pou, err);
        if (err > 1e-9) out.pass = false;
      }

      const Rational block_bound = (c.d + c.n) * 6 * pow2(-2 * (plan.r + 1));
      std::vector<std::vector<int>> centres{std::vector<int>(static_cast<std::size_t>(c.d), 0),
                                            std::vector<int>(static_cast<std::size_t>(c.d), plan.N),
                                            std::vector<int>(static_cast<std::size_t>(c.d), plan.N / 2)};
      for (const auto& m : centres) {
        for (const MultiIndex& alpha : multi_indices(c.d, c.n - 1)) {
          const Network block = build_block_network(plan, m, alpha);
          registry.track(block);
          for (int p = 0; p < 40; ++p) {
            std::vector<Rational> x;
            for (int k = 0; k < c.d; ++k) {
              // Half the points land on the block's support.
              const Rational base = ratio(m[static_cast<std::size_t>(k)], plan.N);
              Rational v = p % 2 == 0 ? ratio(dyadic(rng), 1L << 12)
                                      : base + ratio(dyadic(rng) - (1L << 11), (1L << 11) * plan.N);
              if (v < 0) v = 0;
              if (v > 1) v = 1;
              x.push_back(v);
            }
            const Rational e = abs(Rational(eval(block, x) - block_target(plan, m, alpha, x)));
            worst_block = std::max(worst_block, to_double(e / block_bound));
            if (e > block_bound) out.pass = false;
          }
        }
      }
    }
  }
  out.detail = "certified/eps=" + fmt(worst_cert) + " partition=" + fmt(worst_pou) +
               " block/bound=" + fmt(worst_block) + " slowest=" + fmt(slowest) + "s";
  return out;
}

Outcome ftilde_suite() {
  Outcome out;
  std::int64_t failures = 0, checks = 0;
  double worst_lip = 0, worst_close = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const TargetFunction f = random_piecewise_linear(seed);
    for (int T : {4, 16}) {
      for (int t : {2, 4}) {
        const Rational step = pow2(-t) / T;
        const auto v = ftilde_breakpoints(f, t, T);
        for (int i = 0; i <= T; ++i) {
          const Rational fx = f.exact_at(ratio(i, T));
          const Rational expected = Rational(ceil_div(fx / step)) * step;
          ++checks;
          if (v[static_cast<std::size_t>(i)] != expected) ++failures;
          if (v[static_cast<std::size_t>(i)] < fx) ++failures;
        }
        const int samples = 256 * T;
        double prev = ftilde_eval(f, t, T, 0.0);
        for (int j = 1; j <= samples; ++j) {
          const double x = static_cast<double>(j) / samples;
          const double y = ftilde_eval(f, t, T, x);
          const double lip = std::fabs(y - prev) * samples;
          const double close = std::fabs(y - f(x)) / to_double(step);
          worst_lip = std::max(worst_lip, lip);
          worst_close = std::max(worst_close, close);
          ++checks;
          if (lip > 1 + 1e-9 || close > 1 + 1e-12) ++failures;
          prev = y;
        }
      }
    }
  }
  out.pass = failures == 0;
  out.detail = "checks=" + std::to_string(checks) + " failures=" + std::to_string(failures) +
               " lipschitz=" + fmt(worst_lip) + " closeness/step=" + fmt(worst_close);
  return out;
}

Outcome dependent_end_to_end() {
  Outcome out;
  double worst_cert = 0, worst_single = 0, worst_total = 0;
  int builds = 0;
  const std::vector<Rational> eps_list{ratio(1, 5), ratio(1, 10), ratio(1, 20)};
  for (Strategy s : {Strategy::InterpolationOnly, Strategy::Cached}) {
    for (auto [lambda, mode] : {std::pair{2, QuantMode::Nonlinear}, std::pair{4, QuantMode::Linear}}) {
      // Summed over the functions: single counts move with how many binary
      // digits each breakpoint value happens to need.
      std::vector<double> total(eps_list.size(), 0);
      for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const TargetFunction f = random_piecewise_linear(seed);
        for (std::size_t e = 0; e < eps_list.size(); ++e) {
          const Rational& eps = eps_list[e];
          const DependentPlan plan = plan_dependent(eps, lambda, mode, s);
          const DependentBuild b = build_dependent(f, plan);
          registry.track(b.network, seed == 1 && e == 0);
          ++builds;
          const Certificate cert = sup_error(b.network, f, ratio(1, 4096), to_double(eps));
          if (!cert.pass) out.pass = false;
          worst_cert = std::max(worst_cert, cert.certified_sup_error / to_double(eps));
          const double weights = static_cast<double>(complexity(b.network).weight_count);
          if (s == Strategy::InterpolationOnly && e > 0) {
            const double prev = static_cast<double>(
                complexity(build_dependent(f, plan_dependent(eps_list[e - 1], lambda, mode, s)).network)
                    .weight_count);
            worst_single = std::max(worst_single, weights / prev);
          }
          total[e] += weights;
        }
      }
      if (s == Strategy::InterpolationOnly) {
        for (std::size_t e = 1; e < total.size(); ++e) {
          worst_total = std::max(worst_total, total[e] / total[e - 1]);
          if (total[e] / total[e - 1] > 2.5) out.pass = false;
        }
      }
    }
  }
  out.detail = "builds=" + std::to_string(builds) + " certified/eps=" + fmt(worst_cert) +
               " weight ratio per halving=" + fmt(worst_total) + " (single function max " + fmt(worst_single) + ")";
  return out;
}

// Restated memory model, used only for the finite-difference sign.
double memory_oracle(double lambda, const BoundModel& m) {
  const double theta2 = std::log2(3 * m.n) + m.d - std::log2(m.epsilon);
  return m.theta1 * lambda * std::log2(lambda) * std::pow(theta2, 1 / (lambda - 1) + 1);
}

Outcome bounds_models() {
  Outcome out;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> log_d(0, std::log(1e6));
  std::uniform_real_distribution<double> eps(1e-4, 0.4999);
  const double ns[] = {1, 2, 4};
  int bad_models = 0;
  std::int64_t sign_checks = 0;
  for (int i = 0; i < 100; ++i) {
    const BoundModel m{std::exp(log_d(rng)), ns[i % 3], eps(rng), 1};
    bool ok = ms(2, m) < 0;
    int changes = 0;
    double prev = ms(2, m);
    double scan_min = memory_bound(2, m);
    for (double lambda = 2 * 1.05; lambda <= std::ldexp(1.0, 40); lambda *= 1.05) {
      const double cur = ms(lambda, m);
      if (!(cur > prev)) ok = false;
      if ((cur > 0) != (prev > 0)) ++changes;
      prev = cur;
      scan_min = std::min(scan_min, memory_bound(lambda, m));
      if (std::fabs(cur) >= 1e-9) {
        const double h = lambda * 1e-6;
        const double fd = memory_oracle(lambda + h, m) - memory_oracle(lambda - h, m);
        ++sign_checks;
        if ((fd > 0) != (cur > 0)) ok = false;
      }
    }
    if (changes != 1) ok = false;
    if (memory_bound(lambda_opt(m), m) > scan_min * (1 + 1e-12)) ok = false;
    if (!ok) ++bad_models;
  }
  out.pass = bad_models == 0;
  out.detail = "models=100 failing=" + std::to_string(bad_models) + " sign checks=" + std::to_string(sign_checks);
  return out;
}

Outcome bitwidth_trends() {
  Outcome out;
  const double ds[] = {784, 3072, 150528};
  std::ostringstream detail;
  double prev_01 = 0, prev_001 = 0;
  for (double d : ds) {
    const double b1 = bitwidth_opt(BoundModel{d, 1, 0.1, 1});
    const double b2 = bitwidth_opt(BoundModel{d, 1, 0.01, 1});
    for (double b : {b1, b2}) {
      if (b < 1 || b > 4) out.pass = false;
    }
    if (b1 < prev_01 || b2 < prev_001) out.pass = false;
    if (std::fabs(b1 - b2) >= 0.5) out.pass = false;
    prev_01 = b1;
    prev_001 = b2;
    detail << "d=" << d << ":" << fmt(b1) << "/" << fmt(b2) << " ";
  }
  out.detail = detail.str();
  return out;
}

Outcome overhead_trend() {
  Outcome out;
  double prev = INFINITY, worst = 0;
  for (int k = 4; k <= 40; ++k) {
    const OverheadReport o = overhead_report(1, 1, std::ldexp(1.0, -k), 2);
    worst = std::max(worst, std::fabs(o.overhead_factor - 2.0 * k));
    if (o.overhead_factor != 2.0 * k) out.pass = false;
    const double ratio_log5 = o.overhead_factor / std::pow(static_cast<double>(k), 5);
    if (!(ratio_log5 < prev)) out.pass = false;
    prev = ratio_log5;
  }
  out.detail = "max |overhead - 2k|=" + fmt(worst);
  return out;
}

Outcome infrastructure() {
  Outcome out;
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<long> pick(0, 1L << 16);
  int round_trips = 0;
  for (const Network& net : registry.samples) {
    const Network back = from_json(to_json(net));
    registry.track(back);
    if (!(back == net)) out.pass = false;
    for (int p = 0; p < 100; ++p) {
      std::vector<Rational> x;
      for (int k = 0; k < net.input_dim; ++k) {
        const Rational u = ratio(pick(rng), 1L << 16);
        x.push_back(net.domain.lo + u * (net.domain.hi - net.domain.lo));
      }
      if (evaluate(back, x) != evaluate(net, x)) out.pass = false;
    }
    ++round_trips;
  }
  const Network mutant = flip_one_weight(build_squaring(3));
  bool caught = false;
  for (const auto& p : squaring_properties(mutant, 3)) caught = caught || !p.passed();
  const SuiteReport suite = run_property_suite(1, SuiteSizes{});
  if (!caught || !suite.mutation_detected || !suite.all_passed()) out.pass = false;
  if (registry.invalid != 0) out.pass = false;
  out.detail = "round trips=" + std::to_string(round_trips) + " validated=" + std::to_string(registry.networks) +
               " invalid=" + std::to_string(registry.invalid) + " mutation " + (caught ? "caught" : "missed") +
               " suite " + (suite.all_passed() ? "pass" : "fail");
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"squaring exactness", squaring_exactness},
      {"multiplier accuracy", multiplier_accuracy},
      {"nonlinear weight gadget", nonlinear_gadget},
      {"linear weight gadget", linear_gadget},
      {"function-independent end to end", independent_end_to_end},
      {"transformed-function properties", ftilde_suite},
      {"function-dependent end to end", dependent_end_to_end},
      {"memory model derivative", bounds_models},
      {"optimal bit-width trends", bitwidth_trends},
      {"quantization overhead", overhead_trend},
      {"infrastructure", infrastructure},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
