#include "qnet/independent.hpp"

#include <cmath>

#include "qnet/bounds.hpp"

namespace qnet {

namespace {

Rational rpow(const Rational& base, int e) {
  Rational out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

mpz_class zpow(long base, int e) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(e));
  return out;
}

long factorial(int k) {
  long out = 1;
  for (int i = 2; i <= k; ++i) out *= i;
  return out;
}

int order(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

Rational taylor_precision(const IndependentPlan& plan, int degree) {
  return rpow(ratio(plan.d, plan.N), plan.n - degree) / plan.n;
}

WeightRealizer make_realizer(const IndependentPlan& plan) {
  const int cap = plan.coefficient_bits(plan.n - 1);
  return plan.mode == QuantMode::Nonlinear ? WeightRealizer::nonlinear(plan.lambda, cap)
                                           : WeightRealizer::linear(plan.lambda, cap);
}

}  // namespace

Rational multiplier_error(int r) { return Rational(6) * pow2(-2 * (r + 1)); }

std::vector<MultiIndex> multi_indices(int d, int max_order) {
  std::vector<MultiIndex> out;
  for (int total = 0; total <= max_order; ++total) {
    MultiIndex a(static_cast<std::size_t>(d), 0);
    // Enumerate compositions of `total` into d parts in lexicographically decreasing order.
    auto rec = [&](auto&& self, int k, int left) -> void {
      if (k == d - 1) {
        a[static_cast<std::size_t>(k)] = left;
        out.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[static_cast<std::size_t>(k)] = v;
        self(self, k + 1, left - v);
      }
    };
    rec(rec, 0, total);
  }
  return out;
}

std::vector<std::vector<int>> grid_points(int d, int N) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(static_cast<std::size_t>(d), 0);
  while (true) {
    out.push_back(m);
    int k = d - 1;
    while (k >= 0 && m[static_cast<std::size_t>(k)] == N) {
      m[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
    ++m[static_cast<std::size_t>(k)];
  }
  return out;
}

ErrorBudget error_budget(const IndependentPlan& plan, double derivative_error) {
  const int d = plan.d, n = plan.n;
  const Rational two_d = pow2(d);
  const Rational dn = rpow(ratio(d, plan.N), n);
  const Rational eps_mult = multiplier_error(plan.r);
  ErrorBudget b;
  b.taylor = two_d * dn * (1 + Rational(1, factorial(n)));
  b.multiplier = two_d * Rational(zpow(d, n)) * (d + n - 1) * eps_mult;
  Rational series = 0;
  for (int i = 0; i < n; ++i) series += rpow(ratio(d, plan.N), i);
  b.weights = two_d * pow2(-(plan.t + plan.guard_bits)) * (1 + (d + n - 1) * eps_mult) * series;
  if (derivative_error > 0) {
    Rational tail = series - 1;
    Rational e(derivative_error);
    b.derivatives = two_d * e * tail;
  }
  b.total = b.taylor + b.multiplier + b.weights + b.derivatives;
  return b;
}

IndependentPlan plan_independent(int d, int n, const Rational& epsilon, int lambda,
                                 QuantMode mode) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (d < 1 || n < 1) throw std::invalid_argument("d and n must be >= 1");
  if (n > 16) throw std::invalid_argument("smoothness orders above 16 are not supported");
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");
  if (mode == QuantMode::Linear && (lambda & (lambda - 1)) != 0) {
    throw std::invalid_argument("linear mode requires lambda to be a power of two");
  }
  IndependentPlan p;
  p.d = d;
  p.n = n;
  p.epsilon = epsilon;
  p.lambda = lambda;
  p.mode = mode;

  // Smallest N = c d^2 (c >= 2) with N^n eps >= 3 2^d d^n.
  const Rational need = Rational(3) * pow2(d) * Rational(zpow(d, n));
  auto ok = [&](long c) {
    Rational N(c * static_cast<long>(d) * d);
    return rpow(N, n) * epsilon >= need;
  };
  double guess = std::pow(to_double(need / epsilon), 1.0 / n) / (static_cast<double>(d) * d);
  long c = std::max(2L, static_cast<long>(guess) - 2);
  while (c > 2 && ok(c - 1)) --c;
  while (!ok(c)) ++c;
  p.c = static_cast<int>(c);
  p.N = static_cast<int>(c * d * d);

  const mpz_class Nn = zpow(p.N, n);
  // r = ceil(log2(6 N^n (d+n-1)) / 2 - 1): smallest r with 4^(r+1) >= 6 N^n (d+n-1).
  const mpz_class target_r = 6 * Nn * (d + n - 1);
  p.r = 0;
  while (zpow(4, p.r + 1) < target_r) ++p.r;
  p.r = std::max(p.r, 1);
  // t = ceil(log2(n N^n / d^n)).
  p.t = 1;
  while (zpow(2, p.t) * zpow(d, n) < n * Nn) ++p.t;
  p.s = 0;
  while ((1L << (p.s + 1)) < 3L * p.N) ++p.s;

  const ErrorBudget base = error_budget(p);
  const Rational slack = epsilon - base.taylor - base.multiplier;
  if (slack <= 0) throw std::logic_error("plan leaves no room for coefficient rounding");
  while (error_budget(p).weights > slack) ++p.guard_bits;

  const auto formulas = bound_formulas(mode == QuantMode::Nonlinear ? Theorem::T1 : Theorem::T2,
                                       d, n, to_double(epsilon), lambda);
  for (const auto& [k, v] : formulas) p.predicted.emplace_back(k, v);
  p.predicted.emplace_back("weight_count_estimate", predicted_weight_count(p));
  return p;
}

std::map<CoefficientKey, Rational> taylor_coeffs(const TargetFunction& f,
                                                 const IndependentPlan& plan) {
  if (f.d != plan.d) throw std::invalid_argument("function dimension does not match the plan");
  if (f.max_order < plan.n) {
    throw std::invalid_argument("function '" + f.name + "' is not certified for order " +
                                std::to_string(plan.n));
  }
  std::map<CoefficientKey, Rational> out;
  const auto alphas = multi_indices(plan.d, plan.n - 1);
  for (const auto& m : grid_points(plan.d, plan.N)) {
    std::vector<Rational> xr;
    std::vector<double> xd;
    for (int mk : m) {
      xr.emplace_back(mk, plan.N);
      xr.back().canonicalize();
      xd.push_back(to_double(xr.back()));
    }
    for (const auto& a : alphas) {
      Rational raw;
      if (f.exact_partial) {
        raw = f.exact_partial(a, xr);
      } else if (f.partial) {
        raw = Rational(f.partial(a, xd));
      } else {
        throw std::invalid_argument("function '" + f.name + "' has no derivative oracle");
      }
      long denom = 1;
      for (int v : a) denom *= factorial(v);
      raw /= denom;
      const Rational precision = taylor_precision(plan, order(a));
      if (abs(raw) > 1 + precision) {
        throw std::domain_error("Taylor coefficient of " + f.name +
                                " exceeds the Sobolev bound (|beta| = " +
                                std::to_string(to_double(abs(raw))) + ")");
      }
      Rational beta = round_to_multiple(raw, precision);
      if (beta > 1) beta = 1;
      if (beta < -1) beta = -1;
      out.emplace(CoefficientKey{m, a}, beta);
    }
  }
  return out;
}

double predicted_weight_count(const IndependentPlan& plan) {
  const double mult = static_cast<double>(complexity(build_multiplier(plan.r)).weight_count);
  const double hblock = static_cast<double>(complexity(build_h_block(plan.N, plan.N)).weight_count);
  const double blocks = std::pow(plan.N + 1.0, plan.d);
  const double lambda = plan.lambda;
  double per_block = (plan.d - 1) * mult;
  for (const auto& a : multi_indices(plan.d, plan.n - 1)) {
    const int deg = order(a);
    const double t = plan.coefficient_bits(deg);
    double gadget;
    if (plan.mode == QuantMode::Nonlinear) {
      const double rho = lambda == 2 ? t : std::ceil(std::pow(t, 1 / (lambda - 1)));
      gadget = 4 * t * lambda * (rho - 1) + 8 * t + 4;
    } else {
      gadget = 4 * t * (std::ceil(t / std::log2(lambda)) + 2) + 8;
    }
    per_block += (deg > 0 ? deg * mult : 0) + gadget;
  }
  return blocks * per_block + plan.d * (plan.N + 1.0) * hblock;
}

namespace {

struct PendingTerm {
  Expr value;
  bool nonnegative;
  Rational gamma;
  int bits;
};

}  // namespace

IndependentBuild build_independent(const TargetFunction& f, const IndependentPlan& plan,
                                   double weight_cap) {
  const double predicted = predicted_weight_count(plan);
  if (predicted > weight_cap) {
    throw ResourceCapExceeded("predicted weight count " + std::to_string(predicted) +
                                  " exceeds the cap " + std::to_string(weight_cap),
                              predicted);
  }
  const auto beta = taylor_coeffs(f, plan);
  const WeightRealizer realizer = make_realizer(plan);
  GraphBuilder g(realizer.codebook(), plan.d, InputDomain{Rational(0), Rational(1)});
  HBlockFactory bumps(g, plan.N);
  const int r = plan.r;
  const auto alphas = multi_indices(plan.d, plan.n - 1);
  const Rational scale = ratio(2, 3 * plan.N);

  std::vector<PendingTerm> terms;
  for (const auto& m : grid_points(plan.d, plan.N)) {
    std::vector<std::pair<const MultiIndex*, Rational>> active;
    for (const auto& a : alphas) {
      const Rational gamma = beta.at({m, a}) * rpow(scale, order(a));
      if (sgn(round_to_dyadic(gamma, plan.coefficient_bits(order(a)))) != 0) {
        active.emplace_back(&a, gamma);
      }
    }
    if (active.empty()) continue;

    std::vector<HBlockFactory::Outputs> h;
    for (int k = 0; k < plan.d; ++k) h.push_back(bumps.make(k, m[static_cast<std::size_t>(k)]));
    Expr psi = h.back().h;
    for (int k = plan.d - 2; k >= 0; --k) psi = multiply(g, h[static_cast<std::size_t>(k)].h, psi, r);

    std::optional<Expr> psi_square;
    std::map<MultiIndex, std::pair<Expr, Expr>> mono;  // value, s(|value|/2)
    auto monomial = [&](auto&& self, const MultiIndex& a) -> std::pair<Expr, Expr> {
      if (auto it = mono.find(a); it != mono.end()) return it->second;
      std::size_t k = 0;
      while (a[k] == 0) ++k;
      const Expr& z = h[k].z;
      Expr value;
      if (order(a) == 1) {
        value = z;
      } else {
        MultiIndex rest = a;
        --rest[k];
        auto [rv, rs] = self(self, rest);
        value = multiply_with_squares(g, z, rv, half_abs_square(g, z, r), rs, r);
      }
      auto entry = std::make_pair(value, half_abs_square(g, value, r));
      mono.emplace(a, entry);
      return entry;
    };

    for (const auto& [a, gamma] : active) {
      PendingTerm term;
      term.gamma = gamma;
      term.bits = plan.coefficient_bits(order(*a));
      if (order(*a) == 0) {
        term.value = psi;
        term.nonnegative = plan.d == 1;
      } else {
        if (!psi_square) psi_square = half_abs_square(g, psi, r);
        auto [mv, ms] = monomial(monomial, *a);
        term.value = multiply_with_squares(g, psi, mv, *psi_square, ms, r);
        term.nonnegative = false;
      }
      terms.push_back(std::move(term));
    }
  }

  int end_layer = 0;
  for (const auto& t : terms) {
    end_layer = std::max(end_layer,
                         realizer.natural_end_layer(g.layer_of(t.value), t.gamma, t.bits));
  }
  Expr output;
  for (const auto& t : terms) {
    output += realizer.apply(g, t.value, t.nonnegative, t.gamma, t.bits, nullptr, end_layer);
  }
  IndependentBuild out;
  out.network = g.build(output);
  out.terms = static_cast<std::int64_t>(terms.size());
  return out;
}

Network build_block_network(const IndependentPlan& plan, const std::vector<int>& m,
                            const MultiIndex& alpha) {
  if (static_cast<int>(m.size()) != plan.d || static_cast<int>(alpha.size()) != plan.d) {
    throw std::invalid_argument("block index dimension does not match the plan");
  }
  GraphBuilder g(Codebook::half_pair(), plan.d, InputDomain{Rational(0), Rational(1)});
  HBlockFactory bumps(g, plan.N);
  std::vector<HBlockFactory::Outputs> h;
  for (int k = 0; k < plan.d; ++k) h.push_back(bumps.make(k, m[static_cast<std::size_t>(k)]));
  Expr psi = h.back().h;
  for (int k = plan.d - 2; k >= 0; --k) psi = multiply(g, h[static_cast<std::size_t>(k)].h, psi, plan.r);
  std::optional<Expr> mono;
  for (int k = plan.d - 1; k >= 0; --k) {
    for (int i = 0; i < alpha[static_cast<std::size_t>(k)]; ++i) {
      const Expr& z = h[static_cast<std::size_t>(k)].z;
      mono = mono ? multiply(g, z, *mono, plan.r) : z;
    }
  }
  return g.build(mono ? multiply(g, psi, *mono, plan.r) : psi);
}

Rational block_target(const IndependentPlan& plan, const std::vector<int>& m,
                      const MultiIndex& alpha, std::span<const Rational> x) {
  Rational out = 1;
  for (int k = 0; k < plan.d; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const Rational u = 3 * plan.N * x[kk] - 3 * m[kk];
    out *= trapezoid_value(u);
    Rational z = u / 2;
    if (z > 1) z = 1;
    if (z < -1) z = -1;
    out *= rpow(z, alpha[kk]);
  }
  return out;
}

Rational block_error_bound(const IndependentPlan& plan, const MultiIndex& alpha) {
  return Rational(plan.d + order(alpha)) * multiplier_error(plan.r);
}

}  // namespace qnet
