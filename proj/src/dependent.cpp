#include "qnet/dependent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "qnet/bounds.hpp"

namespace qnet {

std::string to_string(Strategy strategy) {
  return strategy == Strategy::Cached ? "cached" : "interpolation";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "cached") return Strategy::Cached;
  if (text == "interpolation" || text == "interp") return Strategy::InterpolationOnly;
  throw std::invalid_argument("unknown strategy '" + text + "'");
}

namespace {

Rational interp_base_error(int T, int t) {
  return Rational(1, 2 * T) + pow2(-t) / T;
}

Rational value_at(const TargetFunction& f, const Rational& x) {
  if (f.exact) return f.exact_at(x);
  return Rational(f(to_double(x)));
}

}  // namespace

DependentPlan plan_dependent(const Rational& epsilon, int lambda, QuantMode mode,
                             Strategy strategy) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");
  if (mode == QuantMode::Linear && (lambda & (lambda - 1)) != 0) {
    throw std::invalid_argument("linear mode requires lambda to be a power of two");
  }
  DependentPlan p;
  p.epsilon = epsilon;
  p.lambda = lambda;
  p.mode = mode;
  p.strategy = strategy;
  const Rational inv = 1 / epsilon;
  p.m = 1;
  while (pow2(2 * p.m) < inv) ++p.m;
  p.t = std::max(1, ceil_log2(Rational(p.m)));
  p.delta = Rational(1, 8 * p.m);
  const double e = to_double(epsilon);
  p.T = static_cast<int>(std::ceil(8.0 / (e * std::log2(1.0 / e))));
  p.T = std::max(p.T, 1);
  p.T_interp = static_cast<int>(ceil_div(inv).get_si());
  p.t_interp = std::max(1, ceil_log2(inv));
  while (interp_base_error(p.T_interp, p.t_interp) >= epsilon) ++p.t_interp;
  const auto formulas = bound_formulas(mode == QuantMode::Nonlinear ? Theorem::T3 : Theorem::T4,
                                       1, 1, e, lambda);
  for (const auto& [k, v] : formulas) p.predicted.emplace_back(k, v);
  p.predicted.emplace_back("weight_count_estimate", predicted_dependent_weights(p));
  return p;
}

std::vector<Rational> ftilde_breakpoints(const TargetFunction& f, int t, int T) {
  if (t < 1 || T < 1) throw std::invalid_argument("t and T must be positive");
  std::vector<Rational> v;
  const Rational step = pow2(-t) / T;
  for (int i = 0; i <= T; ++i) {
    const Rational x = ratio(i, T);
    v.push_back(ceil_to_multiple(value_at(f, x), step));
  }
  return v;
}

namespace {

struct Interval {
  int i;
  double a, b, vi, vnext, fb;
};

Interval locate(const TargetFunction& f, int t, int T, double x) {
  int i = static_cast<int>(std::ceil(x * T)) - 1;
  i = std::clamp(i, 0, T - 1);
  const double step = std::ldexp(1.0, -t) / T;
  auto v = [&](int k) { return std::ceil(T * f(static_cast<double>(k) / T) * std::ldexp(1.0, t)) * step; };
  return Interval{i, static_cast<double>(i) / T, static_cast<double>(i + 1) / T, v(i), v(i + 1),
                  f(static_cast<double>(i + 1) / T)};
}

}  // namespace

double ftilde_crossing(const TargetFunction& f, int t, int T, int i) {
  if (i < 0 || i >= T) throw std::out_of_range("interval index");
  Interval iv = locate(f, t, T, (i + 0.5) / T);
  auto fplus = [&](double x) { return f(x) + iv.vnext - iv.fb; };
  const double start_gap = fplus(iv.a) - iv.vi;
  if (start_gap == 0) return iv.a;
  const double s = start_gap > 0 ? 1.0 : -1.0;
  // Positive while the segment has not yet met f+.
  auto gap = [&](double x) { return s * (fplus(x) - (iv.vi + s * (x - iv.a))); };
  if (gap(iv.b) > 1e-15) {
    throw std::domain_error("f+ is not reached within the interval: Lipschitz certificate violated");
  }
  double lo = iv.a, hi = iv.b;
  const double tol = std::ldexp(iv.b - iv.a, -40);
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double ftilde_eval(const TargetFunction& f, int t, int T, double x) {
  if (x < 0 || x > 1) throw std::domain_error("x outside [0, 1]");
  Interval iv = locate(f, t, T, x);
  if (x <= 0) return iv.vi;
  const double xs = ftilde_crossing(f, t, T, iv.i);
  if (x < xs) {
    const double s = f(iv.a) + iv.vnext - iv.fb > iv.vi ? 1.0 : -1.0;
    return iv.vi + s * (x - iv.a);
  }
  return f(x) + iv.vnext - iv.fb;
}

Rational ftilde_eval_exact(const TargetFunction& f, int t, int T, const Rational& x) {
  if (x < 0 || x > 1) throw std::domain_error("x outside [0, 1]");
  const Rational step = pow2(-t) / T;
  auto v = [&](int k) {
    const Rational p = ratio(k, T);
    return ceil_to_multiple(value_at(f, p), step);
  };
  if (x == 0) return v(0);
  int i = static_cast<int>(ceil_div(x * T).get_si()) - 1;
  const Rational a = ratio(i, T), b = ratio(i + 1, T);
  const Rational vi = v(i);
  const Rational offset = v(i + 1) - value_at(f, b);
  auto fplus = [&](const Rational& y) { return Rational(value_at(f, y) + offset); };
  const Rational start = fplus(a);
  if (vi < start) {
    if (vi + (b - a) < fplus(b)) throw std::domain_error("Lipschitz certificate violated");
    return std::min(Rational(vi + (x - a)), fplus(x));
  }
  if (vi > start) {
    if (vi - (b - a) > fplus(b)) throw std::domain_error("Lipschitz certificate violated");
    return std::max(Rational(vi - (x - a)), fplus(x));
  }
  return fplus(x);
}

double predicted_dependent_weights(const DependentPlan& plan) {
  const double T = plan.intervals();
  const double bits = plan.bits() + std::log2(T) + 8;
  const double lambda = plan.lambda;
  const double rho = lambda == 2 ? bits : std::ceil(std::pow(bits, 1 / (lambda - 1)));
  const double gadget = 4 * bits * lambda * (rho - 1) + 8 * bits + 4;
  double w = 24 * T + 4 * gadget;
  if (plan.strategy == Strategy::Cached) {
    const double P = plan.pieces();
    const double groups = std::min(2 * T, 2 * std::pow(3.0, P));
    w += 40 * T + groups * (4 * P + 8 * (plan.t + 3)) + 4 * P * P;
  }
  return w;
}

namespace {

// Ramps U_i = relu(T x - i), i = 0..count-1, all on one layer.
std::vector<Expr> ramps(GraphBuilder& g, int T, int count) {
  std::map<int, Expr> level{{0, g.relu_expr(Rational(T) * g.input(0))}};
  int top = 0;
  while ((1 << (top + 1)) < count) ++top;
  std::map<int, NodeId> powers;
  auto power = [&](int e) {
    auto it = powers.find(e);
    if (it == powers.end()) it = powers.emplace(e, g.relu(Expr(pow2(e)))).first;
    return Expr::of(it->second);
  };
  for (int e = count > 1 ? top : -1; e >= 0; --e) {
    std::map<int, Expr> next;
    for (const auto& [i, u] : level) {
      next.emplace(i, g.relu_expr(u));
      if (i + (1 << e) < count) next.emplace(i + (1 << e), g.relu_expr(u - power(e)));
    }
    level = std::move(next);
  }
  std::vector<Expr> out;
  for (auto& [i, u] : level) out.push_back(u);
  return out;
}

// Returns 2^-J (sum_i K_i V_i + extra) for nonnegative integer K_i and
// nonnegative V_i, accumulating binary planes from the low bit up.
Expr horner(GraphBuilder& g, const std::vector<Expr>& V, const std::vector<mpz_class>& K,
            const Expr& extra, int J) {
  Expr z;
  for (int j = 0; j <= J; ++j) {
    Expr plane = j == 0 ? extra : Expr();
    for (std::size_t i = 0; i < V.size(); ++i) {
      if (mpz_tstbit(K[i].get_mpz_t(), static_cast<mp_bitcnt_t>(j))) plane += V[i];
    }
    z = g.relu_expr(Rational(1, 2) * z + plane);
  }
  return z;
}

// Minimax tracking of knot targets r_k (units of h) by a path with steps in {-1, 0, 1}.
std::vector<int> fit_letters(const std::vector<double>& r, double* error) {
  const int P = static_cast<int>(r.size()) - 1;
  const int span = 2 * P + 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(P + 1),
                                        std::vector<double>(static_cast<std::size_t>(span), inf));
  std::vector<std::vector<int>> from(static_cast<std::size_t>(P + 1),
                                     std::vector<int>(static_cast<std::size_t>(span), 0));
  cost[0][static_cast<std::size_t>(P)] = std::abs(r[0]);
  for (int k = 0; k < P; ++k) {
    for (int c = 0; c < span; ++c) {
      double base = cost[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      if (base == inf) continue;
      for (int a : {0, -1, 1}) {
        int nc = c + a;
        if (nc < 0 || nc >= span) continue;
        double v = std::max(base, std::abs((nc - P) - r[static_cast<std::size_t>(k + 1)]));
        auto& slot = cost[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(nc)];
        if (v < slot) {
          slot = v;
          from[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(nc)] = a;
        }
      }
    }
  }
  const auto& last = cost[static_cast<std::size_t>(P)];
  int c = static_cast<int>(std::min_element(last.begin(), last.end()) - last.begin());
  *error = last[static_cast<std::size_t>(c)];
  std::vector<int> letters(static_cast<std::size_t>(P));
  for (int k = P; k > 0; --k) {
    int a = from[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    letters[static_cast<std::size_t>(k - 1)] = a;
    c -= a;
  }
  return letters;
}

struct ScaleTerm {
  Expr value;
  bool nonnegative;
  Rational weight;  // |weight| <= 1
  int shift;        // output multiplied by 2^shift
};

}  // namespace

DependentBuild build_dependent(const TargetFunction& f, const DependentPlan& plan,
                               double weight_cap) {
  if (f.d != 1) throw std::invalid_argument("function-dependent synthesis requires d = 1");
  if (!f.lipschitz_certificate) {
    throw std::invalid_argument("function '" + f.name + "' is not certified Lipschitz-1");
  }
  const double predicted = predicted_dependent_weights(plan);
  if (predicted > weight_cap) {
    throw ResourceCapExceeded("predicted weight count " + std::to_string(predicted) +
                                  " exceeds the cap " + std::to_string(weight_cap),
                              predicted);
  }
  const int T = plan.intervals();
  const int t = plan.bits();
  const auto v = ftilde_breakpoints(f, t, T);

  // Integer slope changes K_i = 2^t (s_i - s_{i-1}), s_i = T (v_{i+1} - v_i).
  std::vector<mpz_class> Kpos(static_cast<std::size_t>(T)), Kneg(static_cast<std::size_t>(T));
  Rational prev_slope = 0;
  for (int i = 0; i < T; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Rational slope = (v[ui + 1] - v[ui]) * T;
    const Rational k = (slope - prev_slope) * pow2(t);
    if (k.get_den() != 1) throw std::logic_error("slope change is not an integer multiple");
    if (k > 0) Kpos[ui] = k.get_num();
    if (k < 0) Kneg[ui] = -k.get_num();
    prev_slope = slope;
  }

  // Scaling gadget resolution is fixed before the realizer (its codebook depends on it).
  const Rational eps = plan.epsilon;
  Rational budget = eps / 16;
  if (plan.strategy == Strategy::InterpolationOnly) {
    const Rational slack = eps - interp_base_error(T, t);
    budget = std::min(budget, Rational(slack / 2));
  }

  DependentBuild out;
  // Residual caches (Cached strategy): letters per interval.
  std::vector<std::vector<int>> letters(static_cast<std::size_t>(T));
  int P = plan.pieces();
  mpz_class residual_max = 0;
  if (plan.strategy == Strategy::Cached) {
    double worst = 0;
    const double h = std::ldexp(1.0, -t);
    for (int i = 0; i < T; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      std::vector<double> r(static_cast<std::size_t>(P + 1));
      for (int k = 0; k <= P; ++k) {
        const Rational y = ratio(k, P);
        Rational x = (Rational(i) + y) / T;
        Rational coarse = v[ui] + (v[ui + 1] - v[ui]) * y;
        Rational ft = f.exact ? ftilde_eval_exact(f, t, T, x)
                              : Rational(ftilde_eval(f, t, T, to_double(x)));
        r[static_cast<std::size_t>(k)] = to_double((ft - coarse) * T) / h;
      }
      double err = 0;
      letters[ui] = fit_letters(r, &err);
      worst = std::max(worst, err * h / T);
    }
    out.residual_fit_error = worst;
    residual_max = P;
  }

  // Bound on Z+ + Z- before scaling, in units of 2^-J.
  mpz_class total = 0;
  for (int i = 0; i < T; ++i) total += (Kpos[static_cast<std::size_t>(i)] + Kneg[static_cast<std::size_t>(i)]) * T;
  total += residual_max;
  int J = 0;
  for (int i = 0; i < T; ++i) {
    for (const auto* K : {&Kpos[static_cast<std::size_t>(i)], &Kneg[static_cast<std::size_t>(i)]}) {
      if (*K > 0) J = std::max(J, static_cast<int>(mpz_sizeinbase(K->get_mpz_t(), 2)) - 1);
    }
  }
  const Rational q = pow2(J - t) / T;  // F = v_0 + q (Z+ - Z-)
  int q_shift = 0;
  while (q > pow2(q_shift)) ++q_shift;
  int v0_shift = abs(v[0]) > 1 ? 1 : 0;
  // |q' - q| |Z+ - Z-| + |v0' - v0| <= budget.
  const Rational zmax = Rational(total) * pow2(-J);
  int p = 1;
  while (pow2(-p) * (pow2(q_shift) * zmax + pow2(v0_shift)) > budget) ++p;
  out.scale_bits = p;

  const WeightRealizer realizer = plan.mode == QuantMode::Nonlinear
                                      ? WeightRealizer::nonlinear(plan.lambda, p)
                                      : WeightRealizer::linear(plan.lambda, p);
  const int bits = p;
  GraphBuilder g(realizer.codebook(), 1, InputDomain{Rational(0), Rational(1)});
  const auto U = ramps(g, T, T);

  Expr extra_pos, extra_neg;
  if (plan.strategy == Strategy::Cached) {
    // Zigzag local coordinate: A = y on even intervals, 1 - y on odd ones.
    Expr A_lin = U[0];
    for (int i = 1; i < T; ++i) A_lin += Rational(i % 2 == 0 ? 2 : -2) * U[static_cast<std::size_t>(i)];
    Expr A = g.relu_expr(A_lin);
    std::vector<Expr> W, Wr;
    for (int k = 0; k < P; ++k) {
      W.push_back(g.relu_expr(Rational(P) * A - Rational(k)));
      Wr.push_back(g.relu_expr(Rational(P - k) - Rational(P) * A));
    }
    // Filter constants D = margin and 1.
    Expr D = g.relu_expr(Expr(Rational(1, 2)));
    for (int j = 1; j < t + 3; ++j) D = g.relu_expr(Rational(1, 2) * D);
    Expr one = g.relu_expr(Expr(Rational(1)));

    std::map<std::pair<std::vector<int>, int>, std::vector<int>> groups;
    for (int i = 0; i < T; ++i) {
      const auto& l = letters[static_cast<std::size_t>(i)];
      if (std::all_of(l.begin(), l.end(), [](int a) { return a == 0; })) continue;
      groups[{l, i % 2}].push_back(i);
    }
    std::map<std::vector<int>, int> distinct;
    for (const auto& [key, members] : groups) distinct[key.first] = 1;
    out.cached_functions = static_cast<int>(distinct.size());

    int B = 1;
    while (B <= P) B *= 2;
    Expr R;
    for (const auto& [key, members] : groups) {
      const auto& [l, parity] = key;
      Expr sum;
      for (int i : members) {
        const Expr& ui = U[static_cast<std::size_t>(i)];
        sum += ui - g.relu_expr(ui - D) - g.relu_expr(ui - one + D);
        if (i + 1 < T) sum += U[static_cast<std::size_t>(i + 1)];
      }
      Expr psi = g.relu_expr(sum);
      for (int j = 0; j < t + 3; ++j) psi = g.relu_expr(2 * psi);
      Expr C;
      int prev = 0;
      for (int k = 0; k < P; ++k) {
        const int e = l[static_cast<std::size_t>(k)] - prev;
        prev = l[static_cast<std::size_t>(k)];
        if (e != 0) C += Rational(e) * (parity == 0 ? W : Wr)[static_cast<std::size_t>(k)];
      }
      Expr s = Rational(2 * B) * psi - Rational(B);
      R += g.relu_expr(C + s) - g.relu_expr(s);
    }
    extra_pos = g.relu_expr(R);
    extra_neg = g.relu_expr(-R);
  }

  Expr zpos = horner(g, U, Kpos, extra_pos, J);
  Expr zneg = horner(g, U, Kneg, extra_neg, J);

  std::vector<ScaleTerm> scaled{{zpos - zneg, false, q / pow2(q_shift), q_shift}};
  if (sgn(v[0]) != 0) scaled.push_back({Expr(Rational(1)), true, v[0] / pow2(v0_shift), v0_shift});
  int end_layer = 0;
  for (const auto& s : scaled) {
    end_layer = std::max(end_layer, realizer.natural_end_layer(g.layer_of(s.value), s.weight, bits));
  }
  Expr output;
  for (const auto& s : scaled) {
    output += pow2(s.shift) *
              realizer.apply(g, s.value, s.nonnegative, s.weight, bits, nullptr, end_layer);
  }
  out.network = g.build(output);
  return out;
}

}  // namespace qnet
