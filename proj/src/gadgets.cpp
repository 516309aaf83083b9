#include "qnet/gadgets.hpp"

#include <climits>
#include <stdexcept>

namespace qnet {

namespace {

const Rational kHalf(1, 2);

InputDomain unit_interval() { return InputDomain{Rational(0), Rational(1)}; }
InputDomain signed_interval() { return InputDomain{Rational(-1), Rational(1)}; }

void require_r(int r) {
  if (r < 1) throw std::invalid_argument("r must be >= 1");
}

// Halves `v` (nonnegative) `times` times through single-edge layers.
Expr halve(GraphBuilder& g, Expr v, int times) {
  for (int i = 0; i < times; ++i) v = g.relu_expr(kHalf * v);
  return v;
}

}  // namespace

Expr tent(GraphBuilder& g, const Expr& v) {
  return 2 * g.relu_expr(v) - 4 * g.relu_expr(v - kHalf);
}

Expr square(GraphBuilder& g, const Expr& v, int r) {
  require_r(r);
  // c_i = 4 c_{i-1} - g^i(v) stays nonnegative and ends at 4^r times the interpolant.
  Expr gi = v;
  Expr c = v;
  for (int i = 1; i <= r; ++i) {
    gi = tent(g, gi);
    c = g.relu_expr(4 * c - gi);
  }
  return kHalf * halve(g, c, 2 * r - 1);
}

Expr square_naive(GraphBuilder& g, const Expr& v, int r) {
  require_r(r);
  Expr out = v;
  Expr gi = v;
  for (int i = 1; i <= r; ++i) {
    gi = tent(g, gi);
    out -= kHalf * halve(g, gi, 2 * i - 1);
  }
  return out;
}

Expr absolute(GraphBuilder& g, const Expr& v) {
  return 2 * g.relu_expr(kHalf * v) + 2 * g.relu_expr(-kHalf * v);
}

Expr half_abs_square(GraphBuilder& g, const Expr& v, int r) {
  return square(g, g.relu_expr(kHalf * v) + g.relu_expr(-kHalf * v), r);
}

Expr multiply_with_squares(GraphBuilder& g, const Expr& x, const Expr& y, const Expr& sx,
                           const Expr& sy, int r) {
  return 2 * (half_abs_square(g, x + y, r) - sx - sy);
}

Expr multiply(GraphBuilder& g, const Expr& x, const Expr& y, int r) {
  require_r(r);
  return multiply_with_squares(g, x, y, half_abs_square(g, x, r), half_abs_square(g, y, r), r);
}

WeightRealizer WeightRealizer::nonlinear(int lambda, int max_t) {
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");
  if (max_t < 1) throw std::invalid_argument("t must be >= 1");
  int rho = lambda == 2 ? max_t : 2;
  auto capacity = [&](int radix) {
    long long c = 1;
    for (int i = 0; i < lambda - 1; ++i) {
      c *= radix;
      if (c > INT_MAX) return static_cast<long long>(INT_MAX);
    }
    return c;
  };
  while (capacity(rho) < max_t) ++rho;
  return WeightRealizer(Codebook::radix(lambda, rho), rho, static_cast<int>(capacity(rho)), 0);
}

WeightRealizer WeightRealizer::linear(int lambda, int max_t) {
  if (lambda < 2 || (lambda & (lambda - 1)) != 0) {
    throw std::invalid_argument("linear mode requires lambda to be a power of two");
  }
  if (max_t < 1) throw std::invalid_argument("t must be >= 1");
  int b = 0;
  while ((1 << b) < lambda) ++b;
  return WeightRealizer(Codebook::linear(lambda), 0, max_t, b);
}

std::vector<Rational> WeightRealizer::chain_factors(int k) const {
  std::vector<Rational> out;
  if (mode() == QuantMode::Nonlinear) {
    long long place = 1;  // rho^i
    int rest = k;
    for (int i = 0; rest > 0; ++i) {
      int digit = rest % radix_;
      rest /= radix_;
      for (int c = 0; c < digit; ++c) out.push_back(pow2(-static_cast<int>(place)));
      place *= radix_;
    }
  } else {
    const int b = log2_lambda_;
    for (int i = 0; i < k / b; ++i) out.emplace_back(1, lambda());
    if (k % b != 0) out.push_back(pow2(b - k % b) / lambda());
  }
  return out;
}

int WeightRealizer::chain_length(int k) const { return static_cast<int>(chain_factors(k).size()); }

namespace {

// Chain lengths 2^-(j-1) for the set bits j of |w'| (|w'| = 1 maps to an empty chain).
std::vector<int> set_bits(const Rational& magnitude, int t) {
  std::vector<int> ks;
  if (magnitude == 1) return {-1};
  mpz_class bits = Rational(magnitude * pow2(t)).get_num();
  for (int j = 1; j <= t; ++j) {
    if (mpz_tstbit(bits.get_mpz_t(), static_cast<mp_bitcnt_t>(t - j))) ks.push_back(j - 1);
  }
  return ks;
}

}  // namespace

int WeightRealizer::natural_end_layer(int v_layer, const Rational& w, int t) const {
  const Rational realized = round_to_dyadic(w, t);
  int longest = 0;
  if (sgn(realized) != 0) {
    for (int k : set_bits(abs(realized), t)) {
      if (k >= 0) longest = std::max(longest, chain_length(k));
    }
  }
  return v_layer + 1 + longest;
}

Expr WeightRealizer::apply(GraphBuilder& g, const Expr& v, bool v_nonnegative,
                           const Rational& w, int t, WeightGadgetInfo* info,
                           int end_layer) const {
  if (abs(w) > 1) throw std::invalid_argument("weight " + format_rational(w) + " outside [-1, 1]");
  if (t < 1 || t > capacity_) {
    throw std::invalid_argument("resolution t=" + std::to_string(t) + " outside 1.." +
                                std::to_string(capacity_));
  }
  const Rational realized = round_to_dyadic(w, t);
  WeightGadgetInfo local{w, realized, t, t, radix_, 0};
  Expr out;
  if (sgn(realized) != 0) {
    const Rational sign = sgn(realized) > 0 ? 1 : -1;
    const int v_layer = g.layer_of(v);
    // v = 2 (p - n); 2^-j v = 2^-(j-1) (p - n).
    std::vector<Expr> gates{g.relu_expr(kHalf * v)};
    if (!v_nonnegative) gates.push_back(g.relu_expr(-kHalf * v));
    const int base_layer = v_layer + 1;
    auto ks = set_bits(abs(realized), t);
    int longest = 0;
    for (int k : ks) {
      if (k >= 0) longest = std::max(longest, chain_length(k));
    }
    const int delays = std::max(longest, end_layer - base_layer);
    for (std::size_t s = 0; s < gates.size(); ++s) {
      std::vector<Expr> delayed{gates[s]};
      for (int i = 1; i <= delays; ++i) delayed.push_back(g.relu_expr(delayed.back()));
      const Rational coef = s == 0 ? sign : Rational(-sign);
      for (int k : ks) {
        if (k < 0) {
          out += 2 * coef * delayed.back();
          continue;
        }
        auto factors = chain_factors(k);
        Expr chain = delayed[static_cast<std::size_t>(delays) - factors.size()];
        for (const auto& f : factors) chain = g.relu_expr(f * chain);
        out += coef * chain;
      }
    }
    local.cascade_depth = base_layer + delays - v_layer;
  }
  if (info) *info = local;
  return out;
}

HBlockFactory::HBlockFactory(GraphBuilder& g, int N) : g_(g), N_(N) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
}

NodeId HBlockFactory::scaled_input(int k) {
  auto it = scaled_.find(k);
  if (it != scaled_.end()) return it->second;
  NodeId id = g_.relu(Rational(3 * N_) * g_.input(k));
  scaled_.emplace(k, id);
  return id;
}

NodeId HBlockFactory::power(int e) {
  auto it = powers_.find(e);
  if (it != powers_.end()) return it->second;
  NodeId id = g_.relu(Expr(pow2(e)));
  powers_.emplace(e, id);
  return id;
}

HBlockFactory::Outputs HBlockFactory::make(int k, int m) {
  if (m < 0 || m > N_) throw std::invalid_argument("grid index m outside 0..N");
  if (auto it = made_.find({k, m}); it != made_.end()) return it->second;
  Expr shift;
  for (int e = 0; (3 * m) >> e; ++e) {
    if (((3 * m) >> e) & 1) shift += Expr::of(power(e));
  }
  Expr s = Expr::of(scaled_input(k));
  Expr up = g_.relu_expr(s - shift);
  Expr down = g_.relu_expr(shift - s);
  Expr mag = up + down;
  Outputs out;
  out.h = Expr(Rational(1)) - g_.relu_expr(mag - Rational(1)) + g_.relu_expr(mag - Rational(2));
  Expr half_u = kHalf * (up - down);
  out.z = g_.relu_expr(half_u + Rational(1)) - g_.relu_expr(half_u - Rational(1)) - Rational(1);
  made_.emplace(std::make_pair(k, m), out);
  return out;
}

Network build_g() {
  GraphBuilder g(Codebook::half_pair(), 1, unit_interval());
  return g.build(tent(g, g.input(0)));
}

Network build_squaring(int r) {
  GraphBuilder g(Codebook::half_pair(), 1, unit_interval());
  return g.build(square(g, g.input(0), r));
}

Network build_squaring_naive(int r) {
  GraphBuilder g(Codebook::half_pair(), 1, unit_interval());
  return g.build(square_naive(g, g.input(0), r));
}

Network build_abs() {
  GraphBuilder g(Codebook::half_pair(), 1, signed_interval());
  return g.build(absolute(g, g.input(0)));
}

Network build_multiplier(int r) {
  GraphBuilder g(Codebook::half_pair(), 2, signed_interval());
  return g.build(multiply(g, g.input(0), g.input(1), r));
}

namespace {

GadgetNetwork build_weight_gadget(const WeightRealizer& realizer, const Rational& w, int t,
                                  int requested_t) {
  GraphBuilder g(realizer.codebook(), 1, signed_interval());
  GadgetNetwork out;
  Expr e = realizer.apply(g, g.input(0), false, w, t, &out.info);
  out.info.requested_t = requested_t;
  out.network = g.build(e);
  return out;
}

}  // namespace

GadgetNetwork build_weight_gadget_nonlinear(const Rational& w, int t, int lambda) {
  if (abs(w) > 1) throw std::invalid_argument("|w| must be <= 1");
  auto realizer = WeightRealizer::nonlinear(lambda, t);
  return build_weight_gadget(realizer, w, realizer.capacity(), t);
}

GadgetNetwork build_weight_gadget_linear(const Rational& w, int t, int lambda) {
  if (abs(w) > 1) throw std::invalid_argument("|w| must be <= 1");
  auto realizer = WeightRealizer::linear(lambda, t);
  return build_weight_gadget(realizer, w, t, t);
}

Network build_h_block(int N, int m) {
  if (N < 1 || m < 0 || m > N) throw std::invalid_argument("h-block parameters out of range");
  GraphBuilder g(Codebook::half_pair(), 1, unit_interval());
  HBlockFactory factory(g, N);
  return g.build(factory.make(0, m).h);
}

Rational tent_value(const Rational& x) {
  return x < kHalf ? Rational(2 * x) : Rational(2 * (1 - x));
}

Rational trapezoid_value(const Rational& u) {
  Rational a = abs(u);
  if (a <= 1) return 1;
  if (a >= 2) return 0;
  return 2 - a;
}

}  // namespace qnet
