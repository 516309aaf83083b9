#pragma once

#include <map>
#include <optional>

#include "qnet/graph.hpp"

namespace qnet {

// Building blocks that append nodes to a GraphBuilder. Inputs are affine
// expressions; each helper documents the range it expects.

/// Tent map g(v) = 2 relu(v) - 4 relu(v - 1/2), for v in [0, 1].
Expr tent(GraphBuilder& g, const Expr& v);

/// Piecewise-linear interpolation of v^2 on 2^r + 1 uniform breakpoints,
/// v in [0, 1], using the pre-scaled tent chain and 2r halvings.
Expr square(GraphBuilder& g, const Expr& v, int r);

/// Same function without pre-scaling: every tent output is halved separately.
Expr square_naive(GraphBuilder& g, const Expr& v, int r);

/// |v| for v in [-1, 1].
Expr absolute(GraphBuilder& g, const Expr& v);

/// 2 (s(|x+y|/2) - s(|x|/2) - s(|y|/2)) with s the squaring interpolant; x, y in [-1, 1].
Expr multiply(GraphBuilder& g, const Expr& x, const Expr& y, int r);

/// s(|v|/2), the per-operand part of multiply; lets callers share it between products.
Expr half_abs_square(GraphBuilder& g, const Expr& v, int r);

/// multiply() with the operand squares sx = s(|x|/2), sy = s(|y|/2) supplied.
Expr multiply_with_squares(GraphBuilder& g, const Expr& x, const Expr& y, const Expr& sx,
                           const Expr& sy, int r);

struct WeightGadgetInfo {
  Rational requested;
  Rational realized;  ///< w' = nearest multiple of 2^-t (ties toward zero)
  int requested_t = 0;
  int effective_t = 0;
  int radix = 0;          ///< nonlinear mode only
  int cascade_depth = 0;  ///< layers between the input and the output unit
};

/// Multiplies expressions by rationals in [-1, 1] using only codebook weights,
/// via the binary expansion of the rounded weight. One realizer serves a whole
/// builder: nonlinear mode fixes the radix codebook at construction, so every
/// later request must stay within its resolution.
class WeightRealizer {
 public:
  /// Nonlinear mode: codebook {-1/2} U {2^-rho^k}, rho the smallest integer
  /// (at least 2 when lambda >= 3) with rho^(lambda-1) >= max_t.
  static WeightRealizer nonlinear(int lambda, int max_t);
  /// Linear mode: codebook {-1, 1/lambda, ..., (lambda-1)/lambda}, lambda a power of two.
  static WeightRealizer linear(int lambda, int max_t);

  const Codebook& codebook() const { return codebook_; }
  QuantMode mode() const { return codebook_.mode(); }
  int lambda() const { return codebook_.lambda(); }
  int radix() const { return radix_; }
  /// Largest resolution t accepted by apply (rho^(lambda-1) in nonlinear mode).
  int capacity() const { return capacity_; }

  /// Returns an expression equal to w' v, with w' the multiple of 2^-t nearest to w.
  /// `v` must lie in [-1, 1]; `v_nonnegative` drops the negative path. With
  /// `end_layer` set, the gated copies of v are delayed so that every chain ends
  /// on that layer (values relayed before the cascade instead of after it).
  Expr apply(GraphBuilder& g, const Expr& v, bool v_nonnegative, const Rational& w, int t,
             WeightGadgetInfo* info = nullptr, int end_layer = -1) const;

  /// Layer on which apply() ends its chains for input layer `v_layer` (no alignment).
  int natural_end_layer(int v_layer, const Rational& w, int t) const;

  /// Number of chained factors needed for 2^-k.
  int chain_length(int k) const;

 private:
  WeightRealizer(Codebook codebook, int radix, int capacity, int log2_lambda)
      : codebook_(std::move(codebook)),
        radix_(radix),
        capacity_(capacity),
        log2_lambda_(log2_lambda) {}

  std::vector<Rational> chain_factors(int k) const;

  Codebook codebook_;
  int radix_ = 0;
  int capacity_ = 0;
  int log2_lambda_ = 0;
};

/// Shared pieces of the bump functions h(3N x_k - 3m) of one builder.
class HBlockFactory {
 public:
  struct Outputs {
    Expr h;  ///< trapezoid: 1 on |u| <= 1, 2 - |u| on 1 < |u| < 2, 0 beyond
    Expr z;  ///< clamp(u / 2, -1, 1) = (3N/2)(x_k - m/N) wherever h > 0
  };

  HBlockFactory(GraphBuilder& g, int N);

  int N() const { return N_; }
  /// Bump along coordinate k centred at m/N; repeated calls share nodes.
  Outputs make(int k, int m);

 private:
  NodeId scaled_input(int k);
  NodeId power(int e);

  GraphBuilder& g_;
  int N_;
  std::map<int, NodeId> scaled_;
  std::map<int, NodeId> powers_;
  std::map<std::pair<int, int>, Outputs> made_;
};

struct GadgetNetwork {
  Network network;
  WeightGadgetInfo info;
};

Network build_g();
Network build_squaring(int r);
Network build_squaring_naive(int r);
Network build_abs();
Network build_multiplier(int r);
GadgetNetwork build_weight_gadget_nonlinear(const Rational& w, int t, int lambda);
GadgetNetwork build_weight_gadget_linear(const Rational& w, int t, int lambda);
/// One-input network computing h(3N x - 3m) on [0, 1].
Network build_h_block(int N, int m);

/// Closed-form references used by tests and the verifier.
Rational tent_value(const Rational& x);
Rational trapezoid_value(const Rational& u);

}  // namespace qnet
