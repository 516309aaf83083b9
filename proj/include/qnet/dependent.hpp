#pragma once

#include <string>
#include <vector>

#include "qnet/gadgets.hpp"
#include "qnet/independent.hpp"
#include "qnet/target_function.hpp"

namespace qnet {

enum class Strategy { InterpolationOnly, Cached };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);

/// Hyper-parameters of the function-dependent construction (d = n = 1).
struct DependentPlan {
  Rational epsilon;
  int lambda = 2;
  QuantMode mode = QuantMode::Nonlinear;
  Strategy strategy = Strategy::InterpolationOnly;
  int m = 0;  ///< cache granularity ceil(log2(1/eps) / 2)
  int t = 0;  ///< ceil(log2 m)
  Rational delta;  ///< 1/(8m)
  int T = 0;  ///< ceil(8 / (eps log2(1/eps)))
  int T_interp = 0;  ///< ceil(1/eps)
  int t_interp = 0;  ///< ceil(log2(1/eps)), raised if the interpolation alone would use up eps
  std::vector<std::pair<std::string, double>> predicted;

  int intervals() const { return strategy == Strategy::Cached ? T : T_interp; }
  int bits() const { return strategy == Strategy::Cached ? t : t_interp; }
  /// Pieces per cached residual function.
  int pieces() const { return 1 << (t + 1); }
  /// Filter ramp width 2^-(t+3) in local interval coordinates (at most delta).
  Rational margin() const { return pow2(-(t + 3)); }
  /// 1 / (8 T 2^t) for the strategy in use.
  Rational grid_spacing() const { return Rational(1) / (Rational(8 * intervals()) * pow2(bits())); }
};

DependentPlan plan_dependent(const Rational& epsilon, int lambda, QuantMode mode,
                             Strategy strategy);

/// v_i = ceil(T f(i/T) 2^t) 2^-t / T for i = 0..T.
std::vector<Rational> ftilde_breakpoints(const TargetFunction& f, int t, int T);

/// Point where the slope +-1 segment leaving v_i meets f+ on interval i, located
/// by bisection to 2^-40 of the interval width. Throws std::domain_error when
/// the gap does not change sign (violated Lipschitz certificate).
double ftilde_crossing(const TargetFunction& f, int t, int T, int i);

/// f~(x) using the bisection crossing.
double ftilde_eval(const TargetFunction& f, int t, int T, double x);

/// f~(x) in closed form (min/max of the slope segment and f+), exact when f
/// has an exact oracle.
Rational ftilde_eval_exact(const TargetFunction& f, int t, int T, const Rational& x);

struct DependentBuild {
  Network network;
  int scale_bits = 0;      ///< resolution of the final scaling gadgets
  int cached_functions = 0;  ///< distinct nonzero residual patterns (Cached only)
  double residual_fit_error = 0;  ///< worst knot mismatch of the cached residuals, in x units
};

double predicted_dependent_weights(const DependentPlan& plan);

DependentBuild build_dependent(const TargetFunction& f, const DependentPlan& plan,
                               double weight_cap = kDefaultWeightCap);

}  // namespace qnet
