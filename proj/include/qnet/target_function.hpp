#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnet/rational.hpp"

namespace qnet {

/// Multi-index of partial derivative orders, one entry per coordinate.
using MultiIndex = std::vector<int>;

/// A target f on [0,1]^d with derivative access for Taylor coefficients.
struct TargetFunction {
  std::string name;
  int d = 1;
  /// Largest Sobolev order n for which f is certified in the unit ball F_{d,n}.
  int max_order = 1;
  std::function<double(std::span<const double>)> eval;
  /// Partial derivative D^alpha f at a point; may be empty (see with_finite_differences).
  std::function<double(const MultiIndex&, std::span<const double>)> partial;
  /// Optional exact oracles over rationals.
  std::function<Rational(std::span<const Rational>)> exact;
  std::function<Rational(const MultiIndex&, std::span<const Rational>)> exact_partial;
  /// Asserts ess sup |D^alpha f| <= 1 for all |alpha| <= max_order.
  bool lipschitz_certificate = true;
  /// Absolute error bound of `partial` for orders >= 1 (zero for closed forms).
  double derivative_error = 0.0;
  /// Sorted kink locations for piecewise-linear targets (d = 1).
  std::vector<Rational> kinks;

  double operator()(std::span<const double> x) const { return eval(x); }
  double operator()(double x) const { return eval(std::span<const double>(&x, 1)); }
  Rational exact_at(const Rational& x) const;
};

/// Central-difference partials with step 2^-20, allowed for orders n <= 2 only
/// (so at most first derivatives are differenced). Sets derivative_error.
TargetFunction with_finite_differences(TargetFunction f);

/// Lipschitz-1 piecewise-linear function on [0,1] with `kinks` interior kinks,
/// slopes and kink positions on the 1/1024 lattice, centred so |f| <= 1/2.
TargetFunction random_piecewise_linear(std::uint64_t seed, int kinks = 7);

/// Piecewise-linear function through (xs[i], ys[i]) with exact oracle.
TargetFunction piecewise_linear(std::string name, std::vector<Rational> xs,
                                std::vector<Rational> ys);

/// Registry: "zero", "linear:x", "linear:x_half", "poly:x2_half", "poly:xy_half",
/// "abs_shift", "pl:seed=K"; a "fd:" prefix swaps in finite-difference partials.
/// `d` is required for "zero" and checked against fixed-dimension functions.
TargetFunction make_function(const std::string& spec, int d);

std::vector<std::string> registered_functions();

}  // namespace qnet
