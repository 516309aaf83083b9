#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnet/gadgets.hpp"
#include "qnet/target_function.hpp"

namespace qnet {

class ResourceCapExceeded : public std::runtime_error {
 public:
  ResourceCapExceeded(const std::string& what, double predicted)
      : std::runtime_error(what), predicted_(predicted) {}
  double predicted() const { return predicted_; }

 private:
  double predicted_;
};

inline constexpr double kDefaultWeightCap = 1e8;

/// Parameters of the function-independent construction.
struct IndependentPlan {
  int d = 1;
  int n = 1;
  Rational epsilon;
  int lambda = 2;
  QuantMode mode = QuantMode::Nonlinear;
  int N = 0;  ///< grid size, c * d^2
  int c = 0;
  int r = 0;  ///< multiplier refinement
  int t = 0;  ///< coefficient resolution
  /// 2^s >= 3N/2: bits absorbed by each (2/(3N)) monomial factor.
  int s = 0;
  /// Extra resolution bits that keep the coefficient rounding inside the error slack.
  int guard_bits = 0;
  /// Dominant-term predictions (name -> value).
  std::vector<std::pair<std::string, double>> predicted;

  /// Resolution for a coefficient of a monomial of total degree `degree`.
  int coefficient_bits(int degree) const { return t + guard_bits + degree * s; }
};

struct ErrorBudget {
  Rational taylor;
  Rational multiplier;
  Rational weights;  ///< coefficient rounding inside the weight gadgets
  Rational derivatives;  ///< finite-difference contribution, if any
  Rational total;
};

IndependentPlan plan_independent(int d, int n, const Rational& epsilon, int lambda, QuantMode mode);

/// All multi-indices of total order <= max_order in d coordinates, graded order.
std::vector<MultiIndex> multi_indices(int d, int max_order);

/// Grid points m in {0..N}^d, last coordinate fastest.
std::vector<std::vector<int>> grid_points(int d, int N);

using CoefficientKey = std::pair<std::vector<int>, MultiIndex>;

/// beta_{m,alpha} = D^alpha f(m/N) / alpha! rounded to multiples of (1/n)(d/N)^(n-|alpha|).
std::map<CoefficientKey, Rational> taylor_coeffs(const TargetFunction& f, const IndependentPlan& plan);

ErrorBudget error_budget(const IndependentPlan& plan, double derivative_error = 0.0);

/// Predicted weight count of build_independent (an upper estimate).
double predicted_weight_count(const IndependentPlan& plan);

struct IndependentBuild {
  Network network;
  std::int64_t terms = 0;  ///< nonzero coefficient terms combined at the output
};

IndependentBuild build_independent(const TargetFunction& f, const IndependentPlan& plan,
                                   double weight_cap = kDefaultWeightCap);

/// Standalone network for one block: approximates psi_m(x) z(x)^alpha, where
/// z_k = (3N/2)(x_k - m_k/N) on the support of psi_m.
Network build_block_network(const IndependentPlan& plan, const std::vector<int>& m,
                            const MultiIndex& alpha);

/// Exact value of psi_m(x) z(x)^alpha (the block target).
Rational block_target(const IndependentPlan& plan, const std::vector<int>& m,
                      const MultiIndex& alpha, std::span<const Rational> x);

/// Per-block error bound (d + |alpha|) * 6 * 2^(-2(r+1)).
Rational block_error_bound(const IndependentPlan& plan, const MultiIndex& alpha);

/// Error bound 6 * 2^(-2(r+1)) of one approximate product.
Rational multiplier_error(int r);

}  // namespace qnet
