#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qnet/network.hpp"
#include "qnet/target_function.hpp"

namespace qnet {

struct Certificate {
  Rational grid_spacing;
  double measured_sup_error = 0;
  double certified_sup_error = 0;
  double target_epsilon = 0;
  bool pass = false;
  double slope_bound = 0;  ///< combined Lipschitz bound of f and the network
  std::vector<double> argmax;
  std::int64_t points = 0;
  /// |float - exact| at the argmax (negative when the exact audit was skipped).
  double audit_gap = -1;
};

struct SupErrorOptions {
  /// Lipschitz bound of the network; measured from grid secants when absent.
  std::optional<double> network_lipschitz;
  /// Lipschitz bound of f (1 for certified targets).
  double function_lipschitz = 1.0;
  std::int64_t max_points = 50'000'000;
  /// Exact re-evaluation of the argmax (skipped above this many weights).
  std::int64_t exact_audit_max_weights = 5'000'000;
};

Certificate sup_error(const Network& net, const TargetFunction& f, const Rational& grid_spacing,
                      double target_epsilon, const SupErrorOptions& options = {});

nlohmann::json certificate_to_json(const Certificate& c);

/// Exact piecewise-linear interpolant through sorted (x, y) pairs. Shares no
/// code with the network evaluators. Throws std::invalid_argument when the
/// abscissae are not strictly increasing.
std::function<Rational(const Rational&)> reference_interp_oracle(
    std::vector<std::pair<Rational, Rational>> breakpoints);

struct PropertyResult {
  std::string module;
  std::string name;
  std::int64_t cases = 0;
  std::int64_t failures = 0;
  double worst = 0;  ///< largest observed value of the checked quantity
  double limit = 0;  ///< bound it is checked against
  bool passed() const { return failures == 0; }
  double slack() const { return limit - worst; }
};

struct SuiteSizes {
  int random_points = 200;
  int random_functions = 10;
  int max_r = 4;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<PropertyResult> properties;
  bool mutation_detected = false;
  bool all_passed() const;
};

SuiteReport run_property_suite(std::uint64_t seed, const SuiteSizes& sizes = {});
nlohmann::json suite_to_json(const SuiteReport& report);
std::string suite_to_table(const SuiteReport& report);

/// Properties that catch a broken squaring network (used for mutation testing).
std::vector<PropertyResult> squaring_properties(const Network& net, int r);

/// Copy of `net` with the sign of one non-bias edge weight flipped (first
/// edge whose negated value is in the codebook, scanning from `start_layer`).
Network flip_one_weight(const Network& net, int start_layer = 0);

}  // namespace qnet
