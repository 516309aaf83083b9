#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnet/rational.hpp"

namespace qnet {

enum class QuantMode { Nonlinear, Linear };

std::string to_string(QuantMode mode);
QuantMode parse_quant_mode(const std::string& text);

/// One stored connection: `multiplicity` parallel edges carrying codebook entry `weight_index`.
struct WeightUse {
  int weight_index = 0;
  std::int64_t multiplicity = 1;

  friend bool operator==(const WeightUse&, const WeightUse&) = default;
};

/// The table of admissible weight values. A network stores indices into it,
/// so each weight costs ceil(log2 lambda) bits.
class Codebook {
 public:
  Codebook() = default;

  /// {-1, 1/lambda, ..., (lambda-1)/lambda}.
  static Codebook linear(int lambda);
  /// Arbitrary distinct values chosen by the builder.
  static Codebook nonlinear(std::vector<Rational> values);
  /// {-1/2} together with W = {2^-1, 2^-radix, 2^-radix^2, ..., 2^-radix^(lambda-2)}.
  static Codebook radix(int lambda, int radix);
  /// {1/2, -1/2}.
  static Codebook half_pair();

  QuantMode mode() const { return mode_; }
  int lambda() const { return static_cast<int>(values_.size()); }
  int bit_width() const;
  const std::vector<Rational>& values() const { return values_; }
  const Rational& value(int index) const { return values_.at(static_cast<std::size_t>(index)); }
  double value_f64(int index) const { return values_f64_.at(static_cast<std::size_t>(index)); }
  std::optional<int> index_of(const Rational& value) const;

  /// Expresses `coefficient` as a sum of codebook values with multiplicities
  /// (parallel edges from one source). Throws std::domain_error when the
  /// greedy decomposition cannot reach the value exactly.
  std::vector<WeightUse> decompose(const Rational& coefficient) const;

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.mode_ == b.mode_ && a.values_ == b.values_;
  }

 private:
  Codebook(QuantMode mode, std::vector<Rational> values);

  QuantMode mode_ = QuantMode::Nonlinear;
  std::vector<Rational> values_;
  std::vector<double> values_f64_;
};

}  // namespace qnet
