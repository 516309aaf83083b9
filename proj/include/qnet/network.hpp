#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnet/codebook.hpp"
#include "qnet/rational.hpp"

namespace qnet {

/// Source index that denotes the always-1 unit of the previous layer.
inline constexpr int kConstantUnit = -1;

enum class Activation { ReLU, Identity };

struct Edge {
  int source = 0;  ///< index into the previous layer, or kConstantUnit
  int weight_index = 0;
  std::int64_t multiplicity = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Unit {
  Activation activation = Activation::ReLU;
  std::vector<Edge> incoming;

  friend bool operator==(const Unit&, const Unit&) = default;
};

struct Layer {
  std::vector<Unit> units;
  /// Whether the previous layer carries a constant unit feeding biases here.
  bool has_constant_unit = false;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Closed box [lo, hi]^d the network is meant to be evaluated on.
struct InputDomain {
  Rational lo = 0;
  Rational hi = 1;

  friend bool operator==(const InputDomain&, const InputDomain&) = default;
};

/// Strictly layered feedforward ReLU network whose weights are codebook indices.
/// Layer 0 is the input; `layers` holds every layer that owns weights.
struct Network {
  Codebook codebook;
  int input_dim = 1;
  InputDomain domain;
  std::vector<Layer> layers;

  int output_dim() const {
    return layers.empty() ? input_dim : static_cast<int>(layers.back().units.size());
  }

  friend bool operator==(const Network&, const Network&) = default;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MalformedNetwork : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalOptions {
  /// Reject inputs outside the network's declared domain.
  bool strict_domain = false;
};

std::vector<Rational> evaluate(const Network& net, std::span<const Rational> x,
                               EvalOptions options = {});
/// Exact forward pass of a single-output network.
Rational eval(const Network& net, std::span<const Rational> x, EvalOptions options = {});
Rational eval(const Network& net, const Rational& x, EvalOptions options = {});

std::vector<double> evaluate_f64(const Network& net, std::span<const double> x);
double eval_f64(const Network& net, std::span<const double> x);
double eval_f64(const Network& net, double x);

/// Flattened float program for repeated evaluation of one network on many points.
class CompiledNetwork {
 public:
  explicit CompiledNetwork(const Network& net);

  int input_dim() const { return input_dim_; }
  /// Evaluates `count` points stored row-major in `points` (count * input_dim
  /// values); writes the first output of each point to `out`.
  void eval_batch(std::span<const double> points, std::span<double> out) const;

 private:
  struct FlatUnit {
    std::uint32_t begin;
    std::uint32_t end;
    bool relu;
  };
  struct FlatLayer {
    std::uint32_t unit_begin;
    std::uint32_t unit_end;
  };
  int input_dim_ = 1;
  std::size_t max_width_ = 1;
  std::vector<FlatLayer> layers_;
  std::vector<FlatUnit> units_;
  std::vector<std::int32_t> sources_;  // -1 = constant
  std::vector<double> weights_;        // weight * multiplicity
};

enum class ViolationKind { Layering, Codebook, Activation, Multiplicity, Shape, ConstantUnit };

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int layer = -1;
  int unit = -1;
  std::string message;
};

/// Every broken structural invariant; empty means the network is well formed.
std::vector<Violation> validate(const Network& net);

struct ComplexityReport {
  int depth = 0;
  int max_width = 0;
  std::int64_t weight_count = 0;
  std::int64_t bias_weight_count = 0;  ///< part of weight_count fed by constant units
  std::int64_t memory_bits = 0;
  int bit_width = 0;
  std::vector<std::pair<std::string, double>> predicted;
};

ComplexityReport complexity(const Network& net);

}  // namespace qnet
