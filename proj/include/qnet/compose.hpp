#pragma once

#include <cstdint>
#include <span>

#include "qnet/network.hpp"

namespace qnet {

/// Result of a combinator together with the edges it had to add.
struct Composed {
  Network network;
  /// weight_count(result) minus the weight counts of the parts.
  std::int64_t glue_weights = 0;
};

/// Feeds the outputs of `a` into the inputs of `b`. Each identity output of `a`
/// becomes a ReLU pair (e, -e) so signed values survive the activation, unless
/// `a_nonnegative` promises the outputs never go below zero.
Composed compose_serial(const Network& a, const Network& b, bool a_nonnegative = false);

/// Runs the networks side by side on shared inputs and concatenates their
/// outputs. Shallower members are extended with relay units.
Composed compose_parallel(std::span<const Network> nets);

/// Appends one more weighted layer; throws if the result is invalid.
Network append_layer(const Network& net, Layer layer);

/// Depth-2 network returning its inputs unchanged.
Network identity_network(const Codebook& codebook, int input_dim, InputDomain domain = {});

}  // namespace qnet
