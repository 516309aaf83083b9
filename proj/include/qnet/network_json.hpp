#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qnet/network.hpp"

namespace qnet {

inline constexpr int kNetworkSchemaVersion = 1;

/// Raised when a serialized artifact cannot be turned into a valid network.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json network_to_json(const Network& net);
/// Parses and validates; throws ArtifactError on any structural problem.
Network network_from_json(const nlohmann::json& doc);

std::string to_json(const Network& net);
Network from_json(const std::string& text);

nlohmann::json complexity_to_json(const ComplexityReport& report);

}  // namespace qnet
