#include "qnet/network_json.hpp"

namespace qnet {

using nlohmann::json;

json network_to_json(const Network& net) {
  json values = json::array();
  for (const auto& v : net.codebook.values()) values.push_back(format_rational(v));
  json layers = json::array();
  for (const Layer& layer : net.layers) {
    json units = json::array();
    for (const Unit& unit : layer.units) {
      json in = json::array();
      for (const Edge& e : unit.incoming) in.push_back({e.source, e.weight_index, e.multiplicity});
      units.push_back({{"act", unit.activation == Activation::ReLU ? "relu" : "identity"},
                       {"in", std::move(in)}});
    }
    layers.push_back({{"has_constant_unit", layer.has_constant_unit}, {"units", std::move(units)}});
  }
  return {{"schema_version", kNetworkSchemaVersion},
          {"codebook", {{"mode", to_string(net.codebook.mode())}, {"values", std::move(values)}}},
          {"input_dim", net.input_dim},
          {"domain", {format_rational(net.domain.lo), format_rational(net.domain.hi)}},
          {"layers", std::move(layers)}};
}

Network network_from_json(const json& doc) {
  Network net;
  try {
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != kNetworkSchemaVersion) {
      throw ArtifactError("unsupported network schema version");
    }
    const json& cb = doc.at("codebook");
    std::vector<Rational> values;
    for (const auto& v : cb.at("values")) values.push_back(parse_rational(v.get<std::string>()));
    QuantMode mode = parse_quant_mode(cb.at("mode").get<std::string>());
    if (mode == QuantMode::Linear) {
      net.codebook = Codebook::linear(static_cast<int>(values.size()));
      if (net.codebook.values() != values) {
        throw ArtifactError("linear codebook values do not match {-1, 1/l, ..., (l-1)/l}");
      }
    } else {
      net.codebook = Codebook::nonlinear(std::move(values));
    }
    net.input_dim = doc.at("input_dim").get<int>();
    if (doc.contains("domain")) {
      net.domain.lo = parse_rational(doc.at("domain").at(0).get<std::string>());
      net.domain.hi = parse_rational(doc.at("domain").at(1).get<std::string>());
    }
    for (const auto& jl : doc.at("layers")) {
      Layer layer;
      bool uses_constant = false;
      for (const auto& ju : jl.at("units")) {
        Unit unit;
        const std::string act = ju.at("act").get<std::string>();
        if (act == "relu") {
          unit.activation = Activation::ReLU;
        } else if (act == "identity") {
          unit.activation = Activation::Identity;
        } else {
          throw ArtifactError("unknown activation '" + act + "'");
        }
        for (const auto& je : ju.at("in")) {
          if (!je.is_array() || je.size() != 3) throw ArtifactError("edge must be [src, widx, mult]");
          Edge e{je.at(0).get<int>(), je.at(1).get<int>(), je.at(2).get<std::int64_t>()};
          uses_constant = uses_constant || e.source == kConstantUnit;
          unit.incoming.push_back(e);
        }
        layer.units.push_back(std::move(unit));
      }
      layer.has_constant_unit =
          jl.contains("has_constant_unit") ? jl.at("has_constant_unit").get<bool>() : uses_constant;
      net.layers.push_back(std::move(layer));
    }
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("malformed network document: ") + e.what());
  }
  if (auto violations = validate(net); !violations.empty()) {
    std::string msg = "invalid network: " + to_string(violations.front().kind) + ": " +
                      violations.front().message;
    throw ArtifactError(msg);
  }
  return net;
}

std::string to_json(const Network& net) { return network_to_json(net).dump(); }

Network from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArtifactError(std::string("malformed network document: ") + e.what());
  }
  return network_from_json(doc);
}

json complexity_to_json(const ComplexityReport& report) {
  json predicted = json::object();
  for (const auto& [name, value] : report.predicted) predicted[name] = value;
  return {{"depth", report.depth},
          {"max_width", report.max_width},
          {"weight_count", report.weight_count},
          {"bias_weight_count", report.bias_weight_count},
          {"weight_count_without_biases", report.weight_count - report.bias_weight_count},
          {"bit_width", report.bit_width},
          {"memory_bits", report.memory_bits},
          {"predicted", std::move(predicted)}};
}

}  // namespace qnet
