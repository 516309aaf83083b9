#include "qnet/network.hpp"

#include <algorithm>
#include <cmath>

namespace qnet {

namespace {

void check_input(const Network& net, std::size_t size) {
  if (static_cast<int>(size) != net.input_dim) {
    throw InputError("expected " + std::to_string(net.input_dim) + " inputs, got " +
                     std::to_string(size));
  }
}

}  // namespace

std::vector<Rational> evaluate(const Network& net, std::span<const Rational> x,
                               EvalOptions options) {
  check_input(net, x.size());
  if (options.strict_domain) {
    for (const auto& xi : x) {
      if (xi < net.domain.lo || xi > net.domain.hi) {
        throw InputError("input " + format_rational(xi) + " outside the declared domain");
      }
    }
  }
  std::vector<Rational> prev(x.begin(), x.end());
  std::vector<Rational> next;
  Rational term;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    next.assign(layer.units.size(), Rational(0));
    for (std::size_t u = 0; u < layer.units.size(); ++u) {
      const Unit& unit = layer.units[u];
      Rational& acc = next[u];
      for (const Edge& e : unit.incoming) {
        if (e.source == kConstantUnit) {
          if (!layer.has_constant_unit) {
            throw MalformedNetwork("layer " + std::to_string(l + 1) +
                                   " references a missing constant unit");
          }
          term = net.codebook.value(e.weight_index);
        } else {
          if (e.source < 0 || e.source >= static_cast<int>(prev.size())) {
            throw MalformedNetwork("edge source out of range in layer " + std::to_string(l + 1));
          }
          const Rational& src = prev[static_cast<std::size_t>(e.source)];
          if (sgn(src) == 0) continue;
          term = net.codebook.value(e.weight_index) * src;
        }
        if (e.multiplicity != 1) term *= Rational(static_cast<long>(e.multiplicity));
        acc += term;
      }
      if (unit.activation == Activation::ReLU && acc < 0) acc = 0;
    }
    prev.swap(next);
  }
  return prev;
}

Rational eval(const Network& net, std::span<const Rational> x, EvalOptions options) {
  auto out = evaluate(net, x, options);
  if (out.size() != 1) throw InputError("eval requires a single-output network");
  return out.front();
}

Rational eval(const Network& net, const Rational& x, EvalOptions options) {
  return eval(net, std::span<const Rational>(&x, 1), options);
}

std::vector<double> evaluate_f64(const Network& net, std::span<const double> x) {
  check_input(net, x.size());
  for (double xi : x) {
    if (!std::isfinite(xi)) throw InputError("non-finite input");
  }
  std::vector<double> prev(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    next.assign(layer.units.size(), 0.0);
    for (std::size_t u = 0; u < layer.units.size(); ++u) {
      const Unit& unit = layer.units[u];
      double acc = 0.0;
      for (const Edge& e : unit.incoming) {
        double w = net.codebook.value_f64(e.weight_index) * static_cast<double>(e.multiplicity);
        if (e.source == kConstantUnit) {
          if (!layer.has_constant_unit) {
            throw MalformedNetwork("layer " + std::to_string(l + 1) +
                                   " references a missing constant unit");
          }
          acc += w;
        } else {
          if (e.source < 0 || e.source >= static_cast<int>(prev.size())) {
            throw MalformedNetwork("edge source out of range in layer " + std::to_string(l + 1));
          }
          acc += w * prev[static_cast<std::size_t>(e.source)];
        }
      }
      next[u] = (unit.activation == Activation::ReLU && acc < 0.0) ? 0.0 : acc;
    }
    prev.swap(next);
  }
  return prev;
}

double eval_f64(const Network& net, std::span<const double> x) {
  auto out = evaluate_f64(net, x);
  if (out.size() != 1) throw InputError("eval_f64 requires a single-output network");
  return out.front();
}

double eval_f64(const Network& net, double x) {
  return eval_f64(net, std::span<const double>(&x, 1));
}

CompiledNetwork::CompiledNetwork(const Network& net) : input_dim_(net.input_dim) {
  if (auto v = validate(net); !v.empty()) {
    throw MalformedNetwork("cannot compile an invalid network: " + v.front().message);
  }
  max_width_ = static_cast<std::size_t>(net.input_dim);
  for (const Layer& layer : net.layers) {
    FlatLayer fl{static_cast<std::uint32_t>(units_.size()), 0};
    for (const Unit& unit : layer.units) {
      FlatUnit fu{static_cast<std::uint32_t>(sources_.size()), 0,
                  unit.activation == Activation::ReLU};
      for (const Edge& e : unit.incoming) {
        sources_.push_back(e.source);
        weights_.push_back(net.codebook.value_f64(e.weight_index) *
                           static_cast<double>(e.multiplicity));
      }
      fu.end = static_cast<std::uint32_t>(sources_.size());
      units_.push_back(fu);
    }
    fl.unit_end = static_cast<std::uint32_t>(units_.size());
    layers_.push_back(fl);
    max_width_ = std::max(max_width_, layer.units.size());
  }
}

void CompiledNetwork::eval_batch(std::span<const double> points, std::span<double> out) const {
  constexpr std::size_t kBlock = 32;
  const std::size_t count = out.size();
  if (points.size() != count * static_cast<std::size_t>(input_dim_)) {
    throw InputError("batch size does not match the input dimension");
  }
  std::vector<double> prev(max_width_ * kBlock);
  std::vector<double> next(max_width_ * kBlock);
  for (std::size_t start = 0; start < count; start += kBlock) {
    const std::size_t b = std::min(kBlock, count - start);
    for (int i = 0; i < input_dim_; ++i) {
      for (std::size_t p = 0; p < b; ++p) {
        prev[static_cast<std::size_t>(i) * kBlock + p] =
            points[(start + p) * static_cast<std::size_t>(input_dim_) + static_cast<std::size_t>(i)];
      }
    }
    for (const FlatLayer& layer : layers_) {
      for (std::uint32_t u = layer.unit_begin; u < layer.unit_end; ++u) {
        const FlatUnit& fu = units_[u];
        double* acc = &next[(u - layer.unit_begin) * kBlock];
        std::fill(acc, acc + kBlock, 0.0);
        for (std::uint32_t e = fu.begin; e < fu.end; ++e) {
          const double w = weights_[e];
          if (sources_[e] < 0) {
            for (std::size_t p = 0; p < kBlock; ++p) acc[p] += w;
          } else {
            const double* src = &prev[static_cast<std::size_t>(sources_[e]) * kBlock];
            for (std::size_t p = 0; p < kBlock; ++p) acc[p] += w * src[p];
          }
        }
        if (fu.relu) {
          for (std::size_t p = 0; p < kBlock; ++p) acc[p] = acc[p] < 0.0 ? 0.0 : acc[p];
        }
      }
      prev.swap(next);
    }
    for (std::size_t p = 0; p < b; ++p) out[start + p] = prev[p];
  }
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Layering: return "LayeringViolation";
    case ViolationKind::Codebook: return "CodebookViolation";
    case ViolationKind::Activation: return "ActivationViolation";
    case ViolationKind::Multiplicity: return "MultiplicityViolation";
    case ViolationKind::Shape: return "ShapeViolation";
    case ViolationKind::ConstantUnit: return "ConstantUnitViolation";
  }
  return "UnknownViolation";
}

std::vector<Violation> validate(const Network& net) {
  std::vector<Violation> out;
  if (net.input_dim < 1) out.push_back({ViolationKind::Shape, -1, -1, "input_dim must be >= 1"});
  if (net.layers.empty()) {
    out.push_back({ViolationKind::Shape, -1, -1, "network has no output layer"});
    return out;
  }
  if (net.codebook.lambda() < 2) {
    out.push_back({ViolationKind::Codebook, -1, -1, "codebook needs at least two values"});
  }
  int prev_size = net.input_dim;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const bool is_output = l + 1 == net.layers.size();
    const int li = static_cast<int>(l + 1);
    if (layer.units.empty()) out.push_back({ViolationKind::Shape, li, -1, "empty layer"});
    for (std::size_t u = 0; u < layer.units.size(); ++u) {
      const Unit& unit = layer.units[u];
      const int ui = static_cast<int>(u);
      const Activation expected = is_output ? Activation::Identity : Activation::ReLU;
      if (unit.activation != expected) {
        out.push_back({ViolationKind::Activation, li, ui,
                       is_output ? "output unit must be identity" : "hidden unit must be ReLU"});
      }
      for (const Edge& e : unit.incoming) {
        if (e.source == kConstantUnit) {
          if (!layer.has_constant_unit) {
            out.push_back({ViolationKind::ConstantUnit, li, ui,
                           "bias edge without a constant unit in the previous layer"});
          }
        } else if (e.source < 0 || e.source >= prev_size) {
          out.push_back({ViolationKind::Layering, li, ui,
                         "edge source " + std::to_string(e.source) +
                             " is not a unit of the previous layer"});
        }
        if (e.weight_index < 0 || e.weight_index >= net.codebook.lambda()) {
          out.push_back({ViolationKind::Codebook, li, ui,
                         "weight index " + std::to_string(e.weight_index) +
                             " is not in the codebook"});
        }
        if (e.multiplicity < 1) {
          out.push_back({ViolationKind::Multiplicity, li, ui, "multiplicity must be >= 1"});
        }
      }
    }
    prev_size = static_cast<int>(layer.units.size());
  }
  return out;
}

ComplexityReport complexity(const Network& net) {
  ComplexityReport report;
  report.depth = static_cast<int>(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    int width = static_cast<int>(layer.units.size());
    if (l + 1 < net.layers.size() && net.layers[l + 1].has_constant_unit) ++width;
    report.max_width = std::max(report.max_width, width);
    for (const Unit& unit : layer.units) {
      for (const Edge& e : unit.incoming) {
        report.weight_count += e.multiplicity;
        if (e.source == kConstantUnit) report.bias_weight_count += e.multiplicity;
      }
    }
  }
  report.bit_width = net.codebook.bit_width();
  report.memory_bits = report.weight_count * report.bit_width;
  return report;
}

}  // namespace qnet
