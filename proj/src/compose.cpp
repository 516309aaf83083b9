#include "qnet/compose.hpp"

#include <stdexcept>

#include "qnet/graph.hpp"

namespace qnet {

namespace {

std::int64_t weights_of(const Network& net) { return complexity(net).weight_count; }

void require_valid(const Network& net, const char* what) {
  if (auto v = validate(net); !v.empty()) {
    throw MalformedNetwork(std::string(what) + ": " + v.front().message);
  }
}

std::vector<Edge> negated(const Codebook& codebook, const std::vector<Edge>& edges) {
  std::vector<Edge> out;
  for (const Edge& e : edges) {
    Rational w = -codebook.value(e.weight_index) * Rational(static_cast<long>(e.multiplicity));
    for (const auto& use : codebook.decompose(w)) {
      out.push_back(Edge{e.source, use.weight_index, use.multiplicity});
    }
  }
  return out;
}

// Turns the identity output layer into ReLU units; output o is carried as
// units pair[o] (sign +1) and optionally pair[o] + 1 (sign -1).
std::vector<std::pair<int, bool>> split_outputs(const Codebook& codebook, Layer& out_layer,
                                                bool nonnegative) {
  std::vector<Unit> units;
  std::vector<std::pair<int, bool>> map;
  for (const Unit& u : out_layer.units) {
    map.emplace_back(static_cast<int>(units.size()), !nonnegative);
    units.push_back(Unit{Activation::ReLU, u.incoming});
    if (!nonnegative) units.push_back(Unit{Activation::ReLU, negated(codebook, u.incoming)});
  }
  out_layer.units = std::move(units);
  return map;
}

std::vector<Edge> carried(const Codebook& codebook, int unit, bool split, const Rational& coef) {
  std::vector<Edge> out;
  for (const auto& use : codebook.decompose(coef)) {
    out.push_back(Edge{unit, use.weight_index, use.multiplicity});
  }
  if (split) {
    for (const auto& use : codebook.decompose(-coef)) {
      out.push_back(Edge{unit + 1, use.weight_index, use.multiplicity});
    }
  }
  return out;
}

}  // namespace

Composed compose_serial(const Network& a, const Network& b, bool a_nonnegative) {
  if (a.output_dim() != b.input_dim) {
    throw std::invalid_argument("serial composition: output_dim " +
                                std::to_string(a.output_dim()) + " != input_dim " +
                                std::to_string(b.input_dim));
  }
  if (!(a.codebook == b.codebook)) {
    throw std::invalid_argument("serial composition requires a shared codebook");
  }
  if (a.layers.empty() || b.layers.empty()) {
    throw std::invalid_argument("serial composition of an empty network");
  }
  require_valid(a, "serial composition");
  require_valid(b, "serial composition");

  Network out = a;
  auto map = split_outputs(a.codebook, out.layers.back(), a_nonnegative);
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    Layer layer = b.layers[l];
    if (l == 0) {
      for (Unit& u : layer.units) {
        std::vector<Edge> edges;
        for (const Edge& e : u.incoming) {
          if (e.source == kConstantUnit) {
            edges.push_back(e);
            continue;
          }
          auto [base, split] = map[static_cast<std::size_t>(e.source)];
          edges.push_back(Edge{base, e.weight_index, e.multiplicity});
          if (split) {
            Rational w =
                -b.codebook.value(e.weight_index) * Rational(static_cast<long>(e.multiplicity));
            for (const auto& use : b.codebook.decompose(w)) {
              edges.push_back(Edge{base + 1, use.weight_index, use.multiplicity});
            }
          }
        }
        u.incoming = std::move(edges);
      }
    }
    out.layers.push_back(std::move(layer));
  }
  Composed result{std::move(out), 0};
  result.glue_weights = weights_of(result.network) - weights_of(a) - weights_of(b);
  return result;
}

Composed compose_parallel(std::span<const Network> nets) {
  if (nets.empty()) throw std::invalid_argument("parallel composition of an empty list");
  const Network& first = nets.front();
  std::size_t depth = 0;
  std::int64_t parts = 0;
  for (const Network& n : nets) {
    if (n.input_dim != first.input_dim) {
      throw std::invalid_argument("parallel composition: input dimensions differ");
    }
    if (!(n.codebook == first.codebook)) {
      throw std::invalid_argument("parallel composition requires a shared codebook");
    }
    if (n.layers.empty()) throw std::invalid_argument("parallel composition of an empty network");
    require_valid(n, "parallel composition");
    depth = std::max(depth, n.layers.size());
    parts += weights_of(n);
  }

  Network out;
  out.codebook = first.codebook;
  out.input_dim = first.input_dim;
  out.domain = first.domain;
  out.layers.resize(depth);
  std::vector<int> offset(depth, 0);  // per layer, for the member being merged

  for (const Network& n : nets) {
    Network padded = n;
    if (padded.layers.size() < depth) {
      auto map = split_outputs(padded.codebook, padded.layers.back(), false);
      for (std::size_t l = padded.layers.size(); l < depth; ++l) {
        Layer next;
        const bool last = l + 1 == depth;
        int idx = 0;
        std::vector<std::pair<int, bool>> next_map;
        for (auto [base, split] : map) {
          if (last) {
            next.units.push_back(
                Unit{Activation::Identity, carried(padded.codebook, base, split, Rational(1))});
          } else {
            next_map.emplace_back(idx, split);
            for (int s = 0; s < (split ? 2 : 1); ++s) {
              next.units.push_back(
                  Unit{Activation::ReLU, carried(padded.codebook, base + s, false, Rational(1))});
              ++idx;
            }
          }
        }
        map = std::move(next_map);
        padded.layers.push_back(std::move(next));
      }
    }
    for (std::size_t l = 0; l < depth; ++l) {
      Layer& dst = out.layers[l];
      const int src_offset = l == 0 ? 0 : offset[l - 1];
      for (Unit u : padded.layers[l].units) {
        for (Edge& e : u.incoming) {
          if (e.source != kConstantUnit) e.source += src_offset;
        }
        dst.units.push_back(std::move(u));
      }
      dst.has_constant_unit = dst.has_constant_unit || padded.layers[l].has_constant_unit;
    }
    for (std::size_t l = 0; l < depth; ++l) {
      offset[l] = static_cast<int>(out.layers[l].units.size());
    }
  }
  Composed result{std::move(out), 0};
  result.glue_weights = weights_of(result.network) - parts;
  return result;
}

Network append_layer(const Network& net, Layer layer) {
  Network out = net;
  out.layers.push_back(std::move(layer));
  require_valid(out, "append_layer");
  return out;
}

Network identity_network(const Codebook& codebook, int input_dim, InputDomain domain) {
  GraphBuilder g(codebook, input_dim, domain);
  std::vector<Expr> outs;
  for (int i = 0; i < input_dim; ++i) {
    Expr x = g.input(i);
    if (domain.lo < 0) {
      outs.push_back(g.relu_expr(x) - g.relu_expr(-x));
    } else {
      outs.push_back(g.relu_expr(x));
    }
  }
  return g.build(outs);
}

}  // namespace qnet
