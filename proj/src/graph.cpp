#include "qnet/graph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace qnet {

Expr Expr::of(NodeId node, const Rational& coef) {
  Expr e;
  if (sgn(coef) != 0) e.terms_.push_back({node, coef});
  return e;
}

std::vector<Term> Expr::normalized_terms() const {
  std::vector<Term> sorted = terms_;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Term& a, const Term& b) { return a.node < b.node; });
  std::vector<Term> out;
  for (auto& t : sorted) {
    if (!out.empty() && out.back().node == t.node) {
      out.back().coef += t.coef;
    } else {
      out.push_back(std::move(t));
    }
  }
  std::erase_if(out, [](const Term& t) { return sgn(t.coef) == 0; });
  return out;
}

bool Expr::is_constant() const { return normalized_terms().empty(); }

Expr& Expr::operator+=(const Expr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

Expr& Expr::operator-=(const Expr& other) {
  for (const auto& t : other.terms_) terms_.push_back({t.node, -t.coef});
  constant_ -= other.constant_;
  return *this;
}

Expr& Expr::operator*=(const Rational& scale) {
  if (sgn(scale) == 0) {
    terms_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& t : terms_) t.coef *= scale;
  constant_ *= scale;
  return *this;
}

GraphBuilder::GraphBuilder(Codebook codebook, int input_dim, InputDomain domain)
    : codebook_(std::move(codebook)),
      input_dim_(input_dim),
      domain_(std::move(domain)),
      signed_inputs_(domain_.lo < 0) {
  if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
  nodes_.resize(static_cast<std::size_t>(input_dim));
}

Expr GraphBuilder::input(int i) const {
  if (i < 0 || i >= input_dim_) throw std::out_of_range("input index");
  return Expr::of(i);
}

int GraphBuilder::layer_of(const Expr& e) const {
  int layer = 0;
  for (const auto& t : e.normalized_terms()) layer = std::max(layer, layer_of(t.node));
  return layer;
}

NodeId GraphBuilder::relu(const Expr& e) {
  Node node;
  node.in = e.normalized_terms();
  node.constant = e.constant();
  for (const auto& t : node.in) {
    if (t.node < 0 || t.node >= static_cast<NodeId>(nodes_.size())) {
      throw std::out_of_range("expression references an unknown node");
    }
    node.layer = std::max(node.layer, nodes_[static_cast<std::size_t>(t.node)].layer);
  }
  node.layer += 1;
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

namespace {

struct Signed {
  int unit;
  int sign;
};

}  // namespace

Network GraphBuilder::build(std::span<const Expr> outputs) const {
  if (outputs.empty()) throw std::invalid_argument("at least one output is required");

  std::vector<std::vector<Term>> out_terms;
  int top = 0;
  for (const auto& e : outputs) {
    out_terms.push_back(e.normalized_terms());
    for (const auto& t : out_terms.back()) top = std::max(top, layer_of(t.node));
  }
  const int out_layer = top + 1;

  // Reachability from the outputs.
  std::vector<char> live(nodes_.size(), 0);
  std::vector<NodeId> stack;
  for (const auto& terms : out_terms) {
    for (const auto& t : terms) stack.push_back(t.node);
  }
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    if (live[static_cast<std::size_t>(n)]) continue;
    live[static_cast<std::size_t>(n)] = 1;
    for (const auto& t : nodes_[static_cast<std::size_t>(n)].in) stack.push_back(t.node);
  }

  Network net;
  net.codebook = codebook_;
  net.input_dim = input_dim_;
  net.domain = domain_;
  net.layers.resize(static_cast<std::size_t>(out_layer));

  std::map<Rational, std::vector<WeightUse>> decomposition_cache;
  auto decompose = [&](const Rational& c) -> const std::vector<WeightUse>& {
    auto it = decomposition_cache.find(c);
    if (it == decomposition_cache.end()) {
      it = decomposition_cache.emplace(c, codebook_.decompose(c)).first;
    }
    return it->second;
  };

  auto layer_ref = [&](int layer) -> Layer& {
    return net.layers[static_cast<std::size_t>(layer - 1)];
  };
  auto new_unit = [&](int layer, Activation act) {
    auto& units = layer_ref(layer).units;
    units.push_back(Unit{act, {}});
    return static_cast<int>(units.size() - 1);
  };
  auto add_edges = [&](Unit& unit, int source, const Rational& coef) {
    for (const auto& w : decompose(coef)) {
      auto it = std::find_if(unit.incoming.begin(), unit.incoming.end(), [&](const Edge& e) {
        return e.source == source && e.weight_index == w.weight_index;
      });
      if (it != unit.incoming.end()) {
        it->multiplicity += w.multiplicity;
      } else {
        unit.incoming.push_back(Edge{source, w.weight_index, w.multiplicity});
      }
    }
  };

  // Unit index of every live node in its own layer.
  std::vector<int> home(nodes_.size(), -1);
  for (int i = 0; i < input_dim_; ++i) home[static_cast<std::size_t>(i)] = i;

  std::unordered_map<std::uint64_t, std::vector<Signed>> relays;
  auto key = [](NodeId n, int layer) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 32) |
           static_cast<std::uint32_t>(layer);
  };

  // Units in `layer` that together carry the value of `n` (value = sum sign * unit).
  auto carry = [&](auto&& self, NodeId n, int layer) -> std::vector<Signed> {
    const int own = nodes_[static_cast<std::size_t>(n)].layer;
    if (layer == own) return {Signed{home[static_cast<std::size_t>(n)], 1}};
    if (auto it = relays.find(key(n, layer)); it != relays.end()) return it->second;
    std::vector<Signed> result;
    if (own == 0 && layer == 1) {
      int pos = new_unit(1, Activation::ReLU);
      add_edges(layer_ref(1).units[static_cast<std::size_t>(pos)], n, Rational(1));
      result.push_back({pos, 1});
      if (signed_inputs_) {
        int neg = new_unit(1, Activation::ReLU);
        add_edges(layer_ref(1).units[static_cast<std::size_t>(neg)], n, Rational(-1));
        result.push_back({neg, -1});
      }
    } else {
      auto prev = self(self, n, layer - 1);
      for (const auto& p : prev) {
        int u = new_unit(layer, Activation::ReLU);
        add_edges(layer_ref(layer).units[static_cast<std::size_t>(u)], p.unit, Rational(1));
        result.push_back({u, p.sign});
      }
    }
    relays.emplace(key(n, layer), result);
    return result;
  };

  auto wire = [&](int layer, int unit_index, const std::vector<Term>& terms,
                  const Rational& constant) {
    std::map<std::pair<int, int>, std::int64_t> acc;
    auto accumulate = [&](int source, const Rational& coef) {
      for (const auto& w : decompose(coef)) acc[{source, w.weight_index}] += w.multiplicity;
    };
    for (const auto& t : terms) {
      for (const auto& s : carry(carry, t.node, layer - 1)) {
        accumulate(s.unit, s.sign > 0 ? t.coef : Rational(-t.coef));
      }
    }
    Layer& l = layer_ref(layer);
    if (sgn(constant) != 0) {
      accumulate(kConstantUnit, constant);
      l.has_constant_unit = true;
    }
    auto& incoming = l.units[static_cast<std::size_t>(unit_index)].incoming;
    incoming.reserve(acc.size());
    for (const auto& [k, m] : acc) incoming.push_back(Edge{k.first, k.second, m});
  };

  // Live nodes in creation order: every node's inputs precede it.
  for (std::size_t n = static_cast<std::size_t>(input_dim_); n < nodes_.size(); ++n) {
    if (!live[n]) continue;
    const Node& node = nodes_[n];
    int u = new_unit(node.layer, Activation::ReLU);
    home[n] = u;
    wire(node.layer, u, node.in, node.constant);
  }
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    int u = new_unit(out_layer, Activation::Identity);
    wire(out_layer, u, out_terms[o], outputs[o].constant());
  }
  return net;
}

}  // namespace qnet
