#pragma once

#include <span>
#include <vector>

#include "qnet/network.hpp"

namespace qnet {

using NodeId = int;

struct Term {
  NodeId node;
  Rational coef;
};

/// Affine form over graph nodes: sum coef * node + constant.
class Expr {
 public:
  Expr() = default;
  explicit Expr(const Rational& constant) : constant_(constant) {}
  static Expr of(NodeId node, const Rational& coef = 1);

  /// Terms with duplicate nodes merged and zero coefficients dropped.
  std::vector<Term> normalized_terms() const;
  const Rational& constant() const { return constant_; }
  bool is_constant() const;

  Expr& operator+=(const Expr& other);
  Expr& operator-=(const Expr& other);
  Expr& operator*=(const Rational& scale);
  Expr& operator+=(const Rational& c) { constant_ += c; return *this; }
  Expr& operator-=(const Rational& c) { constant_ -= c; return *this; }

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator-(Expr a) { return a *= Rational(-1); }
  friend Expr operator*(Expr a, const Rational& s) { return a *= s; }
  friend Expr operator*(const Rational& s, Expr a) { return a *= s; }
  friend Expr operator+(Expr a, const Rational& c) { return a += c; }
  friend Expr operator-(Expr a, const Rational& c) { return a -= c; }
  friend Expr operator+(const Rational& c, Expr a) { return a += c; }
  friend Expr operator-(const Rational& c, Expr a) { return (a *= Rational(-1)) += c; }

 private:
  std::vector<Term> terms_;
  Rational constant_ = 0;
};

/// Builds a ReLU computation as a DAG and lowers it into a strictly layered
/// Network. Values consumed more than one layer after they are produced are
/// carried forward through relay units (sign-split for signed inputs), and
/// every coefficient is expanded into codebook weights with multiplicities.
class GraphBuilder {
 public:
  GraphBuilder(Codebook codebook, int input_dim, InputDomain domain);

  const Codebook& codebook() const { return codebook_; }
  int input_dim() const { return input_dim_; }
  Expr input(int i) const;

  NodeId relu(const Expr& e);
  Expr relu_expr(const Expr& e) { return Expr::of(relu(e)); }

  int layer_of(NodeId node) const { return nodes_.at(static_cast<std::size_t>(node)).layer; }
  int layer_of(const Expr& e) const;
  std::size_t node_count() const { return nodes_.size(); }

  Network build(std::span<const Expr> outputs) const;
  Network build(const Expr& output) const { return build(std::span<const Expr>(&output, 1)); }

 private:
  struct Node {
    std::vector<Term> in;  // empty for inputs
    Rational constant;
    int layer = 0;
  };

  Codebook codebook_;
  int input_dim_;
  InputDomain domain_;
  bool signed_inputs_;
  std::vector<Node> nodes_;
};

}  // namespace qnet
