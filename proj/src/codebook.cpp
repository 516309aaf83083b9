#include "qnet/codebook.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace qnet {

std::string to_string(QuantMode mode) {
  return mode == QuantMode::Linear ? "linear" : "nonlinear";
}

QuantMode parse_quant_mode(const std::string& text) {
  if (text == "linear") return QuantMode::Linear;
  if (text == "nonlinear") return QuantMode::Nonlinear;
  throw std::invalid_argument("unknown quantization mode '" + text + "'");
}

Codebook::Codebook(QuantMode mode, std::vector<Rational> values)
    : mode_(mode), values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("codebook needs lambda >= 2 values");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    for (std::size_t j = i + 1; j < values_.size(); ++j) {
      if (values_[i] == values_[j]) throw std::invalid_argument("codebook values must be distinct");
    }
  }
  values_f64_.reserve(values_.size());
  for (const auto& v : values_) values_f64_.push_back(v.get_d());
}

Codebook Codebook::linear(int lambda) {
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");
  std::vector<Rational> values;
  values.emplace_back(-1);
  for (int i = 1; i < lambda; ++i) values.emplace_back(i, lambda);
  for (auto& v : values) v.canonicalize();
  return Codebook(QuantMode::Linear, std::move(values));
}

Codebook Codebook::nonlinear(std::vector<Rational> values) {
  return Codebook(QuantMode::Nonlinear, std::move(values));
}

Codebook Codebook::radix(int lambda, int radix) {
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");
  if (radix < 1 || (lambda > 2 && radix < 2)) {
    throw std::invalid_argument("radix must be >= 2 when lambda > 2");
  }
  std::vector<Rational> values{Rational(-1, 2)};
  long long exponent = 1;
  for (int k = 0; k <= lambda - 2; ++k) {
    values.push_back(pow2(-static_cast<int>(exponent)));
    exponent *= radix;
  }
  return Codebook(QuantMode::Nonlinear, std::move(values));
}

Codebook Codebook::half_pair() { return nonlinear({Rational(1, 2), Rational(-1, 2)}); }

int Codebook::bit_width() const {
  int bits = 0;
  while ((1 << bits) < lambda()) ++bits;
  return bits;
}

std::optional<int> Codebook::index_of(const Rational& value) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == value) return static_cast<int>(i);
  }
  return std::nullopt;
}

namespace {

// Greedy over positive entries, largest first.
bool greedy_positive(const std::vector<std::pair<Rational, int>>& positives, Rational rest,
                     std::vector<WeightUse>& out) {
  for (const auto& [value, index] : positives) {
    if (rest <= 0) break;
    mpz_class k = floor_div(rest / value);
    if (k > 0) {
      out.push_back({index, k.get_si()});
      rest -= Rational(k) * value;
    }
  }
  return rest == 0;
}

}  // namespace

std::vector<WeightUse> Codebook::decompose(const Rational& coefficient) const {
  if (coefficient == 0) return {};
  if (auto idx = index_of(coefficient)) return {{*idx, 1}};

  std::vector<std::pair<Rational, int>> positives;
  std::vector<std::pair<Rational, int>> negatives;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] > 0) positives.emplace_back(values_[i], static_cast<int>(i));
    if (values_[i] < 0) negatives.emplace_back(values_[i], static_cast<int>(i));
  }
  std::sort(positives.begin(), positives.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::sort(negatives.begin(), negatives.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<WeightUse> out;
  if (coefficient > 0 && greedy_positive(positives, coefficient, out)) return out;

  for (const auto& [value, index] : negatives) {
    out.clear();
    Rational magnitude = -value;
    mpz_class k = coefficient < 0 ? ceil_div(-coefficient / magnitude) : mpz_class(0);
    // A positive target that the positives alone cannot hit may still work
    // with one extra negative edge and a larger positive remainder.
    for (int extra = 0; extra < 2; ++extra) {
      std::vector<WeightUse> trial;
      mpz_class count = k + extra;
      if (count > 0) trial.push_back({index, count.get_si()});
      Rational rest = coefficient + Rational(count) * magnitude;
      if (greedy_positive(positives, rest, trial)) return trial;
    }
  }
  throw std::domain_error("coefficient " + format_rational(coefficient) +
                          " is not representable over the codebook");
}

}  // namespace qnet
