#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qnet/compose.hpp"
#include "qnet/gadgets.hpp"
#include "qnet/network_json.hpp"

using namespace qnet;

namespace {

// x -> relu(4 * (1/2) x) -> (1/2) * that: an identity on [0, 1].
Network hand_identity() {
  Network net{Codebook::half_pair(), 1, {}, {}};
  Layer hidden;
  hidden.units.push_back({Activation::ReLU, {{0, 0, 4}}});
  Layer out;
  out.units.push_back({Activation::Identity, {{0, 0, 1}}});
  net.layers = {hidden, out};
  return net;
}

int hidden_width(const Network& net) {
  std::size_t w = 0;
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) w = std::max(w, net.layers[l].units.size());
  return static_cast<int>(w);
}

bool has_kind(const std::vector<Violation>& vs, ViolationKind kind) {
  for (const auto& v : vs) {
    if (v.kind == kind) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("codebooks") {
  const Codebook lin = Codebook::linear(4);
  CHECK(lin.lambda() == 4);
  CHECK(lin.value(0) == -1);
  CHECK(lin.value(1) == ratio(1, 4));
  CHECK(lin.value(3) == ratio(3, 4));
  CHECK(lin.bit_width() == 2);
  CHECK(Codebook::linear(5).bit_width() == 3);
  CHECK_THROWS(Codebook::linear(1));
  CHECK_THROWS(Codebook::nonlinear({Rational(1, 2), Rational(1, 2)}));

  const Codebook half = Codebook::half_pair();
  Rational sum = 0;
  for (const auto& use : half.decompose(Rational(-3, 2))) sum += half.value(use.weight_index) * use.multiplicity;
  CHECK(sum == Rational(-3, 2));
  CHECK_THROWS_AS(half.decompose(Rational(1, 3)), std::domain_error);
}

TEST_CASE("exact evaluation") {
  CHECK(eval(hand_identity(), ratio(3, 7)) == ratio(3, 7));
  CHECK(eval(build_squaring(2), ratio(3, 4)) == ratio(9, 16));
  // Interpolating x^2 through 0, 1/4 at 1/2: the chord midpoint is 1/8.
  const Rational chord = (Rational(0) + ratio(1, 2) * ratio(1, 2)) / 2;
  CHECK(eval(build_squaring(1), ratio(1, 4)) == chord);

  const std::vector<Rational> wrong{Rational(0), Rational(0)};
  CHECK_THROWS_AS(eval(build_squaring(1), wrong), InputError);
  CHECK_NOTHROW(eval(build_squaring(1), Rational(2)));
  CHECK_THROWS_AS(eval(build_squaring(1), Rational(2), {true}), InputError);

  Network broken = hand_identity();
  broken.layers[0].units[0].incoming.push_back({kConstantUnit, 0, 1});
  CHECK_THROWS_AS(eval(broken, Rational(0)), MalformedNetwork);
}

TEST_CASE("float evaluation agrees with exact evaluation") {
  CHECK(eval_f64(hand_identity(), 3.0 / 7) == doctest::Approx(3.0 / 7).epsilon(1e-12));
  CHECK(eval_f64(build_squaring(2), 0.75) == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(eval_f64(build_squaring(1), 0.25) == doctest::Approx(0.125).epsilon(1e-12));
  const std::vector<double> axis{0.0, 0.37};
  CHECK(eval_f64(build_multiplier(6), axis) == 0.0);
  CHECK_THROWS_AS(eval_f64(build_squaring(1), std::numeric_limits<double>::quiet_NaN()), InputError);

  const Network m = build_multiplier(3);
  const CompiledNetwork compiled(m);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> pick(-1024, 1024);
  std::vector<double> pts;
  std::vector<Rational> exact;
  for (int i = 0; i < 1000; ++i) {
    const Rational x = ratio(pick(rng), 1024), y = ratio(pick(rng), 1024);
    const std::vector<Rational> xy{x, y};
    exact.push_back(eval(m, xy));
    pts.push_back(to_double(x));
    pts.push_back(to_double(y));
  }
  std::vector<double> out(1000);
  compiled.eval_batch(pts, out);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> xy{pts[2 * i], pts[2 * i + 1]};
    worst = std::max(worst, std::fabs(eval_f64(m, xy) - to_double(exact[i])));
    worst = std::max(worst, std::fabs(out[i] - to_double(exact[i])));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("validation") {
  CHECK(validate(build_squaring(3)).empty());
  CHECK(validate(hand_identity()).empty());

  Network bad_weight = hand_identity();
  bad_weight.layers[0].units[0].incoming[0].weight_index = 5;
  CHECK(has_kind(validate(bad_weight), ViolationKind::Codebook));

  Network skip = hand_identity();
  skip.layers[1].units[0].incoming[0].source = 3;
  CHECK(has_kind(validate(skip), ViolationKind::Layering));

  Network zero_mult = hand_identity();
  zero_mult.layers[0].units[0].incoming[0].multiplicity = 0;
  CHECK(has_kind(validate(zero_mult), ViolationKind::Multiplicity));

  Network relu_out = hand_identity();
  relu_out.layers[1].units[0].activation = Activation::ReLU;
  CHECK(has_kind(validate(relu_out), ViolationKind::Activation));
}

TEST_CASE("complexity accounting") {
  std::vector<int> depths;
  for (int r = 1; r <= 10; ++r) {
    const ComplexityReport c = complexity(build_squaring(r));
    depths.push_back(c.depth);
    CHECK(c.max_width <= 5);
    CHECK(c.memory_bits == c.weight_count);
  }
  for (std::size_t i = 2; i < depths.size(); ++i) {
    CHECK(depths[i] - depths[i - 1] == depths[1] - depths[0]);
  }
  const auto g = build_weight_gadget_nonlinear(Rational(5, 16), 9, 2);
  CHECK(complexity(g.network).weight_count <= 652);

  const ComplexityReport lin = complexity(build_weight_gadget_linear(ratio(5, 16), 4, 4).network);
  CHECK(lin.bit_width == 2);
  CHECK(lin.memory_bits == 2 * lin.weight_count);
}

TEST_CASE("composition") {
  const Codebook half = Codebook::half_pair();
  const Network sq = build_squaring(2);
  const Composed id_sq = compose_serial(identity_network(half, 1), sq, true);
  for (int k = 0; k <= 64; ++k) CHECK(eval(id_sq.network, ratio(k, 64)) == eval(sq, ratio(k, 64)));
  CHECK(complexity(id_sq.network).depth == complexity(identity_network(half, 1)).depth + complexity(sq).depth);

  const Network a = build_squaring(1), b = build_squaring(3);
  const Composed ab = compose_serial(a, b);
  CHECK(complexity(ab.network).depth == complexity(a).depth + complexity(b).depth);
  CHECK(complexity(ab.network).weight_count ==
        complexity(a).weight_count + complexity(b).weight_count + ab.glue_weights);
  CHECK(validate(ab.network).empty());
  for (int k = 0; k <= 16; ++k) {
    const Rational x = ratio(k, 16);
    CHECK(eval(ab.network, x) == eval(b, eval(a, x)));
  }

  const std::vector<Network> three{sq, sq, sq};
  const Composed par = compose_parallel(three);
  CHECK(hidden_width(par.network) == 3 * hidden_width(sq));
  CHECK(par.network.output_dim() == 3);
  CHECK(validate(par.network).empty());
  const std::vector<Rational> x{ratio(3, 4)};
  for (const auto& y : evaluate(par.network, x)) CHECK(y == ratio(9, 16));

  const std::vector<Network> mixed{build_squaring(1), build_squaring(3)};
  const Composed padded = compose_parallel(mixed);
  const auto ys = evaluate(padded.network, x);
  CHECK(ys[0] == eval(build_squaring(1), ratio(3, 4)));
  CHECK(ys[1] == eval(build_squaring(3), ratio(3, 4)));

  Layer extra;
  extra.units.push_back({Activation::Identity, {{0, 0, 2}}});
  CHECK_THROWS_AS(append_layer(hand_identity(), extra), MalformedNetwork);
  Network relu_top = hand_identity();
  relu_top.layers[1].units[0].activation = Activation::ReLU;
  const Network doubled = append_layer(relu_top, extra);
  CHECK(validate(doubled).empty());
  CHECK(eval(doubled, ratio(1, 2)) == ratio(1, 2));
}

TEST_CASE("json round trip") {
  const Network m = build_multiplier(4);
  const std::string text = to_json(m);
  const Network back = from_json(text);
  CHECK(back == m);
  CHECK(to_json(back) == text);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> pick(-4096, 4096);
  for (int i = 0; i < 100; ++i) {
    const std::vector<Rational> xy{ratio(pick(rng), 4096), ratio(pick(rng), 4096)};
    CHECK(eval(back, xy) == eval(m, xy));
  }

  nlohmann::json doc = network_to_json(build_squaring(1));
  doc["layers"][0]["units"][0]["in"][0][1] = 7;
  CHECK_THROWS_AS(network_from_json(doc), ArtifactError);
  CHECK_THROWS_AS(from_json("{}"), ArtifactError);
}
