#include "qnet/target_function.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qnet {

Rational TargetFunction::exact_at(const Rational& x) const {
  if (!exact) throw std::logic_error(name + " has no exact oracle");
  return exact(std::span<const Rational>(&x, 1));
}

namespace {

int order(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

TargetFunction make_zero(int d) {
  TargetFunction f;
  f.name = "zero";
  f.d = d;
  f.max_order = 1 << 20;
  f.eval = [](std::span<const double>) { return 0.0; };
  f.partial = [](const MultiIndex&, std::span<const double>) { return 0.0; };
  f.exact = [](std::span<const Rational>) { return Rational(0); };
  f.exact_partial = [](const MultiIndex&, std::span<const Rational>) { return Rational(0); };
  return f;
}

TargetFunction make_linear(const Rational& slope, std::string name) {
  TargetFunction f;
  f.name = std::move(name);
  f.d = 1;
  f.max_order = 1 << 20;
  const double s = to_double(slope);
  f.eval = [s](std::span<const double> x) { return s * x[0]; };
  f.partial = [s](const MultiIndex& a, std::span<const double> x) {
    if (a[0] == 0) return s * x[0];
    return a[0] == 1 ? s : 0.0;
  };
  f.exact = [slope](std::span<const Rational> x) { return Rational(slope * x[0]); };
  f.exact_partial = [slope](const MultiIndex& a, std::span<const Rational> x) {
    if (a[0] == 0) return Rational(slope * x[0]);
    return a[0] == 1 ? slope : Rational(0);
  };
  return f;
}

TargetFunction make_x2_half() {
  TargetFunction f;
  f.name = "poly:x2_half";
  f.d = 1;
  f.max_order = 1 << 20;
  f.eval = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
  f.partial = [](const MultiIndex& a, std::span<const double> x) {
    switch (a[0]) {
      case 0: return 0.5 * x[0] * x[0];
      case 1: return x[0];
      case 2: return 1.0;
      default: return 0.0;
    }
  };
  f.exact = [](std::span<const Rational> x) { return Rational(x[0] * x[0] / 2); };
  f.exact_partial = [](const MultiIndex& a, std::span<const Rational> x) {
    switch (a[0]) {
      case 0: return Rational(x[0] * x[0] / 2);
      case 1: return x[0];
      case 2: return Rational(1);
      default: return Rational(0);
    }
  };
  return f;
}

TargetFunction make_xy_half() {
  TargetFunction f;
  f.name = "poly:xy_half";
  f.d = 2;
  f.max_order = 1 << 20;
  f.eval = [](std::span<const double> x) { return 0.5 * x[0] * x[1]; };
  auto partial = [](const MultiIndex& a, auto x, auto zero, auto half) {
    if (a[0] > 1 || a[1] > 1) return zero;
    auto fx = a[0] == 0 ? x[0] : decltype(zero)(1);
    auto fy = a[1] == 0 ? x[1] : decltype(zero)(1);
    return decltype(zero)(half * fx * fy);
  };
  f.partial = [partial](const MultiIndex& a, std::span<const double> x) {
    return partial(a, x, 0.0, 0.5);
  };
  f.exact = [](std::span<const Rational> x) { return Rational(x[0] * x[1] / 2); };
  f.exact_partial = [partial](const MultiIndex& a, std::span<const Rational> x) {
    return partial(a, x, Rational(0), Rational(1, 2));
  };
  return f;
}

TargetFunction make_abs_shift() {
  TargetFunction f = piecewise_linear("abs_shift", {Rational(0), Rational(1, 2), Rational(1)},
                                      {Rational(1, 2), Rational(0), Rational(1, 2)});
  return f;
}

}  // namespace

TargetFunction piecewise_linear(std::string name, std::vector<Rational> xs,
                                std::vector<Rational> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("piecewise-linear data needs matching point lists");
  }
  if (!std::is_sorted(xs.begin(), xs.end()) ||
      std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
    throw std::invalid_argument("piecewise-linear abscissae must be strictly increasing");
  }
  TargetFunction f;
  f.name = std::move(name);
  f.d = 1;
  f.max_order = 1;
  std::vector<double> xd, yd;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xd.push_back(to_double(xs[i]));
    yd.push_back(to_double(ys[i]));
    if (i > 0 && abs((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])) > 1) f.lipschitz_certificate = false;
    if (abs(ys[i]) > 1) f.lipschitz_certificate = false;
  }
  f.kinks.assign(xs.begin() + 1, xs.end() - 1);
  f.eval = [xd, yd](std::span<const double> x) {
    double v = x[0];
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(xd.begin() + 1, xd.end() - 1, v) - xd.begin());
    double a = xd[i - 1], b = xd[i];
    return yd[i - 1] + (yd[i] - yd[i - 1]) * (v - a) / (b - a);
  };
  auto exact = [xs, ys](const Rational& v) {
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(xs.begin() + 1, xs.end() - 1, v) - xs.begin());
    return Rational(ys[i - 1] + (ys[i] - ys[i - 1]) * (v - xs[i - 1]) / (xs[i] - xs[i - 1]));
  };
  f.exact = [exact](std::span<const Rational> x) { return exact(x[0]); };
  f.partial = [f_eval = f.eval](const MultiIndex& a, std::span<const double> x) {
    if (a[0] != 0) throw std::domain_error("piecewise-linear targets only provide order-0 values");
    return f_eval(x);
  };
  f.exact_partial = [exact](const MultiIndex& a, std::span<const Rational> x) {
    if (a[0] != 0) throw std::domain_error("piecewise-linear targets only provide order-0 values");
    return exact(x[0]);
  };
  return f;
}

TargetFunction random_piecewise_linear(std::uint64_t seed, int kinks) {
  constexpr int kGrid = 1024;
  std::mt19937_64 rng(seed);
  auto draw = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  std::vector<int> pos;
  while (static_cast<int>(pos.size()) < kinks) {
    int p = 1 + draw(kGrid - 1);
    if (std::find(pos.begin(), pos.end(), p) == pos.end()) pos.push_back(p);
  }
  std::sort(pos.begin(), pos.end());
  std::vector<Rational> xs{Rational(0)};
  for (int p : pos) xs.emplace_back(p, kGrid);
  xs.emplace_back(1);
  for (auto& x : xs) x.canonicalize();
  std::vector<Rational> ys{Rational(0)};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    Rational slope = ratio(draw(2 * kGrid + 1) - kGrid, kGrid);
    ys.push_back(ys.back() + slope * (xs[i] - xs[i - 1]));
  }
  auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  Rational shift = (*lo + *hi) / 2;
  for (auto& y : ys) y -= shift;
  return piecewise_linear("pl:seed=" + std::to_string(seed), std::move(xs), std::move(ys));
}

TargetFunction with_finite_differences(TargetFunction f) {
  constexpr double kStep = 1.0 / (1 << 20);
  auto eval = f.eval;
  const int d = f.d;
  f.partial = [eval, d](const MultiIndex& a, std::span<const double> x) {
    int o = order(a);
    if (o == 0) return eval(x);
    if (o > 1) throw std::domain_error("finite differences are limited to first derivatives");
    std::vector<double> plus(x.begin(), x.end()), minus(x.begin(), x.end());
    for (int k = 0; k < d; ++k) {
      if (a[static_cast<std::size_t>(k)] == 1) {
        plus[static_cast<std::size_t>(k)] += kStep;
        minus[static_cast<std::size_t>(k)] -= kStep;
      }
    }
    return (eval(plus) - eval(minus)) / (2 * kStep);
  };
  f.exact_partial = nullptr;
  f.max_order = std::min(f.max_order, 2);
  // h/2 * sup|f''| truncation plus rounding of the two evaluations.
  f.derivative_error = kStep / 2 + 4e-16 / kStep;
  f.name = "fd:" + f.name;
  return f;
}

TargetFunction make_function(const std::string& spec, int d) {
  if (spec.rfind("fd:", 0) == 0) return with_finite_differences(make_function(spec.substr(3), d));
  TargetFunction f;
  if (spec == "zero") {
    f = make_zero(d);
  } else if (spec == "linear:x") {
    f = make_linear(Rational(1), spec);
  } else if (spec == "linear:x_half") {
    f = make_linear(Rational(1, 2), spec);
  } else if (spec == "poly:x2_half") {
    f = make_x2_half();
  } else if (spec == "poly:xy_half") {
    f = make_xy_half();
  } else if (spec == "abs_shift") {
    f = make_abs_shift();
  } else if (spec.rfind("pl:seed=", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(spec.substr(8));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad seed in '" + spec + "'");
    }
    f = random_piecewise_linear(seed);
  } else {
    throw std::invalid_argument("unknown function '" + spec + "'");
  }
  if (f.d != d) {
    throw std::invalid_argument("function '" + spec + "' has dimension " + std::to_string(f.d) +
                                ", requested " + std::to_string(d));
  }
  return f;
}

std::vector<std::string> registered_functions() {
  return {"zero", "linear:x", "linear:x_half", "poly:x2_half", "poly:xy_half", "abs_shift",
          "pl:seed=K"};
}

}  // namespace qnet
