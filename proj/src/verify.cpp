#include "qnet/verify.hpp"

#include <algorithm>
#include <cmath>

#include "qnet/independent.hpp"

namespace qnet {

Certificate sup_error(const Network& net, const TargetFunction& f, const Rational& grid_spacing,
                      double target_epsilon, const SupErrorOptions& options) {
  if (net.input_dim != f.d) throw std::invalid_argument("network and function dimensions differ");
  if (net.output_dim() != 1) throw std::invalid_argument("certification needs a single output");
  if (grid_spacing <= 0) throw std::invalid_argument("grid spacing must be positive");
  const Rational per_axis_r = 1 / grid_spacing;
  if (per_axis_r.get_den() != 1) throw std::invalid_argument("grid spacing must divide 1");
  const std::int64_t per_axis = per_axis_r.get_num().get_si() + 1;
  const int d = f.d;
  double total = std::pow(static_cast<double>(per_axis), d);
  if (total > static_cast<double>(options.max_points)) {
    throw ResourceCapExceeded("certification grid of " + std::to_string(total) +
                                  " points exceeds the cap",
                              total);
  }
  const auto count = static_cast<std::int64_t>(total);
  const double h = to_double(grid_spacing);
  const CompiledNetwork compiled(net);

  // Values on the whole grid; the last axis varies fastest.
  std::vector<double> values(static_cast<std::size_t>(count));
  constexpr std::int64_t kChunk = 4096;
  std::vector<double> pts;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d));
  Certificate c;
  c.grid_spacing = grid_spacing;
  c.target_epsilon = target_epsilon;
  c.points = count;
  std::int64_t best = 0;
  double err_max = -1;
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::int64_t start = 0; start < count; start += kChunk) {
    const std::int64_t n = std::min(kChunk, count - start);
    pts.resize(static_cast<std::size_t>(n * d));
    for (std::int64_t p = 0; p < n; ++p) {
      std::int64_t rest = start + p;
      for (int k = d - 1; k >= 0; --k) {
        pts[static_cast<std::size_t>(p * d + k)] = static_cast<double>(rest % per_axis) * h;
        rest /= per_axis;
      }
    }
    compiled.eval_batch(pts, std::span<double>(values.data() + start, static_cast<std::size_t>(n)));
    for (std::int64_t p = 0; p < n; ++p) {
      std::copy_n(pts.begin() + p * d, d, x.begin());
      const double e = std::fabs(values[static_cast<std::size_t>(start + p)] - f(x));
      if (e > err_max) {
        err_max = e;
        best = start + p;
      }
    }
  }
  c.measured_sup_error = err_max;
  {
    std::int64_t rest = best;
    c.argmax.assign(static_cast<std::size_t>(d), 0);
    std::vector<Rational> xr(static_cast<std::size_t>(d));
    for (int k = d - 1; k >= 0; --k) {
      xr[static_cast<std::size_t>(k)] = grid_spacing * Rational(static_cast<long>(rest % per_axis));
      c.argmax[static_cast<std::size_t>(k)] = static_cast<double>(rest % per_axis) * h;
      rest /= per_axis;
    }
    if (complexity(net).weight_count <= options.exact_audit_max_weights) {
      const double exact = to_double(eval(net, xr));
      c.audit_gap = std::fabs(exact - values[static_cast<std::size_t>(best)]);
    }
  }

  double lip = 0;
  if (options.network_lipschitz) {
    lip = *options.network_lipschitz;
  } else {
    // Largest secant slope between grid neighbours along any axis.
    std::int64_t stride = 1;
    for (int k = d - 1; k >= 0; --k) {
      for (std::int64_t p = 0; p < count; ++p) {
        if ((p / stride) % per_axis == per_axis - 1) continue;
        const double s = std::fabs(values[static_cast<std::size_t>(p + stride)] -
                                   values[static_cast<std::size_t>(p)]) / h;
        lip = std::max(lip, s);
      }
      stride *= per_axis;
    }
  }
  c.slope_bound = lip + options.function_lipschitz;
  c.certified_sup_error = c.measured_sup_error + 2 * h * c.slope_bound;
  c.pass = c.certified_sup_error <= target_epsilon;
  return c;
}

nlohmann::json certificate_to_json(const Certificate& c) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["grid_spacing"] = format_rational(c.grid_spacing);
  j["measured_sup_error"] = c.measured_sup_error;
  j["certified_sup_error"] = c.certified_sup_error;
  j["target_epsilon"] = c.target_epsilon;
  j["slope_bound"] = c.slope_bound;
  j["points"] = c.points;
  j["argmax"] = c.argmax;
  if (c.audit_gap >= 0) j["exact_audit_gap"] = c.audit_gap;
  j["pass"] = c.pass;
  return j;
}

std::function<Rational(const Rational&)> reference_interp_oracle(
    std::vector<std::pair<Rational, Rational>> breakpoints) {
  if (breakpoints.empty()) throw std::invalid_argument("no breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i - 1].first < breakpoints[i].first)) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
  return [bp = std::move(breakpoints)](const Rational& x) -> Rational {
    if (x <= bp.front().first) return bp.front().second;
    if (x >= bp.back().first) return bp.back().second;
    std::size_t lo = 0, hi = bp.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (bp[mid].first <= x) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const auto& [x0, y0] = bp[lo];
    const auto& [x1, y1] = bp[hi];
    Rational w = (x - x0) / (x1 - x0);
    return y0 + w * (y1 - y0);
  };
}

Network flip_one_weight(const Network& net, int start_layer) {
  Network out = net;
  for (std::size_t l = static_cast<std::size_t>(std::max(0, start_layer)); l < out.layers.size(); ++l) {
    for (Unit& u : out.layers[l].units) {
      for (Edge& e : u.incoming) {
        if (e.source == kConstantUnit) continue;
        if (auto idx = out.codebook.index_of(-out.codebook.value(e.weight_index))) {
          e.weight_index = *idx;
          return out;
        }
      }
    }
  }
  throw std::invalid_argument("no edge with a negatable weight");
}

}  // namespace qnet
