#include "qnet/bounds.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace qnet {

namespace {

void require_lambda(double lambda) {
  if (!(lambda >= 2)) throw std::domain_error("lambda must be >= 2");
}

void require_epsilon(double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::domain_error("epsilon must lie in (0, 1)");
}

}  // namespace

double BoundModel::theta2() const {
  return std::log2(3.0 * n) + d - std::log2(epsilon);
}

double memory_bound(double lambda, const BoundModel& model) {
  require_lambda(lambda);
  const double th = model.theta2();
  return model.theta1 * lambda * std::log2(lambda) * std::pow(th, 1.0 / (lambda - 1) + 1);
}

double ms(double lambda, const BoundModel& model) {
  require_lambda(lambda);
  const double l = lambda;
  return std::log2(l) + 1 / std::log(2.0) -
         std::log(model.theta2()) * l * std::log2(l) / ((l - 1) * (l - 1));
}

double memory_bound_derivative(double lambda, const BoundModel& model) {
  return model.theta1 * std::pow(model.theta2(), lambda / (lambda - 1)) * ms(lambda, model);
}

double lambda_opt(const BoundModel& model) {
  require_epsilon(model.epsilon);
  if (model.epsilon >= 0.5) {
    throw NoInteriorMinimum("no interior minimum: epsilon must be below 1/2");
  }
  if (ms(2, model) >= 0) throw NoInteriorMinimum("ms(2) is not negative for this model");
  double lo = 2, hi = 4;
  while (ms(hi, model) <= 0) {
    lo = hi;
    hi *= 2;
    if (!std::isfinite(hi)) throw NoInteriorMinimum("no sign change of ms found");
  }
  while ((hi - lo) > 1e-12 * hi) {
    double mid = 0.5 * (lo + hi);
    if (ms(mid, model) <= 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double bitwidth_opt(const BoundModel& model) { return std::log2(lambda_opt(model)); }

Theorem parse_theorem(const std::string& text) {
  if (text == "1" || text == "T1") return Theorem::T1;
  if (text == "2" || text == "T2") return Theorem::T2;
  if (text == "3" || text == "T3") return Theorem::T3;
  if (text == "4" || text == "T4") return Theorem::T4;
  throw std::invalid_argument("unknown theorem '" + text + "'");
}

std::string to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::T1: return "T1";
    case Theorem::T2: return "T2";
    case Theorem::T3: return "T3";
    case Theorem::T4: return "T4";
  }
  return "?";
}

std::map<std::string, double> bound_formulas(Theorem theorem, double d, double n, double epsilon,
                                             double lambda) {
  require_epsilon(epsilon);
  require_lambda(lambda);
  if (d < 1 || n < 1) throw std::invalid_argument("d and n must be >= 1");
  const bool dependent = theorem == Theorem::T3 || theorem == Theorem::T4;
  if (dependent && (d != 1 || n != 1)) {
    throw std::invalid_argument(to_string(theorem) + " requires d = n = 1");
  }
  const double L = std::log2(1 / epsilon);
  const double vol = std::pow(1 / epsilon, d / n);
  const double bits = std::log2(lambda);
  std::map<std::string, double> out;
  switch (theorem) {
    case Theorem::T1: {
      const double e = 1 / (lambda - 1);
      out["depth"] = lambda * std::pow(L, e) + L;
      out["weights"] = lambda * std::pow(L, e + 1) * vol;
      out["bits"] = bits * out["weights"];
      break;
    }
    case Theorem::T2:
      out["depth"] = L;
      out["weights"] = (L + L * L / bits) * vol;
      out["bits"] = bits * out["weights"];
      break;
    case Theorem::T3: {
      const double e = 1 / (lambda - 1);
      out["weights"] = lambda * std::pow(std::log2(L), e + 1) + 1 / epsilon;
      out["bits"] = bits * out["weights"];
      break;
    }
    case Theorem::T4:
      out["weights"] = 1 / epsilon;
      out["bits"] = bits / epsilon;
      break;
  }
  return out;
}

OverheadReport overhead_report(double d, double n, double epsilon, double lambda) {
  require_epsilon(epsilon);
  require_lambda(lambda);
  const double L = std::log2(1 / epsilon);
  const double vol = std::pow(1 / epsilon, d / n);
  OverheadReport r;
  r.quantized_upper = lambda * std::pow(L, 1 / (lambda - 1) + 1) * vol;
  r.unquantized_upper = L * vol;
  r.unquantized_lower = std::pow(L, -3) * vol;
  r.overhead_factor = lambda * std::pow(L, 1 / (lambda - 1));
  return r;
}

std::vector<Figure1Row> figure1_rows(const std::vector<double>& d_list,
                                     const std::vector<double>& n_list,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& lambda_list) {
  std::vector<Figure1Row> rows;
  for (double d : d_list) {
    for (double n : n_list) {
      for (double eps : eps_list) {
        BoundModel model{d, n, eps, 1.0};
        const double bw = bitwidth_opt(model);
        for (double lambda : lambda_list) {
          rows.push_back({d, n, eps, lambda, ms(lambda, model), bw});
        }
      }
    }
  }
  return rows;
}

std::string emit_figure1_data(const std::vector<double>& d_list, const std::vector<double>& n_list,
                              const std::vector<double>& eps_list,
                              const std::vector<double>& lambda_list) {
  std::ostringstream os;
  os << "# scaled_derivative = dM/dlambda * theta2^(-lambda/(lambda-1)) / theta1"
        " = log2(lambda) + 1/ln2 - ln(theta2) lambda log2(lambda)/(lambda-1)^2\n"
     << "# theta2 = log2(3 n 2^d / epsilon); bitwidth_opt = log2(lambda_opt), independent of "
        "theta1\n"
     << "d,n,epsilon,lambda,scaled_derivative,bitwidth_opt\n";
  os << std::setprecision(12);
  for (const auto& r : figure1_rows(d_list, n_list, eps_list, lambda_list)) {
    os << r.d << ',' << r.n << ',' << r.epsilon << ',' << r.lambda << ',' << r.scaled_derivative
       << ',' << r.bitwidth_opt << '\n';
  }
  return os.str();
}

}  // namespace qnet
