#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnet {

/// Simplified memory model M(lambda) = theta1 lambda log2(lambda) theta2^(1/(lambda-1)+1).
struct BoundModel {
  double d = 1;
  double n = 1;
  double epsilon = 0.1;
  double theta1 = 1.0;

  /// log2(3 n 2^d / epsilon), evaluated in log space so huge d stays finite.
  double theta2() const;
};

class NoInteriorMinimum : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double memory_bound(double lambda, const BoundModel& model);
/// Sign carrier of dM/dlambda: log2(l) + 1/ln2 - ln(theta2) l log2(l) / (l-1)^2.
double ms(double lambda, const BoundModel& model);
/// Analytic dM/dlambda = theta1 theta2^(l/(l-1)) ms(l).
double memory_bound_derivative(double lambda, const BoundModel& model);

/// Unique root of ms on [2, inf): doubling bracket, then bisection to relative 1e-12.
double lambda_opt(const BoundModel& model);
double bitwidth_opt(const BoundModel& model);

enum class Theorem { T1, T2, T3, T4 };
Theorem parse_theorem(const std::string& text);
std::string to_string(Theorem theorem);

/// Dominant terms (constant 1): "weights", "depth", "bits" and, where stated, "width".
std::map<std::string, double> bound_formulas(Theorem theorem, double d, double n, double epsilon,
                                             double lambda);

struct OverheadReport {
  double quantized_upper = 0;
  double unquantized_upper = 0;
  double unquantized_lower = 0;
  double overhead_factor = 0;
};

OverheadReport overhead_report(double d, double n, double epsilon, double lambda);

struct Figure1Row {
  double d, n, epsilon, lambda, scaled_derivative, bitwidth_opt;
};

std::vector<Figure1Row> figure1_rows(const std::vector<double>& d_list,
                                     const std::vector<double>& n_list,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& lambda_list);

/// CSV with a commented header documenting the scaling convention.
std::string emit_figure1_data(const std::vector<double>& d_list, const std::vector<double>& n_list,
                              const std::vector<double>& eps_list,
                              const std::vector<double>& lambda_list);

}  // namespace qnet
