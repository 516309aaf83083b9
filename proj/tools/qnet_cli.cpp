#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qnet/bounds.hpp"
#include "qnet/dependent.hpp"
#include "qnet/independent.hpp"
#include "qnet/network_json.hpp"
#include "qnet/verify.hpp"

using namespace qnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitArtifact = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Network load_network(const std::string& path) {
  try {
    return from_json(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("malformed JSON: ") + e.what());
  } catch (const MalformedNetwork& e) {
    throw ArtifactError(e.what());
  }
}

std::vector<Rational> parse_point(const std::string& text) {
  std::vector<Rational> x;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) x.push_back(parse_rational(item));
  if (x.empty()) throw ConfigError("empty point");
  return x;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

struct SynthArgs {
  std::string thm = "1";
  std::string f = "poly:x2_half";
  int d = 1;
  int n = 0;
  std::string eps = "0.25";
  int lambda = 2;
  std::string strategy = "interpolation";
  std::string out = "network.json";
  std::string complexity_out = "complexity.json";
  double cap = kDefaultWeightCap;
};

int cmd_synth(const SynthArgs& a) {
  const Theorem thm = parse_theorem(a.thm);
  const Rational eps = parse_rational(a.eps);
  if (eps <= 0 || eps >= 1) throw ConfigError("eps must lie in (0, 1)");
  const QuantMode mode = (thm == Theorem::T1 || thm == Theorem::T3) ? QuantMode::Nonlinear
                                                                     : QuantMode::Linear;
  const bool dependent = thm == Theorem::T3 || thm == Theorem::T4;
  if (dependent && a.d != 1) throw ConfigError("theorems 3 and 4 need d = 1");
  const TargetFunction f = make_function(a.f, a.d);
  const int n = a.n > 0 ? a.n : (dependent ? 1 : std::min(f.max_order, 2));
  if (dependent && n != 1) throw ConfigError("theorems 3 and 4 need n = 1");
  if (n > f.max_order) throw ConfigError("function '" + a.f + "' has no order-" + std::to_string(n) + " derivatives");

  Network net;
  nlohmann::json plan_json;
  std::vector<std::pair<std::string, double>> predicted;
  if (dependent) {
    const DependentPlan plan = plan_dependent(eps, a.lambda, mode, parse_strategy(a.strategy));
    DependentBuild b = build_dependent(f, plan, a.cap);
    net = std::move(b.network);
    predicted = plan.predicted;
    plan_json = {{"strategy", to_string(plan.strategy)}, {"m", plan.m},   {"t", plan.bits()},
                 {"T", plan.intervals()},                {"delta", format_rational(plan.delta)},
                 {"scale_bits", b.scale_bits},           {"cached_functions", b.cached_functions}};
  } else {
    const IndependentPlan plan = plan_independent(a.d, n, eps, a.lambda, mode);
    IndependentBuild b = build_independent(f, plan, a.cap);
    net = std::move(b.network);
    predicted = plan.predicted;
    const ErrorBudget budget = error_budget(plan, f.derivative_error);
    plan_json = {{"N", plan.N},
                 {"r", plan.r},
                 {"t", plan.t},
                 {"guard_bits", plan.guard_bits},
                 {"terms", b.terms},
                 {"error_budget",
                  {{"taylor", to_double(budget.taylor)},
                   {"multiplier", to_double(budget.multiplier)},
                   {"weights", to_double(budget.weights)},
                   {"derivatives", to_double(budget.derivatives)},
                   {"total", to_double(budget.total)}}}};
  }
  ComplexityReport report = complexity(net);
  report.predicted = predicted;
  nlohmann::json cj = complexity_to_json(report);
  cj["theorem"] = to_string(thm);
  cj["function"] = f.name;
  cj["epsilon"] = format_rational(eps);
  cj["plan"] = plan_json;
  write_file(a.out, to_json(net));
  write_file(a.complexity_out, cj.dump(2) + "\n");

  std::cout << "synth " << to_string(thm) << " f=" << f.name << " eps=" << format_rational(eps)
            << " lambda=" << a.lambda << " depth=" << report.depth
            << " weights=" << report.weight_count << " bits=" << report.memory_bits;
  for (const auto& [k, v] : predicted) std::cout << " predicted_" << k << "=" << fmt(v);
  std::cout << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& net_path, const std::vector<std::string>& points, bool exact) {
  const Network net = load_network(net_path);
  for (const auto& p : points) {
    const auto x = parse_point(p);
    if (static_cast<int>(x.size()) != net.input_dim) {
      throw ConfigError("point '" + p + "' has the wrong dimension");
    }
    if (exact) {
      std::cout << format_rational(eval(net, x)) << "\n";
    } else {
      std::vector<double> xd;
      for (const auto& v : x) xd.push_back(to_double(v));
      std::cout << std::setprecision(17) << eval_f64(net, xd) << "\n";
    }
  }
  return kExitOk;
}

int cmd_certify(const std::string& net_path, const std::string& fspec, const std::string& eps,
                const std::string& spacing, const std::string& out) {
  Network net;
  try {
    net = load_network(net_path);
  } catch (const ArtifactError& e) {
    std::cerr << "invalid network: " << e.what() << "\n";
    return kExitArtifact;
  }
  const TargetFunction f = make_function(fspec, net.input_dim);
  const Rational h = spacing.empty() ? Rational(1, net.input_dim == 1 ? 4096 : 256)
                                     : parse_rational(spacing);
  const Certificate c = sup_error(net, f, h, to_double(parse_rational(eps)));
  const std::string text = certificate_to_json(c).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  std::cout << (c.pass ? "PASS" : "FAIL") << " measured=" << fmt(c.measured_sup_error)
            << " certified=" << fmt(c.certified_sup_error) << " eps=" << fmt(c.target_epsilon)
            << "\n";
  return c.pass ? kExitOk : kExitFail;
}

int cmd_bounds(const std::string& thm_text, double d, double n, const std::string& eps_text,
               double lambda) {
  const Theorem thm = parse_theorem(thm_text);
  const double eps = to_double(parse_rational(eps_text));
  nlohmann::json j;
  j["schema_version"] = 1;
  j["theorem"] = to_string(thm);
  j["d"] = d;
  j["n"] = n;
  j["epsilon"] = eps;
  j["lambda"] = lambda;
  j["formulas"] = bound_formulas(thm, d, n, eps, lambda);
  const OverheadReport o = overhead_report(d, n, eps, lambda);
  j["overhead"] = {{"quantized_upper", o.quantized_upper},
                   {"unquantized_upper", o.unquantized_upper},
                   {"unquantized_lower", o.unquantized_lower},
                   {"overhead_factor", o.overhead_factor}};
  if (eps < 0.5) {
    const BoundModel model{d, n, eps, 1.0};
    j["lambda_opt"] = lambda_opt(model);
    j["bitwidth_opt"] = bitwidth_opt(model);
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_bitwidth(const std::vector<double>& ds, const std::vector<double>& ns,
                 const std::vector<double>& epss, const std::vector<double>& lambdas,
                 const std::string& out, const std::string& gnuplot) {
  for (double e : epss) {
    if (!(e > 0 && e < 0.5)) throw ConfigError("eps must lie in (0, 1/2) for an interior minimum");
  }
  const std::string csv = emit_figure1_data(ds, ns, epss, lambdas);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_file(out, csv);
  }
  if (!gnuplot.empty()) {
    std::ostringstream os;
    os << "# d n epsilon lambda scaled_derivative bitwidth_opt\n" << std::setprecision(12);
    for (const auto& r : figure1_rows(ds, ns, epss, lambdas)) {
      os << r.d << " " << r.n << " " << r.epsilon << " " << r.lambda << " "
         << r.scaled_derivative << " " << r.bitwidth_opt << "\n";
    }
    write_file(gnuplot, os.str());
  }
  return kExitOk;
}

int cmd_suite(std::uint64_t seed, const std::string& json_out, bool quick) {
  SuiteSizes sizes;
  if (quick) sizes = {40, 3, 3};
  const SuiteReport report = run_property_suite(seed, sizes);
  std::cout << suite_to_table(report);
  if (!json_out.empty()) write_file(json_out, suite_to_json(report).dump(2) + "\n");
  return report.all_passed() ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized ReLU network synthesis and certification"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "build a quantized approximation network");
  synth->add_option("--thm", sa.thm, "theorem 1-4 (1,3 nonlinear; 2,4 linear)")->capture_default_str();
  synth->add_option("--f", sa.f, "target function spec")->capture_default_str();
  synth->add_option("--d", sa.d, "input dimension")->capture_default_str();
  synth->add_option("--n", sa.n, "smoothness order (default: min(order of f, 2))");
  synth->add_option("--eps", sa.eps, "target error")->capture_default_str();
  synth->add_option("--lambda", sa.lambda, "distinct weight values")->capture_default_str();
  synth->add_option("--strategy", sa.strategy, "interpolation | cached (theorems 3, 4)")
      ->capture_default_str();
  synth->add_option("--out", sa.out, "network JSON path")->capture_default_str();
  synth->add_option("--complexity", sa.complexity_out, "complexity JSON path")->capture_default_str();
  synth->add_option("--max-weights", sa.cap, "refuse builds predicted above this")->capture_default_str();

  std::string net_path;
  std::vector<std::string> points;
  bool exact = false;
  auto* evalc = app.add_subcommand("eval", "evaluate a network");
  evalc->add_option("--net", net_path, "network JSON")->required();
  evalc->add_option("--x", points, "comma-separated point (repeatable)")->required();
  evalc->add_flag("--exact", exact, "exact rational evaluation");

  std::string cf = "poly:x2_half", ceps = "0.25", spacing, cout_path;
  auto* certify = app.add_subcommand("certify", "certify the sup error of a network");
  certify->add_option("--net", net_path, "network JSON")->required();
  certify->add_option("--f", cf, "target function spec")->capture_default_str();
  certify->add_option("--eps", ceps, "target error")->capture_default_str();
  certify->add_option("--spacing", spacing, "grid spacing (1/k)");
  certify->add_option("--out", cout_path, "certificate JSON path (stdout if absent)");

  std::string bthm = "1", beps = "0.1";
  double bd = 1, bn = 1, blambda = 2;
  auto* bounds = app.add_subcommand("bounds", "closed-form complexity bounds");
  bounds->add_option("--thm", bthm)->capture_default_str();
  bounds->add_option("--d", bd)->capture_default_str();
  bounds->add_option("--n", bn)->capture_default_str();
  bounds->add_option("--eps", beps)->capture_default_str();
  bounds->add_option("--lambda", blambda)->capture_default_str();

  std::vector<double> ds{784, 3072, 150528}, ns{1}, epss{0.1, 0.01}, lambdas{2, 4, 16, 256};
  std::string bw_out, gnuplot;
  auto* bitwidth = app.add_subcommand("bitwidth", "optimal bit-width table as CSV");
  bitwidth->add_option("--d", ds)->delimiter(',')->capture_default_str();
  bitwidth->add_option("--n", ns)->delimiter(',')->capture_default_str();
  bitwidth->add_option("--eps", epss)->delimiter(',')->capture_default_str();
  bitwidth->add_option("--lambda", lambdas)->delimiter(',')->capture_default_str();
  bitwidth->add_option("--out", bw_out, "CSV path (stdout if absent)");
  bitwidth->add_option("--gnuplot", gnuplot, "whitespace-separated copy for plotting");

  std::uint64_t seed = 1;
  std::string suite_json;
  bool quick = false;
  auto* suite = app.add_subcommand("suite", "run the property suite");
  suite->add_option("--seed", seed)->capture_default_str();
  suite->add_option("--json", suite_json, "report JSON path");
  suite->add_flag("--quick", quick, "smaller sample sizes");

  // Each command reads its own flat key=value file; keys mirror the long flag names.
  std::string config_path;
  const std::vector<CLI::App*> commands{synth, evalc, certify, bounds, bitwidth, suite};
  for (CLI::App* sub : commands) {
    sub->add_option("--config", config_path,
                    "flat key=value file; command-line flags take precedence");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!config_path.empty()) {
      CLI::App* sub = app.get_subcommands().front();
      std::vector<CLI::ConfigItem> items;
      try {
        items = CLI::ConfigINI().from_file(config_path);
      } catch (const CLI::Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
      }
      for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config" || !item.parents.empty()) {
          throw ConfigError("unknown config key '" + item.fullname() + "'");
        }
        if (opt->count() > 0) continue;
        try {
          opt->add_result(item.inputs);
          opt->run_callback();
        } catch (const CLI::Error& e) {
          throw ConfigError("config key '" + item.name + "': " + e.what());
        }
      }
    }
    if (*synth) return cmd_synth(sa);
    if (*evalc) return cmd_eval(net_path, points, exact);
    if (*certify) return cmd_certify(net_path, cf, ceps, spacing, cout_path);
    if (*bounds) return cmd_bounds(bthm, bd, bn, beps, blambda);
    if (*bitwidth) return cmd_bitwidth(ds, ns, epss, lambdas, bw_out, gnuplot);
    if (*suite) return cmd_suite(seed, suite_json, quick);
  } catch (const ResourceCapExceeded& e) {
    std::cerr << "resource cap: " << e.what() << " (predicted weights "
              << std::setprecision(0) << std::fixed << e.predicted() << ")\n";
    return kExitCap;
  } catch (const ArtifactError& e) {
    std::cerr << "invalid artifact: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitFail;
}
