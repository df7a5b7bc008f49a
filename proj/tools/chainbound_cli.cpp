// chainbound: command-line front end for the chain, bound, chaining and
// experiment modules.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chainbound/banach.hpp"
#include "chainbound/bounds.hpp"
#include "chainbound/chain.hpp"
#include "chainbound/chaining.hpp"
#include "chainbound/error.hpp"
#include "chainbound/experiment.hpp"
#include "chainbound/gauss_mc.hpp"
#include "chainbound/text_io.hpp"

namespace cb = chainbound;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string output_path;

// Writes to --output atomically when given, else to stdout.
void emit(const std::string& text) {
  if (output_path.empty()) {
    std::cout << text;
  } else {
    cb::io::write_file_atomic(output_path, text);
  }
}

json mu_json(const Eigen::VectorXd& mu) {
  return std::vector<double>(mu.data(), mu.data() + mu.size());
}

Eigen::VectorXd uniform_mu(std::size_t states) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(states),
                                   1.0 / static_cast<double>(states));
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  std::string kernel;
  double threshold = 0.25;
};

void run_spectrum(const SpectrumArgs& a) {
  const auto kernel = cb::TransitionKernel::from_matrix(cb::load_kernel_matrix(a.kernel));
  json out = {{"n_states", kernel.n_states()}, {"lambda", kernel.lambda()},
              {"mu", mu_json(kernel.mu())}};
  try {
    out["tau"] = cb::mixing_time(kernel, a.threshold);
  } catch (const cb::NumericalError& e) {
    out["tau"] = nullptr;
    out["tau_error"] = e.what();
  }
  out["tv_threshold"] = a.threshold;
  emit(out.dump(2) + "\n");
}

struct SampleArgs {
  std::string kernel;
  std::size_t n = 0;
  std::uint64_t seed = 1;
};

void run_sample(const SampleArgs& a) {
  const auto kernel = cb::TransitionKernel::from_matrix(cb::load_kernel_matrix(a.kernel));
  const auto path = cb::sample_trajectory(kernel, a.n, a.seed);
  std::string text;
  for (auto v : path) text += std::to_string(v) + "\n";
  emit(text);
}

struct BoundsArgs {
  std::vector<std::string> names;
  cb::BoundInputs in;
  std::optional<std::size_t> tau;
  std::vector<double> c;
  double c_value = 1.0;
  std::string variant = "matrix";
  cb::UniversalConstants consts;
  bool probability = false;
  std::string u_grid;
};

std::vector<double> parse_grid(const std::string& spec) {
  // lo:hi:count, log-spaced
  const auto first = spec.find(':');
  const auto second = spec.find(':', first == std::string::npos ? first : first + 1);
  cb::require(first != std::string::npos && second != std::string::npos,
              "--u-grid expects lo:hi:count");
  const double lo = cb::io::parse_double(spec.substr(0, first));
  const double hi = cb::io::parse_double(spec.substr(first + 1, second - first - 1));
  const std::size_t count = cb::io::parse_size(spec.substr(second + 1));
  cb::require(lo > 0.0 && hi > lo && count >= 2, "--u-grid needs 0 < lo < hi and count >= 2");
  std::vector<double> grid(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(count - 1);
    grid[j] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return grid;
}

void run_bounds(BoundsArgs a) {
  a.consts.validate();
  if (a.variant == "matrix") {
    a.in.variant = cb::SharpVariant::Matrix;
  } else if (a.variant == "linf") {
    a.in.variant = cb::SharpVariant::Linf;
  } else {
    throw cb::ValidationError("--variant must be matrix or linf");
  }
  a.in.tau = a.tau;
  a.in.c = a.c.empty() ? std::vector<double>(a.in.n, a.c_value) : a.c;
  if (a.names.size() == 1 && a.names[0] == "all") a.names = cb::bound_names();

  if (!a.u_grid.empty()) {
    emit(cb::bounds_csv(a.names, a.in, parse_grid(a.u_grid), a.consts, a.probability));
    return;
  }
  json out = json::array();
  for (const auto& name : a.names) {
    auto r = cb::evaluate_bound(name, a.in, a.consts);
    if (a.probability && cb::is_tail_bound(name)) r = cb::to_probability(std::move(r));
    out.push_back(cb::to_json(r));
  }
  emit((out.size() == 1 ? out[0] : out).dump(2) + "\n");
}

struct EstimateArgs {
  std::string functions;
  std::string kernel;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  bool center = false;
};

void run_estimate_l(const EstimateArgs& a) {
  auto file = cb::load_step_functions(a.functions);
  Eigen::VectorXd mu = uniform_mu(file.states);
  std::string mu_source = "uniform";
  if (!a.kernel.empty()) {
    const auto kernel = cb::TransitionKernel::from_matrix(cb::load_kernel_matrix(a.kernel));
    cb::require(kernel.n_states() == file.states, "kernel size differs from functions N");
    mu = kernel.mu();
    mu_source = "kernel";
  }
  if (a.center) file = cb::center_and_normalize(file, mu);
  const auto est = cb::estimate_L(file, mu, a.trials, a.seed);
  const auto var = cb::variance_statistics(file, mu);
  json out = {{"L", cb::to_json(est)},
              {"sigma2_scalar", var.sigma2_scalar},
              {"variance_norm", var.variance_norm ? json(*var.variance_norm) : json(nullptr)},
              {"space", file.space.describe()},
              {"steps", file.steps},
              {"states", file.states},
              {"mu_source", mu_source},
              {"centered", a.center}};
  emit(out.dump(2) + "\n");
}

struct GammaArgs {
  std::string witness;
  std::string kernel;
  std::size_t depth = 5;
  std::string metric = "raw";
  double lambda = 0.0;
  std::size_t mc_trials = 0;
  std::uint64_t seed = 1;
};

void run_gamma(const GammaArgs& a) {
  auto file = cb::load_witness_file(a.witness);
  const auto& process = file.process;
  Eigen::VectorXd mu = file.mu.value_or(uniform_mu(process.states));
  std::string mu_source = file.mu ? "file" : "uniform";
  if (!a.kernel.empty()) {
    const auto kernel = cb::TransitionKernel::from_matrix(cb::load_kernel_matrix(a.kernel));
    cb::require(kernel.n_states() == process.states, "kernel size differs from witness N");
    mu = kernel.mu();
    mu_source = "kernel";
  }
  cb::MetricKind k1;
  cb::MetricKind k2;
  if (a.metric == "raw") {
    k1 = cb::MetricKind::LInf;
    k2 = cb::MetricKind::L2Mu;
  } else if (a.metric == "scaled") {
    k1 = cb::MetricKind::D1;
    k2 = cb::MetricKind::D2;
  } else {
    throw cb::ValidationError("--metric must be raw or scaled");
  }
  const cb::ProcessMetric m1(k1, process.states, mu, a.lambda);
  const cb::ProcessMetric m2(k2, process.states, mu, a.lambda);
  const auto seq1 = cb::greedy_admissible_sequence(process, m1, a.depth);
  const auto seq2 = cb::greedy_admissible_sequence(process, m2, a.depth);
  const auto g1 = cb::gamma_upper(process, seq1, 1, m1);
  const auto g2 = cb::gamma_upper(process, seq2, 2, m2);
  auto gamma_json = [](const cb::GammaBound& g, cb::MetricKind kind, const cb::AdmissibleSequence& s) {
    return json{{"value", g.value},
                {"final_level_term", g.final_level_term},
                {"exhausted", g.exhausted},
                {"metric", cb::to_string(kind)},
                {"sequence", cb::to_json(s)}};
  };
  json out = {{"points", process.size()},
              {"steps", process.steps},
              {"states", process.states},
              {"lambda", a.lambda},
              {"mu_source", mu_source},
              {"gamma1", gamma_json(g1, k1, seq1)},
              {"gamma2", gamma_json(g2, k2, seq2)}};
  if (a.mc_trials > 0) out["gaussian_sup"] = cb::to_json(cb::gaussian_sup_mc(process, mu, a.mc_trials, a.seed));
  emit(out.dump(2) + "\n");
}

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
};

void run_experiment_command(const ExperimentArgs& a) {
  const auto config = cb::load_experiment_config(a.config);
  const auto report = cb::run_experiment(config);
  const std::filesystem::path dir =
      a.output_dir.empty() ? cb::resolve_output_dir(config) : std::filesystem::path(a.output_dir);
  std::filesystem::create_directories(dir);
  const auto csv = cb::write_report(report, dir);
  std::cout << csv.string() << "\n";
  for (const auto& note : report.notes) std::cerr << "note: " << note << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration bounds for Markov chain sums in normed spaces"};
  app.require_subcommand(1);
  app.add_option("-o,--output", output_path, "Write output to this file (atomically)");

  SpectrumArgs spectrum;
  auto* sp = app.add_subcommand("spectrum", "lambda, mixing time and stationary law of a kernel");
  sp->add_option("--kernel", spectrum.kernel, "Transition matrix file")->required();
  sp->add_option("--threshold", spectrum.threshold, "Total-variation threshold for tau");

  SampleArgs sample;
  auto* sa = app.add_subcommand("sample", "Stationary trajectory, one 0-based state per line");
  sa->add_option("--kernel", sample.kernel, "Transition matrix file")->required();
  sa->add_option("--n", sample.n, "Trajectory length")->required();
  sa->add_option("--seed", sample.seed, "Random seed");

  BoundsArgs bounds;
  auto* bo = app.add_subcommand("bounds", "Evaluate closed-form bounds");
  bo->add_option("--name", bounds.names, "Bound name (repeatable) or 'all'")->required();
  bo->add_option("--u", bounds.in.u, "Deviation u");
  bo->add_option("--sigma2", bounds.in.sigma2, "Variance proxy");
  bo->add_option("--M", bounds.in.M, "Uniform bound on |f|");
  bo->add_option("--lambda", bounds.in.lambda, "Spectral quantity in [0,1)");
  bo->add_option("--k", bounds.in.k, "Dimension");
  bo->add_option("--d", bounds.in.d, "Matrix side for sharp_expectation");
  bo->add_option("--L", bounds.in.L, "Gaussian complexity");
  bo->add_option("--n", bounds.in.n, "Number of steps");
  bo->add_option("--s", bounds.in.s, "Smoothness parameter");
  bo->add_option("--variance-norm", bounds.in.variance_norm, "||sum A_i^2||");
  bo->add_option("--tau", bounds.tau, "Mixing time (McDiarmid)");
  bo->add_option("--c", bounds.c, "Bounded differences c_i (comma separated)")->delimiter(',');
  bo->add_option("--c-value", bounds.c_value, "Common c_i when --c is absent (n copies)");
  bo->add_option("--variant", bounds.variant, "sharp_expectation variant: matrix or linf");
  bo->add_option("--c-naor", bounds.consts.c_naor);
  bo->add_option("--C-main", bounds.consts.C_main);
  bo->add_option("--C1-tail", bounds.consts.C1_tail);
  bo->add_option("--C2-tail", bounds.consts.C2_tail);
  bo->add_option("--C-gauss", bounds.consts.C_gauss);
  bo->add_option("--C-net", bounds.consts.C_net);
  bo->add_flag("--probability", bounds.probability, "Cap tail bounds at 1");
  bo->add_option("--u-grid", bounds.u_grid, "lo:hi:count log grid; prints CSV");

  EstimateArgs estimate;
  auto* es = app.add_subcommand("estimate-l", "Monte Carlo Gaussian complexity of a function file");
  es->add_option("--functions", estimate.functions, "Step-function table file")->required();
  es->add_option("--kernel", estimate.kernel, "Kernel whose stationary law weights the Gaussians");
  es->add_option("--trials", estimate.trials, "Monte Carlo trials");
  es->add_option("--seed", estimate.seed, "Random seed");
  es->add_flag("--center", estimate.center, "Center and normalize under mu first");

  GammaArgs gamma;
  auto* ga = app.add_subcommand("gamma", "Greedy gamma_1 / gamma_2 upper bounds of a witness process");
  ga->add_option("--witness", gamma.witness, "Witness process file")->required();
  ga->add_option("--kernel", gamma.kernel, "Kernel providing mu");
  ga->add_option("--depth", gamma.depth, "Number of admissible levels");
  ga->add_option("--metric", gamma.metric, "raw (l_inf, L2(mu)) or scaled (d1, d2)");
  ga->add_option("--lambda", gamma.lambda, "Spectral quantity for scaled metrics");
  ga->add_option("--mc-trials", gamma.mc_trials, "Also estimate E sup <g, t> with this many trials");
  ga->add_option("--seed", gamma.seed, "Random seed for --mc-trials");

  ExperimentArgs experiment;
  auto* ex = app.add_subcommand("experiment", "Run a configured sweep and write CSV/JSON reports");
  ex->add_option("--config", experiment.config, "INI config file")->required();
  ex->add_option("--output-dir", experiment.output_dir, "Overrides config and environment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*sp) run_spectrum(spectrum);
    if (*sa) run_sample(sample);
    if (*bo) run_bounds(bounds);
    if (*es) run_estimate_l(estimate);
    if (*ga) run_gamma(gamma);
    if (*ex) run_experiment_command(experiment);
  } catch (const cb::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const cb::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
