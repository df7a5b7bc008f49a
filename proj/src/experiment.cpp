#include "chainbound/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "chainbound/error.hpp"
#include "chainbound/random.hpp"
#include "chainbound/text_io.hpp"

namespace chainbound {

namespace {

// ---------------------------------------------------------------------------
// Config parsing helpers

class KeyValues {
 public:
  explicit KeyValues(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = std::string(io::trim(it->second));
    values_.erase(it);
    return v;
  }

  bool has_prefix(const std::string& prefix) const {
    auto it = values_.lower_bound(prefix);
    return it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

  void reject_leftovers() const {
    if (values_.empty()) return;
    std::string keys;
    for (const auto& [k, v] : values_) keys += (keys.empty() ? "" : ", ") + k;
    throw ValidationError("unknown config keys: " + keys);
  }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("not a boolean: '" + s + "'");
}

ChainSpec parse_chain(KeyValues& kv, const std::string& prefix) {
  const auto kind = kv.take(prefix + "kind");
  require(kind.has_value(), "config: missing " + prefix + "kind");
  const auto size = kv.take(prefix + "size");
  const auto move = kv.take(prefix + "move_prob");
  std::optional<double> move_prob;
  if (move) move_prob = io::parse_double(*move);
  auto need_size = [&] {
    require(size.has_value(), "config: missing " + prefix + "size");
    return io::parse_size(*size);
  };
  if (*kind == "cycle") return ChainSpec::cycle(need_size(), move_prob);
  if (*kind == "hypercube") return ChainSpec::hypercube(need_size(), move_prob);
  if (*kind == "complete") return ChainSpec::complete(need_size());
  if (*kind == "lazy") {
    const auto hold = kv.take(prefix + "hold_prob");
    require(hold.has_value(), "config: missing " + prefix + "hold_prob");
    return ChainSpec::lazy(parse_chain(kv, prefix + "base."), io::parse_double(*hold));
  }
  if (*kind == "metropolis") {
    const auto target = kv.take(prefix + "target");
    require(target.has_value(), "config: missing " + prefix + "target");
    std::vector<double> weights;
    for (const auto& tok : split_list(*target)) weights.push_back(io::parse_double(tok));
    std::optional<ChainSpec> proposal;
    if (kv.has_prefix(prefix + "proposal.")) proposal = parse_chain(kv, prefix + "proposal.");
    return ChainSpec::metropolis(std::move(weights), std::move(proposal));
  }
  if (*kind == "file") {
    const auto path = kv.take(prefix + "path");
    require(path.has_value(), "config: missing " + prefix + "path");
    return ChainSpec::file(*path);
  }
  throw ValidationError("config: unknown chain kind '" + *kind + "'");
}

void format_chain(std::ostringstream& out, const ChainSpec& spec, const std::string& prefix) {
  using Kind = ChainSpec::Kind;
  switch (spec.kind) {
    case Kind::Cycle:
      out << prefix << "kind = cycle\n" << prefix << "size = " << spec.size << "\n"
          << prefix << "move_prob = " << io::format_double(spec.move_prob.value_or(2.0 / 3.0))
          << "\n";
      break;
    case Kind::Hypercube:
      out << prefix << "kind = hypercube\n" << prefix << "size = " << spec.size << "\n"
          << prefix << "move_prob = " << io::format_double(spec.move_prob.value_or(0.5)) << "\n";
      break;
    case Kind::Complete:
      out << prefix << "kind = complete\n" << prefix << "size = " << spec.size << "\n";
      break;
    case Kind::Lazy:
      out << prefix << "kind = lazy\n"
          << prefix << "hold_prob = " << io::format_double(spec.hold_prob) << "\n";
      format_chain(out, *spec.base, prefix + "base.");
      break;
    case Kind::Metropolis: {
      out << prefix << "kind = metropolis\n" << prefix << "target = ";
      for (std::size_t v = 0; v < spec.target.size(); ++v) {
        out << (v ? ", " : "") << io::format_double(spec.target[v]);
      }
      out << "\n";
      if (spec.base) format_chain(out, *spec.base, prefix + "proposal.");
      break;
    }
    case Kind::File:
      out << prefix << "kind = file\n" << prefix << "path = " << spec.path.string() << "\n";
      break;
  }
}

std::string function_source_name(FunctionSource s) {
  switch (s) {
    case FunctionSource::RandomRademacherMatrices:
      return "random_rademacher_matrices";
    case FunctionSource::RandomUnitVectors:
      return "random_unit_vectors";
    case FunctionSource::File:
      return "file";
  }
  return "?";
}

// Runs one stage, prefixing any failure with the stage name.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

double ratio_of(double empirical, double bound) {
  if (empirical == 0.0) return 0.0;
  return empirical / bound;
}

bool enabled(const ExperimentConfig& c, std::string_view name) {
  return std::find(c.bounds_enabled.begin(), c.bounds_enabled.end(), name) != c.bounds_enabled.end();
}

const std::vector<std::string> kTailColumns{"paulin", "main_tail", "nsw", "mcdiarmid"};

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  require(!name.empty() && name.find('/') == std::string::npos, "config: invalid experiment name");
  require(!n_sweep.empty(), "config: n_sweep must be non-empty");
  require(n_sweep.front() >= 1, "config: n_sweep entries must be >= 1");
  for (std::size_t j = 1; j < n_sweep.size(); ++j) {
    require(n_sweep[j] > n_sweep[j - 1], "config: n_sweep must be strictly ascending");
  }
  require(trials >= 100, "config: trials must be >= 100 for tail experiments");
  require(l_trials >= 2, "config: l_trials must be >= 2");
  constants.validate();
  require(thresholds.empty() ? threshold_count >= 2 : std::is_sorted(thresholds.begin(), thresholds.end()),
          "config: thresholds must be ascending (or a count >= 2)");
  for (const auto& b : bounds_enabled) {
    const auto& names = bound_names();
    require(std::find(names.begin(), names.end(), b) != names.end(),
            "config: unknown bound '" + b + "'");
  }
  require(smoothness_s > 0.0, "config: smoothness_s must be positive");
  require(mixing_threshold > 0.0 && mixing_threshold < 1.0,
          "config: mixing_threshold must lie in (0,1)");
  if (functions == FunctionSource::RandomRademacherMatrices) {
    require(space.kind() == NormedSpace::Kind::SymMatrix,
            "config: random_rademacher_matrices needs a sym_matrix space");
  }
  if (functions == FunctionSource::File) {
    require(!functions_path.empty(), "config: functions.path is required for file functions");
  }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  std::map<std::string, std::string> flat;
  for (const auto& [section, node] : tree) {
    require(!node.empty(), "config: key '" + section + "' must be inside a section");
    for (const auto& [key, value] : node) flat[section + "." + key] = value.data();
  }
  KeyValues kv(std::move(flat));

  ExperimentConfig c;
  if (auto v = kv.take("experiment.name")) c.name = *v;
  if (auto v = kv.take("experiment.n_sweep")) {
    c.n_sweep.clear();
    for (const auto& tok : split_list(*v)) c.n_sweep.push_back(io::parse_size(tok));
  }
  if (auto v = kv.take("experiment.trials")) c.trials = io::parse_size(*v);
  if (auto v = kv.take("experiment.l_trials")) c.l_trials = io::parse_size(*v);
  if (auto v = kv.take("experiment.seed")) c.seed = static_cast<std::uint64_t>(io::parse_size(*v));
  if (auto v = kv.take("experiment.thresholds")) {
    const auto toks = split_list(*v);
    if (toks.size() == 1 && toks[0].find_first_not_of("0123456789") == std::string::npos) {
      c.threshold_count = io::parse_size(toks[0]);
      c.thresholds.clear();
    } else {
      c.thresholds.clear();
      for (const auto& tok : toks) c.thresholds.push_back(io::parse_double(tok));
    }
  }
  if (auto v = kv.take("experiment.bounds")) c.bounds_enabled = split_list(*v);
  if (auto v = kv.take("experiment.smoothness_s")) c.smoothness_s = io::parse_double(*v);
  if (auto v = kv.take("experiment.mixing_threshold")) c.mixing_threshold = io::parse_double(*v);
  if (auto v = kv.take("experiment.probability_mode")) c.probability_mode = parse_bool(*v);
  if (auto v = kv.take("experiment.output_dir")) c.output_dir = *v;

  if (kv.has_prefix("chain.")) c.chain = parse_chain(kv, "chain.");

  if (auto kind = kv.take("space.kind")) {
    const auto dim = kv.take("space.dim");
    const auto side = kv.take("space.side");
    const auto p = kv.take("space.p");
    if (*kind == "sym_matrix" || *kind == "sym") {
      require(side.has_value(), "config: sym_matrix space needs space.side");
      c.space = NormedSpace::sym_matrix(io::parse_size(*side));
    } else {
      require(dim.has_value(), "config: vector space needs space.dim");
      if (*kind == "lp") {
        require(p.has_value(), "config: lp space needs space.p");
        c.space = NormedSpace::lp(io::parse_double(*p), io::parse_size(*dim));
      } else {
        c.space = NormedSpace::parse(*kind, io::parse_size(*dim));
      }
    }
  }

  if (auto kind = kv.take("functions.kind")) {
    if (*kind == "random_rademacher_matrices") {
      c.functions = FunctionSource::RandomRademacherMatrices;
    } else if (*kind == "random_unit_vectors") {
      c.functions = FunctionSource::RandomUnitVectors;
    } else if (*kind == "file") {
      c.functions = FunctionSource::File;
    } else {
      throw ValidationError("config: unknown functions.kind '" + *kind + "'");
    }
  }
  if (auto v = kv.take("functions.path")) c.functions_path = *v;
  if (auto v = kv.take("functions.time_homogeneous")) c.time_homogeneous = parse_bool(*v);
  if (auto v = kv.take("functions.seed")) c.functions_seed = static_cast<std::uint64_t>(io::parse_size(*v));

  if (auto v = kv.take("constants.c_naor")) c.constants.c_naor = io::parse_double(*v);
  if (auto v = kv.take("constants.C_main")) c.constants.C_main = io::parse_double(*v);
  if (auto v = kv.take("constants.C1_tail")) c.constants.C1_tail = io::parse_double(*v);
  if (auto v = kv.take("constants.C2_tail")) c.constants.C2_tail = io::parse_double(*v);
  if (auto v = kv.take("constants.C_gauss")) c.constants.C_gauss = io::parse_double(*v);
  if (auto v = kv.take("constants.C_net")) c.constants.C_net = io::parse_double(*v);

  kv.reject_leftovers();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(io::read_file(path));
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\n"
      << "name = " << c.name << "\n"
      << "n_sweep = ";
  for (std::size_t j = 0; j < c.n_sweep.size(); ++j) out << (j ? ", " : "") << c.n_sweep[j];
  out << "\ntrials = " << c.trials << "\nl_trials = " << c.l_trials << "\nseed = " << c.seed
      << "\nthresholds = ";
  if (c.thresholds.empty()) {
    out << c.threshold_count;
  } else {
    for (std::size_t j = 0; j < c.thresholds.size(); ++j) {
      out << (j ? ", " : "") << io::format_double(c.thresholds[j]);
    }
  }
  out << "\nbounds = ";
  for (std::size_t j = 0; j < c.bounds_enabled.size(); ++j) {
    out << (j ? ", " : "") << c.bounds_enabled[j];
  }
  out << "\nsmoothness_s = " << io::format_double(c.smoothness_s)
      << "\nmixing_threshold = " << io::format_double(c.mixing_threshold)
      << "\nprobability_mode = " << (c.probability_mode ? "true" : "false")
      << "\noutput_dir = " << c.output_dir.string() << "\n\n[chain]\n";
  format_chain(out, c.chain, "");
  out << "\n[space]\n";
  switch (c.space.kind()) {
    case NormedSpace::Kind::SymMatrix:
      out << "kind = sym_matrix\nside = " << c.space.side() << "\n";
      break;
    case NormedSpace::Kind::Linf:
      out << "kind = linf\ndim = " << c.space.dim() << "\n";
      break;
    case NormedSpace::Kind::Lp:
      out << "kind = lp\np = " << io::format_double(c.space.p()) << "\ndim = " << c.space.dim()
          << "\n";
      break;
  }
  out << "\n[functions]\nkind = " << function_source_name(c.functions) << "\n";
  if (c.functions == FunctionSource::File) out << "path = " << c.functions_path.string() << "\n";
  out << "time_homogeneous = " << (c.time_homogeneous ? "true" : "false") << "\n";
  if (c.functions_seed) out << "seed = " << *c.functions_seed << "\n";
  out << "\n[constants]\n";
  for (const auto& [k, v] : c.constants.entries()) out << k << " = " << io::format_double(v) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Running

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  stage("config", [&] { config.validate(); });

  ExperimentReport report;
  report.config = config;

  const TransitionKernel kernel = stage("chain", [&] { return build_chain(config.chain); });
  report.n_states = kernel.n_states();
  report.lambda = kernel.lambda();
  report.mu = kernel.mu();
  try {
    report.tau = mixing_time(kernel, config.mixing_threshold);
  } catch (const NumericalError& e) {
    report.notes.push_back(std::string("mixing time unavailable: ") + e.what());
  }
  const bool gap_positive = report.lambda < 1.0;
  if (!gap_positive) report.notes.push_back("lambda = 1: spectral-gap bounds skipped");

  const std::size_t n_max = config.n_sweep.back();
  const std::uint64_t fseed = config.functions_seed.value_or(substream_seed(config.seed, 0xF00D));
  const StepFunctions family = stage("functions", [&] {
    StepFunctions raw;
    switch (config.functions) {
      case FunctionSource::RandomRademacherMatrices:
        raw = random_rademacher_matrices(config.space.side(), n_max, kernel.n_states(), fseed,
                                         config.time_homogeneous);
        break;
      case FunctionSource::RandomUnitVectors:
        raw = random_unit_vectors(config.space, n_max, kernel.n_states(), fseed,
                                  config.time_homogeneous);
        break;
      case FunctionSource::File:
        raw = load_step_functions(config.functions_path);
        require(raw.space == config.space, "functions file space " + raw.space.describe() +
                                               " differs from configured " +
                                               config.space.describe());
        require(raw.states == kernel.n_states(), "functions file N differs from chain size");
        require(raw.steps >= n_max, "functions file has fewer steps than max(n_sweep)");
        break;
    }
    StepFunctions f = center_and_normalize(raw, kernel.mu());
    require(!f.degenerate, "functions vanish after centering");
    return f;
  });

  const auto& consts = config.constants;
  const std::size_t k = config.space.dim();
  const std::size_t nsw_k =
      config.space.kind() == NormedSpace::Kind::SymMatrix ? config.space.side() : config.space.dim();
  const bool scalar = config.space.dim() == 1;
  if (enabled(config, "paulin") && !scalar) {
    report.notes.push_back("paulin: applies to scalar functions only; skipped");
  }
  if (enabled(config, "mcdiarmid") && !report.tau) {
    report.notes.push_back("mcdiarmid: no mixing time; skipped");
  }
  if (enabled(config, "naor")) {
    report.notes.push_back("naor: independent-sample bound, evaluated at u = threshold/sqrt(n)");
  }
  if (enabled(config, "mcdiarmid")) {
    report.notes.push_back(
        "mcdiarmid: deviation u = max(0, threshold - empirical mean), c_i = 2 * max norm");
  }

  for (std::size_t j = 0; j < config.n_sweep.size(); ++j) {
    const std::size_t n = config.n_sweep[j];
    SweepPoint point;
    point.n = n;
    const StepFunctions f = family.prefix(n);
    point.variance = stage("variance", [&] { return variance_statistics(f, kernel.mu()); });
    point.gaussian_complexity = stage("gaussian complexity", [&] {
      return estimate_L(f, kernel.mu(), config.l_trials, substream_seed(config.seed ^ 0x4c4cULL, j));
    });
    ChainSumResult sums = stage("chain sum", [&] {
      return estimate_chain_sum(f, kernel, config.trials, substream_seed(config.seed ^ 0x4353ULL, j));
    });
    point.chain_sum = sums.estimate;
    const std::vector<double> grid = config.thresholds.empty()
                                         ? default_threshold_grid(sums.estimate.mean,
                                                                  config.threshold_count)
                                         : config.thresholds;
    point.tail = empirical_tail(sums.samples, grid);

    stage("bounds", [&] {
      const double mean = point.chain_sum.mean;
      const double L = point.gaussian_complexity.mean;
      const double M = f.max_norm;
      const double sigma2 = point.variance.sigma2_scalar;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::map<std::string, std::vector<double>> columns;
      for (const auto& name : kTailColumns) columns[name].assign(grid.size(), nan);

      auto add_tail = [&](const std::string& column, const BoundReport& raw, std::size_t idx) {
        const BoundReport r = config.probability_mode ? to_probability(raw) : raw;
        const double tail = point.tail.probabilities[idx];
        point.rows.push_back({n, grid[idx], mean, tail, r.name, r.value, ratio_of(tail, r.value)});
        if (columns.count(column)) columns[column][idx] = r.value;
      };

      for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const double x = grid[idx];
        if (enabled(config, "paulin") && scalar && gap_positive && sigma2 > 0.0 && M > 0.0) {
          add_tail("paulin", paulin_tail(x, sigma2, M, report.lambda, consts), idx);
        }
        if (enabled(config, "main_tail") && gap_positive && L > 0.0) {
          add_tail("main_tail", main_tail(x, k, report.lambda, L, consts), idx);
        }
        if (enabled(config, "nsw") && gap_positive && sigma2 > 0.0) {
          add_tail("nsw", nsw_tail(x, sigma2, report.lambda, nsw_k, consts), idx);
        }
        if (enabled(config, "mcdiarmid") && report.tau && M > 0.0) {
          const std::vector<double> c(n, 2.0 * M);
          add_tail("mcdiarmid", mcdiarmid_tail(std::max(0.0, x - mean), c, report.tau, consts),
                   idx);
        }
        if (enabled(config, "naor")) {
          add_tail("naor", naor_bounds(x / std::sqrt(static_cast<double>(n)), n,
                                       config.smoothness_s, consts),
                   idx);
        }
      }

      auto add_expectation = [&](const BoundReport& r, double empirical) {
        point.rows.push_back({n, std::nullopt, empirical, std::nullopt, r.name, r.value,
                              ratio_of(empirical, r.value)});
      };
      if (enabled(config, "main_expectation") && gap_positive) {
        add_expectation(main_expectation(k, report.lambda, L, consts), mean);
      }
      if (enabled(config, "sharp_expectation") && gap_positive) {
        if (config.space.kind() == NormedSpace::Kind::SymMatrix) {
          add_expectation(sharp_expectation(SharpVariant::Matrix, config.space.side(),
                                            report.lambda, L, consts),
                          mean);
        } else if (config.space.kind() == NormedSpace::Kind::Linf) {
          add_expectation(
              sharp_expectation(SharpVariant::Linf, config.space.dim(), report.lambda, L, consts),
              mean);
        }
      }
      if (enabled(config, "gaussian_matrix") && point.variance.variance_norm &&
          config.space.side() >= 2) {
        // Bounds the Gaussian complexity itself, so the empirical column is L.
        add_expectation(
            gaussian_matrix_expectation(*point.variance.variance_norm, config.space.side(), consts),
            L);
      }
      if (enabled(config, "naor")) {
        const BoundReport r = naor_bounds(0.0, n, config.smoothness_s, consts);
        ReportRow row{n, std::nullopt, mean, std::nullopt, "naor_expectation",
                      r.get("expectation"), 0.0};
        row.ratio = ratio_of(mean, row.bound_value);
        point.rows.push_back(row);
      }
      for (const auto& name : kTailColumns) point.tail_bounds.emplace_back(name, columns[name]);
    });
    report.points.push_back(std::move(point));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Output

std::string report_csv(const ExperimentReport& report) {
  std::string out = "n,threshold,empirical_mean,empirical_tail,bound_name,bound_value,ratio\n";
  for (const auto& point : report.points) {
    for (const auto& row : point.rows) {
      out += std::to_string(row.n) + "," +
             (row.threshold ? io::format_double(*row.threshold) : std::string()) + "," +
             io::format_double(row.empirical_mean) + "," +
             (row.empirical_tail ? io::format_double(*row.empirical_tail) : std::string()) + "," +
             row.bound_name + "," + io::format_double(row.bound_value) + "," +
             io::format_double(row.ratio) + "\n";
    }
  }
  return out;
}

std::string tail_csv(const SweepPoint& point) {
  std::string out = "threshold,empirical_tail";
  for (const auto& [name, values] : point.tail_bounds) out += "," + name;
  out += "\n";
  for (std::size_t idx = 0; idx < point.tail.thresholds.size(); ++idx) {
    out += io::format_double(point.tail.thresholds[idx]) + "," +
           io::format_double(point.tail.probabilities[idx]);
    for (const auto& [name, values] : point.tail_bounds) {
      out += ",";
      if (idx < values.size() && !std::isnan(values[idx])) out += io::format_double(values[idx]);
    }
    out += "\n";
  }
  return out;
}

nlohmann::json report_json(const ExperimentReport& report) {
  using nlohmann::json;
  const auto& c = report.config;
  json config = {{"name", c.name},
                 {"chain", c.chain.describe()},
                 {"space", c.space.describe()},
                 {"functions", function_source_name(c.functions)},
                 {"time_homogeneous", c.time_homogeneous},
                 {"n_sweep", c.n_sweep},
                 {"trials", c.trials},
                 {"l_trials", c.l_trials},
                 {"seed", c.seed},
                 {"threshold_count", c.threshold_count},
                 {"thresholds", c.thresholds},
                 {"bounds", c.bounds_enabled},
                 {"smoothness_s", c.smoothness_s},
                 {"mixing_threshold", c.mixing_threshold},
                 {"probability_mode", c.probability_mode},
                 {"text", format_experiment_config(c)}};
  json constants = json::object();
  for (const auto& [k, v] : c.constants.entries()) constants[k] = v;
  config["constants"] = constants;

  std::vector<double> mu(report.mu.data(), report.mu.data() + report.mu.size());
  json metadata = {{"n_states", report.n_states},
                   {"lambda", report.lambda},
                   {"tau", report.tau ? json(*report.tau) : json(nullptr)},
                   {"mu", mu},
                   {"space_dimension", c.space.dim()},
                   {"wall_seconds", report.wall_seconds},
                   {"notes", report.notes}};

  json sweep = json::array();
  for (std::size_t j = 0; j < report.points.size(); ++j) {
    const auto& p = report.points[j];
    json rows = json::array();
    for (const auto& r : p.rows) {
      rows.push_back({{"threshold", r.threshold ? json(*r.threshold) : json(nullptr)},
                      {"empirical_mean", r.empirical_mean},
                      {"empirical_tail", r.empirical_tail ? json(*r.empirical_tail) : json(nullptr)},
                      {"bound_name", r.bound_name},
                      {"bound_value", r.bound_value},
                      {"ratio", r.ratio}});
    }
    sweep.push_back({{"n", p.n},
                     {"gaussian_complexity", to_json(p.gaussian_complexity)},
                     {"chain_sum", to_json(p.chain_sum)},
                     {"sigma2_scalar", p.variance.sigma2_scalar},
                     {"variance_norm", p.variance.variance_norm ? json(*p.variance.variance_norm)
                                                                : json(nullptr)},
                     {"rows", rows}});
  }
  return {{"config", config}, {"metadata", metadata}, {"sweep", sweep}};
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("CHAINBOUND_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

std::filesystem::path write_report(const ExperimentReport& report,
                                   const std::filesystem::path& dir) {
  const std::string& name = report.config.name;
  // Assemble everything first so a failure leaves no partial files behind.
  const std::string csv = report_csv(report);
  const std::string json = report_json(report).dump(2) + "\n";
  std::vector<std::pair<std::filesystem::path, std::string>> tails;
  for (const auto& point : report.points) {
    tails.emplace_back(dir / (name + "_tails_n" + std::to_string(point.n) + ".csv"),
                       tail_csv(point));
  }
  for (const auto& [path, text] : tails) io::write_file_atomic(path, text);
  io::write_file_atomic(dir / (name + ".json"), json);
  const auto csv_path = dir / (name + ".csv");
  io::write_file_atomic(csv_path, csv);
  return csv_path;
}

}  // namespace chainbound
