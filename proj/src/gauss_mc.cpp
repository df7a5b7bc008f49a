#include "chainbound/gauss_mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "chainbound/error.hpp"
#include "chainbound/summation.hpp"

namespace chainbound {

nlohmann::json to_json(const McEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"trials", e.trials}, {"seed", e.seed}};
}

TailCurve empirical_tail(std::span<const double> samples, std::span<const double> thresholds) {
  require(!samples.empty(), "empirical_tail: no samples");
  require(std::is_sorted(thresholds.begin(), thresholds.end()),
          "empirical_tail: thresholds must be ascending");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  TailCurve tail;
  tail.trials = samples.size();
  tail.thresholds.assign(thresholds.begin(), thresholds.end());
  const double total = static_cast<double>(samples.size());
  for (double u : thresholds) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), u) - sorted.begin();
    const double p = static_cast<double>(sorted.size() - static_cast<std::size_t>(below)) / total;
    tail.probabilities.push_back(p);
    tail.std_errors.push_back(std::sqrt(p * (1.0 - p) / total));
  }
  return tail;
}

std::vector<double> default_threshold_grid(double scale, std::size_t count) {
  require(count >= 2, "threshold grid needs at least two points");
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  std::vector<double> grid(count);
  const double lo = std::log(0.1 * scale);
  const double hi = std::log(10.0 * scale);
  for (std::size_t j = 0; j < count; ++j) {
    grid[j] = std::exp(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1));
  }
  return grid;
}

void draw_weighted_gaussians(const Eigen::VectorXd& mu, std::size_t steps, Rng& rng,
                             Eigen::VectorXd& out) {
  const auto states = mu.size();
  out.resize(static_cast<Eigen::Index>(steps) * states);
  std::normal_distribution<double> normal;
  const Eigen::ArrayXd sd = mu.array().sqrt();
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < steps; ++i) {
    for (Eigen::Index v = 0; v < states; ++v) out(r++) = sd(v) * normal(rng);
  }
}

McEstimate estimate_L(const StepFunctions& f, const Eigen::VectorXd& mu, std::size_t trials,
                      std::uint64_t seed) {
  require(trials >= 2, "estimate_L needs at least two trials");
  require(static_cast<std::size_t>(mu.size()) == f.states, "estimate_L: mu does not match N");
  std::vector<double> values(trials);
  Eigen::VectorXd g;
  Eigen::VectorXd sum;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(substream_seed(seed, t));
    draw_weighted_gaussians(mu, f.steps, rng, g);
    sum.noalias() = f.table.transpose() * g;
    values[t] = f.space.norm(sum);
  }
  const auto m = sample_moments(values);
  return {m.mean, m.std_error, trials, seed};
}

ChainSumResult estimate_chain_sum(const StepFunctions& f, const TransitionKernel& kernel,
                                  std::size_t trials, std::uint64_t seed,
                                  std::span<const double> thresholds) {
  require(trials >= 2, "estimate_chain_sum needs at least two trials");
  require(kernel.n_states() == f.states, "estimate_chain_sum: kernel has " +
                                             std::to_string(kernel.n_states()) +
                                             " states, functions have N = " +
                                             std::to_string(f.states));
  ChainSumResult result;
  result.samples.resize(trials);
  std::vector<std::size_t> path(f.steps);
  Eigen::VectorXd sum(static_cast<Eigen::Index>(f.space.dim()));
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(substream_seed(seed, t));
    sample_trajectory(kernel, rng, path);
    sum.setZero();
    for (std::size_t i = 0; i < f.steps; ++i) sum += f.value(i, path[i]).transpose();
    result.samples[t] = f.space.norm(sum);
  }
  const auto m = sample_moments(result.samples);
  result.estimate = {m.mean, m.std_error, trials, seed};
  if (thresholds.empty()) {
    const auto grid = default_threshold_grid(m.mean);
    result.tail = empirical_tail(result.samples, grid);
  } else {
    result.tail = empirical_tail(result.samples, thresholds);
  }
  return result;
}

double sigma2_scalar(const StepFunctions& f, const Eigen::VectorXd& mu) {
  require(static_cast<std::size_t>(mu.size()) == f.states, "sigma2: mu does not match N");
  CompensatedSum total;
  for (std::size_t i = 0; i < f.steps; ++i) {
    for (std::size_t v = 0; v < f.states; ++v) {
      const double x = f.space.norm(f.value(i, v).transpose());
      total += mu(static_cast<Eigen::Index>(v)) * x * x;
    }
  }
  return total.value();
}

double matrix_variance_norm(const StepFunctions& f, const Eigen::VectorXd& mu) {
  require(f.space.kind() == NormedSpace::Kind::SymMatrix,
          "matrix variance requested on a vector space");
  require(static_cast<std::size_t>(mu.size()) == f.states, "variance: mu does not match N");
  const auto d = static_cast<Eigen::Index>(f.space.side());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < f.steps; ++i) {
    for (std::size_t v = 0; v < f.states; ++v) {
      const auto row = f.value(i, v);
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          m(row.data(), d, d);
      acc.noalias() += mu(static_cast<Eigen::Index>(v)) * (m * m);
    }
  }
  acc = 0.5 * (acc + acc.transpose());
  return symmetric_spectral_norm(acc);
}

VarianceStatistics variance_statistics(const StepFunctions& f, const Eigen::VectorXd& mu) {
  VarianceStatistics s;
  s.sigma2_scalar = sigma2_scalar(f, mu);
  if (f.space.kind() == NormedSpace::Kind::SymMatrix) s.variance_norm = matrix_variance_norm(f, mu);
  return s;
}

}  // namespace chainbound
