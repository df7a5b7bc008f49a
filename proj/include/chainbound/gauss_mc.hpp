#pragma once

// Monte Carlo ground truth: Gaussian complexity L and the law of the chain
// sum ||f_1(Y_1) + ... + f_n(Y_n)||.
//
// Trial t of a run seeded with s draws from substream_seed(s, t), so results
// do not depend on evaluation order. Gaussians are drawn in (i, v) row-major
// order, which makes runs with the same seed use common random numbers.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "chainbound/banach.hpp"
#include "chainbound/chain.hpp"

namespace chainbound {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const McEstimate& e);

/// Empirical P[X >= threshold] on an ascending grid.
struct TailCurve {
  std::vector<double> thresholds;
  std::vector<double> probabilities;
  /// Binomial standard error sqrt(p(1-p)/trials) per threshold.
  std::vector<double> std_errors;
  std::size_t trials = 0;
};

TailCurve empirical_tail(std::span<const double> samples, std::span<const double> thresholds);

/// `count` log-spaced points on [0.1 * scale, 10 * scale].
std::vector<double> default_threshold_grid(double scale, std::size_t count = 32);

/// L = E || sum_i sum_v g_v^(i) f_i(v) || with g_v^(i) ~ N(0, mu_v).
McEstimate estimate_L(const StepFunctions& f, const Eigen::VectorXd& mu, std::size_t trials,
                      std::uint64_t seed);

/// Draws the n*N Gaussians of one trial (row-major in (i, v)) into `out`.
void draw_weighted_gaussians(const Eigen::VectorXd& mu, std::size_t steps, Rng& rng,
                             Eigen::VectorXd& out);

struct ChainSumResult {
  McEstimate estimate;
  TailCurve tail;
  std::vector<double> samples;
};

/// Samples `trials` stationary trajectories and records ||sum_i f_i(Y_i)||.
/// An empty threshold grid selects default_threshold_grid(mean).
ChainSumResult estimate_chain_sum(const StepFunctions& f, const TransitionKernel& kernel,
                                  std::size_t trials, std::uint64_t seed,
                                  std::span<const double> thresholds = {});

struct VarianceStatistics {
  /// sum_i E_mu ||f_i||^2
  double sigma2_scalar = 0.0;
  /// || sum_i E_mu f_i^2 || for matrix spaces.
  std::optional<double> variance_norm;
};

double sigma2_scalar(const StepFunctions& f, const Eigen::VectorXd& mu);
/// Throws ValidationError for vector spaces.
double matrix_variance_norm(const StepFunctions& f, const Eigen::VectorXd& mu);
VarianceStatistics variance_statistics(const StepFunctions& f, const Eigen::VectorXd& mu);

}  // namespace chainbound
