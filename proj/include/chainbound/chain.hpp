#pragma once

// Finite stationary reversible Markov chains: construction, validation,
// spectral quantities, mixing time and trajectory sampling.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainbound/random.hpp"

namespace chainbound {

/// Recipe for one of the built-in chain families.
struct ChainSpec {
  enum class Kind { Cycle, Hypercube, Complete, Lazy, Metropolis, File };

  Kind kind = Kind::Complete;
  /// Number of states. For hypercubes it must be a power of two.
  std::size_t size = 0;
  /// Cycle: probability of leaving the current state (split evenly between
  /// the two neighbours), default 2/3. Hypercube: probability of flipping a
  /// uniformly chosen coordinate, default 1/2.
  std::optional<double> move_prob;
  /// Lazy: probability of holding in place.
  double hold_prob = 0.5;
  /// Metropolis: target distribution (strictly positive, normalised on build).
  std::vector<double> target;
  /// Lazy: base chain. Metropolis: proposal chain (defaults to complete).
  std::shared_ptr<const ChainSpec> base;
  std::filesystem::path path;

  static ChainSpec cycle(std::size_t n, std::optional<double> move_prob = std::nullopt);
  static ChainSpec hypercube(std::size_t n, std::optional<double> move_prob = std::nullopt);
  static ChainSpec complete(std::size_t n);
  static ChainSpec lazy(ChainSpec base, double hold_prob);
  static ChainSpec metropolis(std::vector<double> target,
                              std::optional<ChainSpec> proposal = std::nullopt);
  static ChainSpec file(std::filesystem::path path);

  std::string describe() const;
};

/// Validated, immutable reversible transition kernel with its stationary
/// distribution and spectral quantity lambda = ||A - 1 mu^T||_{L2(mu)}.
class TransitionKernel {
 public:
  /// Validates `rows` and computes mu and lambda. Throws ValidationError for
  /// non-stochastic, reducible or non-reversible input.
  static TransitionKernel from_matrix(Eigen::MatrixXd rows);

  std::size_t n_states() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  const Eigen::MatrixXd& rows() const noexcept { return rows_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  double lambda() const noexcept { return lambda_; }
  std::optional<std::size_t> tau() const noexcept { return tau_; }

  /// Copy with the mixing time filled in.
  TransitionKernel with_mixing_time(double threshold = 0.25) const;

  /// Draws the next state from row `state`.
  std::size_t step(std::size_t state, Rng& rng) const;
  /// Draws a state from mu.
  std::size_t draw_stationary(Rng& rng) const;

 private:
  TransitionKernel() = default;

  Eigen::MatrixXd rows_;
  Eigen::VectorXd mu_;
  double lambda_ = 0.0;
  std::optional<std::size_t> tau_;

  // Sparse cumulative rows for sampling.
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> targets_;
  std::vector<double> cumulative_;
  std::vector<double> mu_cumulative_;
};

TransitionKernel build_chain(const ChainSpec& spec);

/// Row-stochastic matrix of a spec, before kernel validation.
Eigen::MatrixXd chain_matrix(const ChainSpec& spec);

/// Stationary distribution of an irreducible row-stochastic matrix with
/// ||mu^T A - mu^T||_1 <= tol. Throws ValidationError if A is reducible and
/// NumericalError if the tolerance is not reached within `max_iterations`.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& rows, double tol = 1e-12,
                                        std::size_t max_iterations = 1'000'000);

/// ||A - 1 mu^T|| in L2(mu), via the symmetric conjugation D^{1/2} A D^{-1/2}.
double spectral_lambda(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mu);
inline double spectral_lambda(const TransitionKernel& kernel) {
  return spectral_lambda(kernel.rows(), kernel.mu());
}

/// Smallest t with max_v TV(A^t(v, .), mu) <= threshold.
std::size_t mixing_time(const TransitionKernel& kernel, double threshold = 0.25,
                        std::size_t max_steps = std::size_t{1} << 40);

/// Worst-case total-variation distance of the rows of `power` from mu.
double worst_tv_distance(const Eigen::MatrixXd& power, const Eigen::VectorXd& mu);

/// Y_1 ~ mu, Y_{i+1} ~ A(Y_i, .). States are 0-based.
std::vector<std::size_t> sample_trajectory(const TransitionKernel& kernel, std::size_t n,
                                           std::uint64_t seed);
void sample_trajectory(const TransitionKernel& kernel, Rng& rng, std::span<std::size_t> out);

/// Kernel file: first line N, then N lines of N decimals.
Eigen::MatrixXd read_kernel_matrix(std::istream& in);
Eigen::MatrixXd load_kernel_matrix(const std::filesystem::path& path);
std::string format_kernel_matrix(const Eigen::MatrixXd& rows);

}  // namespace chainbound
