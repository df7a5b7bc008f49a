#pragma once

// Closed-form concentration bounds. Every unnamed universal constant is a
// field of UniversalConstants and is echoed in each report.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace chainbound {

struct UniversalConstants {
  double c_naor = 1.0;   // Banach-space tail exponent constant
  double C_main = 1.0;   // expectation bounds
  double C1_tail = 1.0;  // prefactor of the chaining tail bound
  double C2_tail = 1.0;  // exponent constant of the chaining tail bound
  double C_gauss = 1.0;  // Gaussian matrix series
  double C_net = 1.0;    // epsilon-net radius constant in the gamma_1 sum

  /// Throws ValidationError unless every constant is strictly positive.
  void validate() const;
  std::vector<std::pair<std::string, double>> entries() const;
};

struct BoundReport {
  std::string name;
  double value = 0.0;
  /// Argument of exp(.) for exponential bounds.
  std::optional<double> exponent;
  /// Set by to_probability when the raw value exceeded 1.
  bool clipped = false;
  double raw_value = 0.0;
  std::vector<std::pair<std::string, double>> params;
  /// Companion values, e.g. the simplified Bernstein form.
  std::vector<std::pair<std::string, double>> extras;
  std::vector<std::string> notes;

  /// Looks up a value in params or extras; throws std::out_of_range.
  double get(std::string_view key) const;
};

/// Caps a probability bound at 1, flagging the report when capped.
BoundReport to_probability(BoundReport report);

nlohmann::json to_json(const BoundReport& report);

// ---------------------------------------------------------------------------
// Bounds

/// Markov-chain Bernstein inequality for scalar functions bounded by M:
/// 2 exp(-u^2 (2(1-l) - (1-l)^2) / (8 sigma2 + 20 u M)). The extra
/// "simplified" is 2 exp(-min{u^2 (1-l)/(16 sigma2), u (1-l)/(40 M)}).
BoundReport paulin_tail(double u, double sigma2, double M, double lambda,
                        const UniversalConstants& consts = {});

/// Independent Banach-space tail exp(s + 2 - c u^2) for the event
/// ||sum|| >= u sqrt(n); extra "expectation" = C sqrt(n s).
BoundReport naor_bounds(double u, std::size_t n, double s, const UniversalConstants& consts = {});

/// C k/(1-l) + C L/sqrt(1-l).
BoundReport main_expectation(std::size_t k, double lambda, double L,
                             const UniversalConstants& consts = {});

/// C1 exp(-C2 (1-l) min{u/k, u^2/L^2}).
BoundReport main_tail(double u, std::size_t k, double lambda, double L,
                      const UniversalConstants& consts = {});

enum class SharpVariant { Matrix, Linf };

/// Matrix (side d): C d/(1-l) + C L/sqrt(1-l).
/// l_inf (dimension k): C ln(k)/(1-l) + C L/sqrt(1-l).
BoundReport sharp_expectation(SharpVariant variant, std::size_t size, double lambda, double L,
                              const UniversalConstants& consts = {});

/// Gaussian matrix series bound for side length k. The primary value is the
/// square-root reading C sqrt(||sum A_i^2|| ln k); extra "as_stated" is
/// C ||sum A_i^2|| sqrt(ln k).
BoundReport gaussian_matrix_expectation(double variance_norm, std::size_t k,
                                        const UniversalConstants& consts = {});

/// Matrix Bernstein tail for Markov chains:
/// k^{1-pi/8} exp(-(u^2 pi^2/32^2) / (alpha(l) sigma2 + beta(l) u)).
BoundReport nsw_tail(double u, double sigma2, double lambda, std::size_t k,
                     const UniversalConstants& consts = {});

/// McDiarmid: 2 exp(-2u^2 / (tau sum c_i^2)); tau absent means independent.
BoundReport mcdiarmid_tail(double u, std::span<const double> c, std::optional<std::size_t> tau,
                           const UniversalConstants& consts = {});

enum class Gamma1Kind { DualBall, Linf };

/// Last index ceil(log2 log2(2k + 1)) of the trivial l_inf chaining sequence.
std::size_t linf_chain_cutoff(std::size_t k);

/// DualBall: C_net * sum_{i>=0} 2^i min(1, 2^{-2^i/k}), truncated once terms
/// fall below 1e-15. Linf: sum_{i=0}^{linf_chain_cutoff(k)} 2^i.
double gamma1_analytic(Gamma1Kind kind, std::size_t k, const UniversalConstants& consts = {});

// ---------------------------------------------------------------------------
// Name-based evaluation shared by the CLI and the experiment runner.

struct BoundInputs {
  double u = 0.0;
  double sigma2 = 1.0;
  double M = 1.0;
  double lambda = 0.0;
  std::size_t k = 1;
  double L = 1.0;
  std::size_t n = 1;
  double s = 1.0;
  std::size_t d = 1;
  double variance_norm = 1.0;
  std::vector<double> c;
  std::optional<std::size_t> tau;
  SharpVariant variant = SharpVariant::Matrix;
};

/// Known names: paulin, naor, main_expectation, main_tail, sharp_expectation,
/// gaussian_matrix, nsw, mcdiarmid.
const std::vector<std::string>& bound_names();
bool is_tail_bound(std::string_view name);
BoundReport evaluate_bound(std::string_view name, const BoundInputs& in,
                           const UniversalConstants& consts = {});

/// CSV with one row per (bound, u): name,u,value,exponent,clipped.
std::string bounds_csv(std::span<const std::string> names, const BoundInputs& base,
                       std::span<const double> u_grid, const UniversalConstants& consts,
                       bool probability_mode);

}  // namespace chainbound
