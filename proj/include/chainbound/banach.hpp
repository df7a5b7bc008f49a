#pragma once

// Finite-dimensional real normed spaces and families of step functions
// f_1, ..., f_n : [N] -> X.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "chainbound/random.hpp"

namespace chainbound {

/// Row-major table; row i*N + v holds f_i(v).
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Elements are stored as flat vectors of the ambient dimension. Matrices are
/// flattened row-major.
class NormedSpace {
 public:
  enum class Kind { Lp, Linf, SymMatrix };

  /// p = infinity yields the l_inf space.
  static NormedSpace lp(double p, std::size_t dim);
  static NormedSpace linf(std::size_t dim);
  /// Symmetric side x side matrices with the l2 -> l2 operator norm.
  static NormedSpace sym_matrix(std::size_t side);

  /// Parses "l<p>" (e.g. "l2", "l1.5"), "linf" or "sym" together with the
  /// ambient dimension (side^2 for "sym").
  static NormedSpace parse(const std::string& kind, std::size_t dim);

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  /// Ambient real dimension: k for vectors, d^2 for matrices.
  std::size_t dim() const noexcept { return dim_; }
  /// Matrix side length d (0 for vector spaces).
  std::size_t side() const noexcept { return side_; }

  /// Token used in file headers: "l2", "linf", "sym".
  std::string kind_token() const;
  std::string describe() const;

  double norm(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Norm of x viewed as a functional under the standard pairing: l_q for
  /// l_p, l_1 for l_inf, nuclear norm for matrices.
  double dual_norm(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Throws ValidationError on dimension mismatch or (matrices) asymmetry
  /// beyond 1e-12 relative to the largest entry.
  void validate_element(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Standard Gaussian element (Gaussian symmetric matrix for matrix spaces).
  Eigen::VectorXd random_gaussian(Rng& rng) const;
  /// Gaussian element rescaled to unit norm.
  Eigen::VectorXd random_unit(Rng& rng) const;
  /// Gaussian element rescaled to unit dual norm.
  Eigen::VectorXd random_dual_unit(Rng& rng) const;

  friend bool operator==(const NormedSpace&, const NormedSpace&) = default;

 private:
  NormedSpace(Kind kind, double p, std::size_t dim, std::size_t side)
      : kind_(kind), p_(p), dim_(dim), side_(side) {}

  Kind kind_;
  double p_;
  std::size_t dim_;
  std::size_t side_;
};

/// Largest absolute eigenvalue of a symmetric matrix.
double symmetric_spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& m);

struct StepFunctions {
  NormedSpace space = NormedSpace::linf(1);
  std::size_t steps = 0;   // n
  std::size_t states = 0;  // N
  Table table;             // (steps * states) x space.dim()
  bool centered = false;
  /// Set when centering left the all-zero family, which cannot be scaled.
  bool degenerate = false;
  double max_norm = 0.0;

  auto value(std::size_t i, std::size_t v) const {
    return table.row(static_cast<Eigen::Index>(i * states + v));
  }

  /// f_1, ..., f_n for n <= steps.
  StepFunctions prefix(std::size_t n) const;
  StepFunctions scaled(double factor) const;
};

/// Wraps a table, validating every element and recording the max norm.
StepFunctions make_step_functions(NormedSpace space, std::size_t steps, std::size_t states,
                                  Table table);

/// Largest ||f_i(v)|| over the family.
double family_max_norm(const StepFunctions& f);

/// Subtracts the mu-mean of each f_i and then divides the whole table by the
/// largest norm if that exceeds 1. An all-zero result is returned unscaled
/// with `degenerate` set.
StepFunctions center_and_normalize(const StepFunctions& f, const Eigen::VectorXd& mu);

/// Monte Carlo lower bound on the modulus of uniform smoothness rho_X(tau):
/// the largest (||x + tau y|| + ||x - tau y||)/2 - 1 over `trials` sampled
/// unit pairs. Only ever a lower bound.
double estimate_smoothness(const NormedSpace& space, double tau, std::size_t trials,
                           std::uint64_t seed);

/// Random families used by the experiments. `time_homogeneous` reuses the
/// same function for every step.
StepFunctions random_rademacher_matrices(std::size_t side, std::size_t steps, std::size_t states,
                                         std::uint64_t seed, bool time_homogeneous = false);
StepFunctions random_unit_vectors(const NormedSpace& space, std::size_t steps, std::size_t states,
                                  std::uint64_t seed, bool time_homogeneous = false);

/// Raw contents of a functions-format file: header "n N kind dim", an
/// optional "mu" line with N weights, then one line of dim decimals per (i, v)
/// in row-major order.
struct TableFile {
  std::size_t steps = 0;
  std::size_t states = 0;
  std::string kind;
  std::size_t dim = 0;
  std::optional<Eigen::VectorXd> mu;
  Table table;
};
TableFile read_table_file(std::istream& in);
std::string format_table_file(const TableFile& file);

StepFunctions read_step_functions(std::istream& in);
StepFunctions load_step_functions(const std::filesystem::path& path);
std::string format_step_functions(const StepFunctions& f);

}  // namespace chainbound
