#pragma once

// Witness processes T = { t(i, v) } obtained by pairing step functions with
// dual witnesses, the d1/d2 chaining metrics, greedy admissible sequences and
// gamma_alpha upper bounds.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "chainbound/banach.hpp"
#include "chainbound/gauss_mc.hpp"

namespace chainbound {

enum class WitnessKind {
  DualSample,   // random dual-unit functionals x*, t(i,v) = <x*, f_i(v)>
  MatrixPairs,  // unit vector pairs (x, y), t(i,v) = <x, f_i(v) y>
  LinfExact,    // the 2k+1 signed coordinate functionals and 0
  External,     // points supplied directly (e.g. from a file)
};

std::string to_string(WitnessKind kind);

struct WitnessProcess {
  std::size_t steps = 0;   // n
  std::size_t states = 0;  // N
  /// One point per row; column i*N + v holds t(i, v).
  Table points;
  WitnessKind origin = WitnessKind::External;
  /// Generating witnesses, row-aligned with `points` (the zero point has a
  /// zero row). Matrix pairs store x followed by y.
  Table witness_meta;
  /// Row of the zero point.
  std::size_t zero_index = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  auto point(std::size_t j) const { return points.row(static_cast<Eigen::Index>(j)); }
};

/// dual_sample / matrix_pairs: `count` sampled witnesses, their negations and
/// 0. linf_exact: 0 followed by (+e_j, -e_j) for each coordinate j; `count`
/// and `seed` are ignored.
WitnessProcess build_witness_process(const StepFunctions& f, WitnessKind kind, std::size_t count,
                                     std::uint64_t seed);

/// Wraps explicit points. The zero index is the first all-zero row, or 0 if
/// there is none.
WitnessProcess witness_from_points(std::size_t steps, std::size_t states, Table points);

/// sup_{t in T} sum_i t(i, Y_i).
double witness_supremum(const WitnessProcess& process, std::span<const std::size_t> trajectory);

/// True when the process contains 0 and is closed under negation (to `tol`).
bool is_symmetric_with_zero(const WitnessProcess& process, double tol = 1e-12);
/// Largest |sum_v mu_v t(i, v)| over points and steps.
double max_step_mean(const WitnessProcess& process, const Eigen::VectorXd& mu);

enum class MetricKind {
  D1,    // 40/(1-l) * max |s - t|
  D2,    // sqrt(16/(1-l) * sum_i E_mu (s - t)^2)
  LInf,  // max |s - t|
  L2Mu,  // sqrt(sum_i E_mu (s - t)^2), the L2(1 (x) mu) norm
};

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind kind);

/// Distance between points indexed by (i, v) in [n] x [N].
class ProcessMetric {
 public:
  /// Throws ValidationError when lambda = 1 for D1/D2.
  ProcessMetric(MetricKind kind, std::size_t states, Eigen::VectorXd mu, double lambda = 0.0);

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& s,
                    const Eigen::Ref<const Eigen::RowVectorXd>& t) const;

  MetricKind kind() const noexcept { return kind_; }

 private:
  MetricKind kind_;
  std::size_t states_;
  Eigen::VectorXd mu_;
  double scale_;
};

double metric(const Eigen::Ref<const Eigen::RowVectorXd>& s,
              const Eigen::Ref<const Eigen::RowVectorXd>& t, MetricKind kind, double lambda,
              const Eigen::VectorXd& mu);

/// Nested point-index sets T_0 ⊆ T_1 ⊆ ... with |T_0| = 1 and
/// |T_i| <= 2^{2^i}.
struct AdmissibleSequence {
  std::vector<std::vector<std::size_t>> levels;

  std::size_t depth() const noexcept { return levels.size(); }
};

/// Cardinality cap 2^{2^i}, saturating at SIZE_MAX.
std::size_t level_cap(std::size_t level);

/// Checks |T_0| = 1, the caps, nesting and index range.
bool is_admissible(const AdmissibleSequence& seq, std::size_t process_size);

/// T_0 = {zero point}; each further level extends the previous one by
/// farthest-point insertion until its cap or until T is exhausted. Ties go to
/// the lowest point index.
AdmissibleSequence greedy_admissible_sequence(const WitnessProcess& process,
                                              const ProcessMetric& metric, std::size_t depth = 5);

/// T_i = {0} for i <= linf_chain_cutoff(k), then T.
AdmissibleSequence explicit_linf_sequence(const WitnessProcess& process, std::size_t k);

struct GammaBound {
  /// sup_t sum_{i < depth} 2^{i/alpha} d(t, T_i)
  double value = 0.0;
  /// Largest 2^{(depth-1)/alpha} d(t, T_{depth-1}); zero once T is exhausted.
  double final_level_term = 0.0;
  bool exhausted = false;
};

GammaBound gamma_upper(const WitnessProcess& process, const AdmissibleSequence& seq, int alpha,
                       const ProcessMetric& metric);

/// E sup_{t in T} <g, t> with g(i, v) ~ N(0, mu_v), drawn exactly as in
/// estimate_L so that matched seeds share Gaussians.
McEstimate gaussian_sup_mc(const WitnessProcess& process, const Eigen::VectorXd& mu,
                           std::size_t trials, std::uint64_t seed);

/// Witness file: functions-format header "n N witness m", optional mu line,
/// then per (i, v) one line holding t_1(i, v) ... t_m(i, v).
struct WitnessFile {
  WitnessProcess process;
  std::optional<Eigen::VectorXd> mu;
};
WitnessFile read_witness_file(std::istream& in);
WitnessFile load_witness_file(const std::filesystem::path& path);
std::string format_witness_file(const WitnessProcess& process,
                                const std::optional<Eigen::VectorXd>& mu = std::nullopt);

nlohmann::json to_json(const AdmissibleSequence& seq);

}  // namespace chainbound
