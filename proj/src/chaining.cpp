#include "chainbound/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "chainbound/bounds.hpp"
#include "chainbound/error.hpp"
#include "chainbound/summation.hpp"

namespace chainbound {

std::string to_string(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::DualSample:
      return "dual_sample";
    case WitnessKind::MatrixPairs:
      return "matrix_pairs";
    case WitnessKind::LinfExact:
      return "linf_exact";
    case WitnessKind::External:
      return "external";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Witness processes

WitnessProcess build_witness_process(const StepFunctions& f, WitnessKind kind, std::size_t count,
                                     std::uint64_t seed) {
  WitnessProcess T;
  T.steps = f.steps;
  T.states = f.states;
  T.origin = kind;
  T.zero_index = 0;
  const auto width = static_cast<Eigen::Index>(f.steps * f.states);
  Rng rng(seed);

  switch (kind) {
    case WitnessKind::DualSample: {
      require(count >= 1, "dual_sample needs count >= 1");
      const auto dim = static_cast<Eigen::Index>(f.space.dim());
      const auto m = static_cast<Eigen::Index>(2 * count + 1);
      T.points = Table::Zero(m, width);
      T.witness_meta = Table::Zero(m, dim);
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(count); ++j) {
        const Eigen::VectorXd w = f.space.random_dual_unit(rng);
        const Eigen::RowVectorXd t = (f.table * w).transpose();
        T.points.row(2 * j + 1) = t;
        T.points.row(2 * j + 2) = -t;
        T.witness_meta.row(2 * j + 1) = w.transpose();
        T.witness_meta.row(2 * j + 2) = -w.transpose();
      }
      break;
    }
    case WitnessKind::MatrixPairs: {
      require(f.space.kind() == NormedSpace::Kind::SymMatrix,
              "matrix_pairs witnesses need a matrix space");
      require(count >= 1, "matrix_pairs needs count >= 1");
      const auto d = static_cast<Eigen::Index>(f.space.side());
      const NormedSpace euclid = NormedSpace::lp(2.0, f.space.side());
      const auto m = static_cast<Eigen::Index>(2 * count + 1);
      T.points = Table::Zero(m, width);
      T.witness_meta = Table::Zero(m, 2 * d);
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(count); ++j) {
        const Eigen::VectorXd x = euclid.random_unit(rng);
        const Eigen::VectorXd y = euclid.random_unit(rng);
        // <x, F y> = <vec(x y^T), vec(F)> for row-major flattening.
        Eigen::VectorXd outer(d * d);
        for (Eigen::Index a = 0; a < d; ++a) {
          for (Eigen::Index b = 0; b < d; ++b) outer(a * d + b) = x(a) * y(b);
        }
        const Eigen::RowVectorXd t = (f.table * outer).transpose();
        T.points.row(2 * j + 1) = t;
        T.points.row(2 * j + 2) = -t;
        T.witness_meta.row(2 * j + 1) << x.transpose(), y.transpose();
        T.witness_meta.row(2 * j + 2) << -x.transpose(), y.transpose();
      }
      break;
    }
    case WitnessKind::LinfExact: {
      require(f.space.kind() == NormedSpace::Kind::Linf,
              "linf_exact witnesses need an l_inf space");
      const auto k = static_cast<Eigen::Index>(f.space.dim());
      T.points = Table::Zero(2 * k + 1, width);
      T.witness_meta = Table::Zero(2 * k + 1, k);
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::RowVectorXd t = f.table.col(j).transpose();
        T.points.row(2 * j + 1) = t;
        T.points.row(2 * j + 2) = -t;
        T.witness_meta(2 * j + 1, j) = 1.0;
        T.witness_meta(2 * j + 2, j) = -1.0;
      }
      break;
    }
    case WitnessKind::External:
      throw ValidationError("external witness processes are built with witness_from_points");
  }
  return T;
}

WitnessProcess witness_from_points(std::size_t steps, std::size_t states, Table points) {
  require(steps >= 1 && states >= 1, "witness process needs n >= 1 and N >= 1");
  require(points.rows() >= 1, "witness process must be non-empty");
  require(static_cast<std::size_t>(points.cols()) == steps * states,
          "witness points must have n*N coordinates");
  require(points.allFinite(), "witness points must be finite");
  WitnessProcess T;
  T.steps = steps;
  T.states = states;
  T.origin = WitnessKind::External;
  T.points = std::move(points);
  T.zero_index = 0;
  for (Eigen::Index j = 0; j < T.points.rows(); ++j) {
    if ((T.points.row(j).array() == 0.0).all()) {
      T.zero_index = static_cast<std::size_t>(j);
      break;
    }
  }
  return T;
}

double witness_supremum(const WitnessProcess& process, std::span<const std::size_t> trajectory) {
  require(trajectory.size() == process.steps, "trajectory length differs from n");
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < process.points.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < process.steps; ++i) {
      acc += process.points(j, static_cast<Eigen::Index>(i * process.states + trajectory[i]));
    }
    best = std::max(best, acc);
  }
  return best;
}

bool is_symmetric_with_zero(const WitnessProcess& process, double tol) {
  const auto& P = process.points;
  bool has_zero = false;
  for (Eigen::Index j = 0; j < P.rows() && !has_zero; ++j) {
    has_zero = P.row(j).cwiseAbs().maxCoeff() <= tol;
  }
  if (!has_zero) return false;
  for (Eigen::Index j = 0; j < P.rows(); ++j) {
    bool found = false;
    for (Eigen::Index l = 0; l < P.rows() && !found; ++l) {
      found = (P.row(j) + P.row(l)).cwiseAbs().maxCoeff() <= tol;
    }
    if (!found) return false;
  }
  return true;
}

double max_step_mean(const WitnessProcess& process, const Eigen::VectorXd& mu) {
  require(static_cast<std::size_t>(mu.size()) == process.states, "mu does not match N");
  double worst = 0.0;
  const auto N = static_cast<Eigen::Index>(process.states);
  for (Eigen::Index j = 0; j < process.points.rows(); ++j) {
    for (std::size_t i = 0; i < process.steps; ++i) {
      const double mean =
          process.points.row(j).segment(static_cast<Eigen::Index>(i) * N, N).dot(mu.transpose());
      worst = std::max(worst, std::abs(mean));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Metrics

MetricKind parse_metric(const std::string& name) {
  if (name == "d1") return MetricKind::D1;
  if (name == "d2") return MetricKind::D2;
  if (name == "linf") return MetricKind::LInf;
  if (name == "l2mu") return MetricKind::L2Mu;
  throw ValidationError("unknown metric '" + name + "' (expected d1, d2, linf, l2mu)");
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::D1:
      return "d1";
    case MetricKind::D2:
      return "d2";
    case MetricKind::LInf:
      return "linf";
    case MetricKind::L2Mu:
      return "l2mu";
  }
  return "?";
}

ProcessMetric::ProcessMetric(MetricKind kind, std::size_t states, Eigen::VectorXd mu,
                             double lambda)
    : kind_(kind), states_(states), mu_(std::move(mu)), scale_(1.0) {
  require(states >= 1, "metric needs N >= 1");
  if (kind == MetricKind::L2Mu || kind == MetricKind::D2) {
    require(static_cast<std::size_t>(mu_.size()) == states, "metric: mu does not match N");
  }
  if (kind == MetricKind::D1 || kind == MetricKind::D2) {
    require(std::isfinite(lambda) && lambda >= 0.0 && lambda < 1.0,
            "d1/d2 metrics need lambda in [0,1)");
    scale_ = kind == MetricKind::D1 ? 40.0 / (1.0 - lambda) : std::sqrt(16.0 / (1.0 - lambda));
  }
}

double ProcessMetric::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& s,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& t) const {
  require(s.size() == t.size(), "metric: points differ in shape");
  if (kind_ == MetricKind::LInf || kind_ == MetricKind::D1) {
    return scale_ * (s - t).cwiseAbs().maxCoeff();
  }
  require(static_cast<std::size_t>(s.size()) % states_ == 0, "metric: length is not a multiple of N");
  double acc = 0.0;
  std::size_t v = 0;
  for (Eigen::Index c = 0; c < s.size(); ++c) {
    const double diff = s(c) - t(c);
    acc += mu_(static_cast<Eigen::Index>(v)) * diff * diff;
    if (++v == states_) v = 0;
  }
  return scale_ * std::sqrt(acc);
}

double metric(const Eigen::Ref<const Eigen::RowVectorXd>& s,
              const Eigen::Ref<const Eigen::RowVectorXd>& t, MetricKind kind, double lambda,
              const Eigen::VectorXd& mu) {
  return ProcessMetric(kind, static_cast<std::size_t>(mu.size()), mu, lambda)(s, t);
}

// ---------------------------------------------------------------------------
// Admissible sequences

std::size_t level_cap(std::size_t level) {
  if (level == 0) return 1;
  if (level >= 6) return std::numeric_limits<std::size_t>::max();
  const std::size_t bits = std::size_t{1} << level;
  return std::size_t{1} << bits;
}

bool is_admissible(const AdmissibleSequence& seq, std::size_t process_size) {
  if (seq.levels.empty() || seq.levels[0].size() != 1) return false;
  std::vector<char> previous(process_size, 0);
  for (std::size_t i = 0; i < seq.levels.size(); ++i) {
    const auto& level = seq.levels[i];
    if (level.size() > level_cap(i)) return false;
    std::vector<char> current(process_size, 0);
    for (std::size_t idx : level) {
      if (idx >= process_size || current[idx]) return false;
      current[idx] = 1;
    }
    for (std::size_t idx = 0; idx < process_size; ++idx) {
      if (previous[idx] && !current[idx]) return false;
    }
    previous = std::move(current);
  }
  return true;
}

AdmissibleSequence greedy_admissible_sequence(const WitnessProcess& process,
                                              const ProcessMetric& metric, std::size_t depth) {
  require(process.size() >= 1, "greedy sequence needs a non-empty process");
  require(depth >= 1, "greedy sequence needs depth >= 1");
  const std::size_t m = process.size();
  AdmissibleSequence seq;
  std::vector<std::size_t> chosen{process.zero_index};
  std::vector<char> selected(m, 0);
  selected[process.zero_index] = 1;
  std::vector<double> nearest(m);
  for (std::size_t j = 0; j < m; ++j) nearest[j] = metric(process.point(j), process.point(process.zero_index));
  seq.levels.push_back(chosen);

  for (std::size_t level = 1; level < depth; ++level) {
    const std::size_t cap = std::min(level_cap(level), m);
    while (chosen.size() < cap) {
      std::size_t best = m;
      for (std::size_t j = 0; j < m; ++j) {
        if (selected[j]) continue;
        if (best == m || nearest[j] > nearest[best]) best = j;
      }
      selected[best] = 1;
      chosen.push_back(best);
      for (std::size_t j = 0; j < m; ++j) {
        if (!selected[j]) nearest[j] = std::min(nearest[j], metric(process.point(j), process.point(best)));
      }
    }
    seq.levels.push_back(chosen);
  }
  return seq;
}

AdmissibleSequence explicit_linf_sequence(const WitnessProcess& process, std::size_t k) {
  const std::size_t cutoff = linf_chain_cutoff(k);
  require(process.size() <= level_cap(cutoff + 1),
          "process is too large for the explicit l_inf sequence");
  AdmissibleSequence seq;
  for (std::size_t i = 0; i <= cutoff; ++i) seq.levels.push_back({process.zero_index});
  std::vector<std::size_t> all{process.zero_index};
  for (std::size_t j = 0; j < process.size(); ++j) {
    if (j != process.zero_index) all.push_back(j);
  }
  seq.levels.push_back(std::move(all));
  return seq;
}

GammaBound gamma_upper(const WitnessProcess& process, const AdmissibleSequence& seq, int alpha,
                       const ProcessMetric& metric) {
  require(alpha == 1 || alpha == 2, "gamma_upper: alpha must be 1 or 2");
  require(is_admissible(seq, process.size()), "gamma_upper: sequence is not admissible");
  const std::size_t m = process.size();
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::vector<double> total(m, 0.0);
  std::vector<char> added(m, 0);
  GammaBound out;
  for (std::size_t level = 0; level < seq.levels.size(); ++level) {
    for (std::size_t q : seq.levels[level]) {
      if (added[q]) continue;
      added[q] = 1;
      for (std::size_t j = 0; j < m; ++j) {
        nearest[j] = std::min(nearest[j], metric(process.point(j), process.point(q)));
      }
    }
    const double weight = std::exp2(static_cast<double>(level) / alpha);
    double worst_term = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      total[j] += weight * nearest[j];
      worst_term = std::max(worst_term, weight * nearest[j]);
    }
    out.final_level_term = worst_term;
  }
  out.value = *std::max_element(total.begin(), total.end());
  out.exhausted = out.final_level_term == 0.0;
  return out;
}

McEstimate gaussian_sup_mc(const WitnessProcess& process, const Eigen::VectorXd& mu,
                           std::size_t trials, std::uint64_t seed) {
  require(trials >= 2, "gaussian_sup_mc needs at least two trials");
  require(static_cast<std::size_t>(mu.size()) == process.states, "gaussian_sup_mc: mu does not match N");
  std::vector<double> values(trials);
  Eigen::VectorXd g;
  Eigen::VectorXd inner;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(substream_seed(seed, t));
    draw_weighted_gaussians(mu, process.steps, rng, g);
    inner.noalias() = process.points * g;
    values[t] = inner.maxCoeff();
  }
  const auto m = sample_moments(values);
  return {m.mean, m.std_error, trials, seed};
}

// ---------------------------------------------------------------------------
// Files

WitnessFile read_witness_file(std::istream& in) {
  TableFile file = read_table_file(in);
  require(file.kind == "witness", "witness file: header kind must be 'witness', got '" +
                                      file.kind + "'");
  WitnessFile out;
  out.process = witness_from_points(file.steps, file.states, file.table.transpose());
  if (file.mu) {
    require(static_cast<std::size_t>(file.mu->size()) == file.states, "witness file: bad mu");
    out.mu = std::move(file.mu);
  }
  return out;
}

WitnessFile load_witness_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open witness file " + path.string());
  return read_witness_file(in);
}

std::string format_witness_file(const WitnessProcess& process,
                                const std::optional<Eigen::VectorXd>& mu) {
  TableFile file;
  file.steps = process.steps;
  file.states = process.states;
  file.kind = "witness";
  file.dim = process.size();
  file.mu = mu;
  file.table = process.points.transpose();
  return format_table_file(file);
}

nlohmann::json to_json(const AdmissibleSequence& seq) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& level : seq.levels) levels.push_back(level);
  return {{"depth", seq.depth()}, {"levels", std::move(levels)}};
}

}  // namespace chainbound
