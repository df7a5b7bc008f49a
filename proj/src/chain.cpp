#include "chainbound/chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "chainbound/error.hpp"
#include "chainbound/text_io.hpp"

namespace chainbound {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kBalanceTol = 1e-10;
constexpr std::size_t kDenseLimit = 2048;

void validate_stochastic(const Eigen::MatrixXd& a) {
  require(a.rows() > 0 && a.rows() == a.cols(), "transition matrix must be square and non-empty");
  for (Eigen::Index v = 0; v < a.rows(); ++v) {
    double sum = 0.0;
    for (Eigen::Index w = 0; w < a.cols(); ++w) {
      const double x = a(v, w);
      require(std::isfinite(x) && x >= 0.0 && x <= 1.0,
              "transition entry (" + std::to_string(v) + "," + std::to_string(w) +
                  ") outside [0,1]");
      sum += x;
    }
    require(std::abs(sum - 1.0) <= kRowSumTol,
            "row " + std::to_string(v) + " sums to " + io::format_double(sum) + ", not 1");
  }
}

// Strong connectivity of the support graph.
bool irreducible(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (Eigen::Index w = 0; w < n; ++w) {
        const double x = transpose ? a(w, v) : a(v, w);
        if (x > 0.0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

}  // namespace

// ---------------------------------------------------------------------------
// ChainSpec

ChainSpec ChainSpec::cycle(std::size_t n, std::optional<double> move_prob) {
  ChainSpec s;
  s.kind = Kind::Cycle;
  s.size = n;
  s.move_prob = move_prob;
  return s;
}

ChainSpec ChainSpec::hypercube(std::size_t n, std::optional<double> move_prob) {
  ChainSpec s;
  s.kind = Kind::Hypercube;
  s.size = n;
  s.move_prob = move_prob;
  return s;
}

ChainSpec ChainSpec::complete(std::size_t n) {
  ChainSpec s;
  s.kind = Kind::Complete;
  s.size = n;
  return s;
}

ChainSpec ChainSpec::lazy(ChainSpec base, double hold_prob) {
  ChainSpec s;
  s.kind = Kind::Lazy;
  s.size = base.size;
  s.hold_prob = hold_prob;
  s.base = std::make_shared<const ChainSpec>(std::move(base));
  return s;
}

ChainSpec ChainSpec::metropolis(std::vector<double> target, std::optional<ChainSpec> proposal) {
  ChainSpec s;
  s.kind = Kind::Metropolis;
  s.size = target.size();
  s.target = std::move(target);
  if (proposal) s.base = std::make_shared<const ChainSpec>(std::move(*proposal));
  return s;
}

ChainSpec ChainSpec::file(std::filesystem::path path) {
  ChainSpec s;
  s.kind = Kind::File;
  s.path = std::move(path);
  return s;
}

std::string ChainSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Cycle:
      out << "cycle(N=" << size << ",move_prob=" << io::format_double(move_prob.value_or(2.0 / 3.0))
          << ")";
      break;
    case Kind::Hypercube:
      out << "hypercube(N=" << size << ",move_prob=" << io::format_double(move_prob.value_or(0.5))
          << ")";
      break;
    case Kind::Complete:
      out << "complete(N=" << size << ")";
      break;
    case Kind::Lazy:
      out << "lazy(hold_prob=" << io::format_double(hold_prob) << ","
          << (base ? base->describe() : std::string("?")) << ")";
      break;
    case Kind::Metropolis:
      out << "metropolis(N=" << target.size() << ","
          << (base ? base->describe() : "complete(N=" + std::to_string(target.size()) + ")") << ")";
      break;
    case Kind::File:
      out << "file(" << path.string() << ")";
      break;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Builders

Eigen::MatrixXd chain_matrix(const ChainSpec& spec) {
  using Kind = ChainSpec::Kind;
  switch (spec.kind) {
    case Kind::Cycle: {
      require(spec.size >= 1, "cycle needs at least one state");
      const double p = spec.move_prob.value_or(2.0 / 3.0);
      require(p >= 0.0 && p <= 1.0, "cycle move_prob must lie in [0,1]");
      const auto n = static_cast<Eigen::Index>(spec.size);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index v = 0; v < n; ++v) {
        a(v, v) += 1.0 - p;
        a(v, (v + 1) % n) += p / 2.0;
        a(v, (v + n - 1) % n) += p / 2.0;
      }
      return a;
    }
    case Kind::Hypercube: {
      require(spec.size >= 1 && std::has_single_bit(spec.size),
              "hypercube size must be a power of two");
      const double p = spec.move_prob.value_or(0.5);
      require(p >= 0.0 && p <= 1.0, "hypercube move_prob must lie in [0,1]");
      const auto n = static_cast<Eigen::Index>(spec.size);
      const int dim = std::countr_zero(spec.size);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index v = 0; v < n; ++v) {
        a(v, v) = dim == 0 ? 1.0 : 1.0 - p;
        for (int bit = 0; bit < dim; ++bit) {
          a(v, v ^ (Eigen::Index{1} << bit)) = p / dim;
        }
      }
      return a;
    }
    case Kind::Complete: {
      require(spec.size >= 1, "complete chain needs at least one state");
      const auto n = static_cast<Eigen::Index>(spec.size);
      return Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    }
    case Kind::Lazy: {
      require(spec.base != nullptr, "lazy chain needs a base chain");
      require(spec.hold_prob >= 0.0 && spec.hold_prob <= 1.0, "lazy hold_prob must lie in [0,1]");
      Eigen::MatrixXd base = chain_matrix(*spec.base);
      const double theta = spec.hold_prob;
      Eigen::MatrixXd a = (1.0 - theta) * base;
      a.diagonal().array() += theta;
      return a;
    }
    case Kind::Metropolis: {
      const std::size_t n = spec.target.size();
      require(n >= 1, "metropolis target must be non-empty");
      Eigen::VectorXd pi(static_cast<Eigen::Index>(n));
      for (std::size_t v = 0; v < n; ++v) {
        require(std::isfinite(spec.target[v]) && spec.target[v] > 0.0,
                "metropolis target must be strictly positive");
        pi(static_cast<Eigen::Index>(v)) = spec.target[v];
      }
      pi /= pi.sum();
      const Eigen::MatrixXd proposal =
          spec.base ? chain_matrix(*spec.base) : chain_matrix(ChainSpec::complete(n));
      require(static_cast<std::size_t>(proposal.rows()) == n,
              "metropolis proposal size differs from target size");
      validate_stochastic(proposal);
      const auto nn = static_cast<Eigen::Index>(n);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nn, nn);
      for (Eigen::Index v = 0; v < nn; ++v) {
        double off = 0.0;
        for (Eigen::Index w = 0; w < nn; ++w) {
          if (w == v || proposal(v, w) <= 0.0) continue;
          const double ratio = pi(w) * proposal(w, v) / (pi(v) * proposal(v, w));
          a(v, w) = proposal(v, w) * std::min(1.0, ratio);
          off += a(v, w);
        }
        a(v, v) = std::max(0.0, 1.0 - off);
      }
      return a;
    }
    case Kind::File:
      return load_kernel_matrix(spec.path);
  }
  throw ValidationError("unknown chain kind");
}

TransitionKernel build_chain(const ChainSpec& spec) {
  return TransitionKernel::from_matrix(chain_matrix(spec));
}

// ---------------------------------------------------------------------------
// TransitionKernel

TransitionKernel TransitionKernel::from_matrix(Eigen::MatrixXd rows) {
  validate_stochastic(rows);
  TransitionKernel k;
  k.mu_ = stationary_distribution(rows);
  require((k.mu_.array() > 0.0).all(), "stationary distribution is not strictly positive");
  const auto n = rows.rows();
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index w = v + 1; w < n; ++w) {
      require(std::abs(k.mu_(v) * rows(v, w) - k.mu_(w) * rows(w, v)) <= kBalanceTol,
              "chain is not reversible: detailed balance fails at (" + std::to_string(v) + "," +
                  std::to_string(w) + ")");
    }
  }
  k.lambda_ = spectral_lambda(rows, k.mu_);
  k.rows_ = std::move(rows);

  k.row_start_.reserve(static_cast<std::size_t>(n) + 1);
  for (Eigen::Index v = 0; v < n; ++v) {
    k.row_start_.push_back(k.targets_.size());
    double acc = 0.0;
    for (Eigen::Index w = 0; w < n; ++w) {
      if (k.rows_(v, w) > 0.0) {
        acc += k.rows_(v, w);
        k.targets_.push_back(static_cast<std::size_t>(w));
        k.cumulative_.push_back(acc);
      }
    }
  }
  k.row_start_.push_back(k.targets_.size());
  double acc = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    acc += k.mu_(v);
    k.mu_cumulative_.push_back(acc);
  }
  return k;
}

TransitionKernel TransitionKernel::with_mixing_time(double threshold) const {
  TransitionKernel copy = *this;
  copy.tau_ = mixing_time(*this, threshold);
  return copy;
}

std::size_t TransitionKernel::step(std::size_t state, Rng& rng) const {
  const std::size_t lo = row_start_[state];
  const std::size_t hi = row_start_[state + 1];
  const double u = uniform01(rng) * cumulative_[hi - 1];
  const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(lo);
  const auto last = cumulative_.begin() + static_cast<std::ptrdiff_t>(hi);
  auto it = std::upper_bound(first, last, u);
  if (it == last) --it;
  return targets_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::size_t TransitionKernel::draw_stationary(Rng& rng) const {
  const double u = uniform01(rng) * mu_cumulative_.back();
  auto it = std::upper_bound(mu_cumulative_.begin(), mu_cumulative_.end(), u);
  if (it == mu_cumulative_.end()) --it;
  return static_cast<std::size_t>(it - mu_cumulative_.begin());
}

// ---------------------------------------------------------------------------
// Spectral quantities

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& rows, double tol,
                                        std::size_t max_iterations) {
  validate_stochastic(rows);
  require(tol > 0.0, "stationary_distribution tolerance must be positive");
  require(irreducible(rows), "chain is reducible: no unique positive stationary distribution");
  const auto n = rows.rows();

  // Start from the direct solve of mu^T (A - I) = 0, sum(mu) = 1 when that is
  // affordable, else from uniform; then power-iterate the lazy chain
  // (I + A)/2, which shares mu and is aperiodic.
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (static_cast<std::size_t>(n) <= kDenseLimit) {
    Eigen::MatrixXd system = rows.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd direct = system.fullPivLu().solve(rhs);
    if (direct.allFinite()) {
      direct = direct.cwiseMax(0.0);
      if (direct.sum() > 0.0) mu = direct / direct.sum();
    }
  }
  const Eigen::MatrixXd at = rows.transpose();
  for (std::size_t it = 0; it <= max_iterations; ++it) {
    const Eigen::VectorXd next = at * mu;
    if ((next - mu).lpNorm<1>() <= tol) return mu;
    mu = 0.5 * (mu + next);
    mu /= mu.sum();
  }
  throw NumericalError("stationary distribution did not converge to tolerance " +
                       io::format_double(tol) + " within " + std::to_string(max_iterations) +
                       " iterations");
}

double spectral_lambda(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mu) {
  const auto n = rows.rows();
  require(n == rows.cols() && mu.size() == n, "spectral_lambda: dimension mismatch");
  require((mu.array() > 0.0).all(), "spectral_lambda: mu must be strictly positive");
  const Eigen::ArrayXd root = mu.array().sqrt();
  Eigen::MatrixXd s = (root.matrix().asDiagonal() * rows) * root.inverse().matrix().asDiagonal();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  require(asym <= kBalanceTol, "chain is not reversible: D^{1/2} A D^{-1/2} is asymmetric by " +
                                   io::format_double(asym));
  // D^{1/2} (A - 1 mu^T) D^{-1/2} = S - sqrt(mu) sqrt(mu)^T.
  s = 0.5 * (s + s.transpose());
  s.noalias() -= root.matrix() * root.matrix().transpose();

  double lambda = 0.0;
  if (static_cast<std::size_t>(n) <= kDenseLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigen decomposition failed");
    lambda = eig.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    // Power iteration on S^2 converges to the squared spectral radius.
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
    x -= root.matrix() * root.matrix().dot(x);
    x.normalize();
    double previous = -1.0;
    for (int it = 0; it < 100000; ++it) {
      Eigen::VectorXd y = s * (s * x);
      const double norm = y.norm();
      if (norm == 0.0) return 0.0;
      lambda = std::sqrt(norm);
      x = y / norm;
      if (std::abs(lambda - previous) <= 1e-13) break;
      previous = lambda;
    }
  }
  return std::clamp(lambda, 0.0, 1.0);
}

double worst_tv_distance(const Eigen::MatrixXd& power, const Eigen::VectorXd& mu) {
  double worst = 0.0;
  for (Eigen::Index v = 0; v < power.rows(); ++v) {
    worst = std::max(worst, 0.5 * (power.row(v).transpose() - mu).lpNorm<1>());
  }
  return worst;
}

std::size_t mixing_time(const TransitionKernel& kernel, double threshold, std::size_t max_steps) {
  require(threshold > 0.0 && threshold < 1.0, "mixing threshold must lie in (0,1)");
  require(max_steps >= 1, "max_steps must be positive");
  const auto& mu = kernel.mu();
  // d(t) is nonincreasing in t, so double until below threshold and then
  // binary-lift from the last failing power.
  std::vector<Eigen::MatrixXd> powers{kernel.rows()};
  if (worst_tv_distance(powers[0], mu) <= threshold) return 1;
  std::size_t span = 1;
  while (true) {
    if (span > max_steps / 2) {
      throw NumericalError("mixing time exceeds " + std::to_string(max_steps) + " steps");
    }
    powers.push_back(powers.back() * powers.back());
    span *= 2;
    if (worst_tv_distance(powers.back(), mu) <= threshold) break;
  }
  // powers[j] = A^{2^j}; d(2^{J-1}) > threshold >= d(2^J).
  const std::size_t top = powers.size() - 1;
  Eigen::MatrixXd current = powers[top - 1];
  std::size_t t = span / 2;
  for (std::size_t j = top - 1; j-- > 0;) {
    Eigen::MatrixXd candidate = current * powers[j];
    if (worst_tv_distance(candidate, mu) > threshold) {
      current = std::move(candidate);
      t += std::size_t{1} << j;
    }
  }
  return t + 1;
}

// ---------------------------------------------------------------------------
// Sampling

void sample_trajectory(const TransitionKernel& kernel, Rng& rng, std::span<std::size_t> out) {
  if (out.empty()) return;
  out[0] = kernel.draw_stationary(rng);
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = kernel.step(out[i - 1], rng);
}

std::vector<std::size_t> sample_trajectory(const TransitionKernel& kernel, std::size_t n,
                                           std::uint64_t seed) {
  require(n >= 1, "trajectory length must be at least 1");
  std::vector<std::size_t> out(n);
  Rng rng(seed);
  sample_trajectory(kernel, rng, out);
  return out;
}

// ---------------------------------------------------------------------------
// Kernel files

Eigen::MatrixXd read_kernel_matrix(std::istream& in) {
  std::string line;
  require(io::next_content_line(in, line), "kernel file: missing state count");
  const auto header = io::split_ws(line);
  require(header.size() == 1, "kernel file: first line must hold N only");
  const std::size_t n = io::parse_size(header[0]);
  require(n >= 1, "kernel file: N must be positive");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    require(io::next_content_line(in, line),
            "kernel file: expected " + std::to_string(n) + " rows, got " + std::to_string(v));
    const auto tokens = io::split_ws(line);
    require(tokens.size() == n, "kernel file: row " + std::to_string(v) + " has " +
                                    std::to_string(tokens.size()) + " entries, expected " +
                                    std::to_string(n));
    for (std::size_t w = 0; w < n; ++w) {
      a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)) = io::parse_double(tokens[w]);
    }
  }
  require(!io::next_content_line(in, line), "kernel file: trailing content after row " +
                                                std::to_string(n));
  validate_stochastic(a);
  return a;
}

Eigen::MatrixXd load_kernel_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open kernel file " + path.string());
  return read_kernel_matrix(in);
}

std::string format_kernel_matrix(const Eigen::MatrixXd& rows) {
  std::string out = std::to_string(rows.rows()) + "\n";
  for (Eigen::Index v = 0; v < rows.rows(); ++v) {
    for (Eigen::Index w = 0; w < rows.cols(); ++w) {
      if (w) out += ' ';
      out += io::format_double(rows(v, w));
    }
    out += '\n';
  }
  return out;
}

}  // namespace chainbound
