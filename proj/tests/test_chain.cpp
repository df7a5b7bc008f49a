#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "chainbound/chain.hpp"
#include "chainbound/error.hpp"
#include "test_support.hpp"

using namespace chainbound;
using testing_support::to_oracle;

namespace {

Eigen::MatrixXd two_state(double p) {
  Eigen::MatrixXd a(2, 2);
  a << 1 - p, p, p, 1 - p;
  return a;
}

Eigen::MatrixXd rank_one(const Eigen::VectorXd& mu) {
  return Eigen::VectorXd::Ones(mu.size()) * mu.transpose();
}

void expect_kernel_invariants(const TransitionKernel& k, double tol = 1e-10) {
  const auto& a = k.rows();
  const auto& mu = k.mu();
  for (Eigen::Index v = 0; v < a.rows(); ++v) {
    EXPECT_NEAR(a.row(v).sum(), 1.0, 1e-12);
    for (Eigen::Index w = 0; w < a.cols(); ++w) {
      EXPECT_GE(a(v, w), 0.0);
      EXPECT_LE(a(v, w), 1.0);
      EXPECT_NEAR(mu(v) * a(v, w), mu(w) * a(w, v), tol);
    }
    EXPECT_GT(mu(v), 0.0);
  }
  EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
  EXPECT_LE((a.transpose() * mu - mu).cwiseAbs().maxCoeff(), tol);
  EXPECT_GE(k.lambda(), 0.0);
  EXPECT_LE(k.lambda(), 1.0);
}

}  // namespace

TEST(Chain, CompleteGraphHasUniformMu) {
  const auto k = build_chain(ChainSpec::complete(7));
  for (Eigen::Index v = 0; v < 7; ++v) EXPECT_NEAR(k.mu()(v), 1.0 / 7.0, 1e-14);
  EXPECT_NEAR(k.lambda(), 0.0, 1e-12);
  expect_kernel_invariants(k);
}

TEST(Chain, TwoStateCycle) {
  const auto k = build_chain(ChainSpec::cycle(2, 0.3));
  EXPECT_NEAR(k.rows()(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(k.rows()(0, 1), 0.3, 1e-15);
  EXPECT_NEAR(k.mu()(0), 0.5, 1e-14);
  EXPECT_NEAR(k.mu()(1), 0.5, 1e-14);
}

TEST(Chain, MetropolisHitsTarget) {
  const auto k = build_chain(ChainSpec::metropolis({0.2, 0.3, 0.5}));
  const auto mu = oracle::stationary(to_oracle(k.rows()));
  const double expected[] = {0.2, 0.3, 0.5};
  for (int v = 0; v < 3; ++v) {
    EXPECT_NEAR(k.mu()(v), expected[v], 1e-10);
    EXPECT_NEAR(mu[v], expected[v], 1e-10);
  }
  expect_kernel_invariants(k);
}

TEST(Chain, MetropolisOverCycleProposal) {
  const auto k = build_chain(ChainSpec::metropolis({1, 2, 3, 4, 5, 6}, ChainSpec::cycle(6)));
  for (int v = 0; v < 6; ++v) EXPECT_NEAR(k.mu()(v), (v + 1) / 21.0, 1e-10);
  expect_kernel_invariants(k);
}

TEST(Chain, StationaryExamples) {
  EXPECT_NEAR(stationary_distribution(two_state(0.3))(0), 0.5, 1e-12);

  Eigen::MatrixXd path(3, 3);
  path << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  const auto mu = stationary_distribution(path);
  EXPECT_NEAR(mu(0), 0.25, 1e-12);
  EXPECT_NEAR(mu(1), 0.5, 1e-12);
  EXPECT_NEAR(mu(2), 0.25, 1e-12);
  const auto ref = oracle::stationary(to_oracle(path));
  for (int v = 0; v < 3; ++v) EXPECT_NEAR(mu(v), ref[v], 1e-12);

  Eigen::VectorXd target(2);
  target << 0.2, 0.8;
  const auto mu2 = stationary_distribution(rank_one(target));
  EXPECT_NEAR(mu2(0), 0.2, 1e-12);
  EXPECT_NEAR(mu2(1), 0.8, 1e-12);
}

TEST(Chain, ReducibleChainRejected) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(stationary_distribution(a), ValidationError);
  EXPECT_THROW(TransitionKernel::from_matrix(a), ValidationError);
}

TEST(Chain, NonStochasticRejected) {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.6, 0.5, 0.5;
  EXPECT_THROW(TransitionKernel::from_matrix(a), ValidationError);
  a << 1.2, -0.2, 0.5, 0.5;
  EXPECT_THROW(TransitionKernel::from_matrix(a), ValidationError);
}

TEST(Chain, NonReversibleRejected) {
  // Biased walk around a 3-cycle: doubly stochastic but not reversible.
  Eigen::MatrixXd a(3, 3);
  a << 0, 0.8, 0.2, 0.2, 0, 0.8, 0.8, 0.2, 0;
  EXPECT_THROW(TransitionKernel::from_matrix(a), ValidationError);
}

TEST(Chain, LambdaExamples) {
  Eigen::VectorXd mu(3);
  mu << 0.2, 0.3, 0.5;
  EXPECT_NEAR(TransitionKernel::from_matrix(rank_one(mu)).lambda(), 0.0, 1e-12);
  for (double p : {0.1, 0.3, 0.5}) {
    const auto k = TransitionKernel::from_matrix(two_state(p));
    EXPECT_NEAR(k.lambda(), std::abs(1 - 2 * p), 1e-12);
    EXPECT_NEAR(k.lambda(), oracle::lambda(to_oracle(k.rows()), to_oracle(k.mu())), 1e-12);
  }
}

TEST(Chain, LambdaMatchesJacobiOracleAcrossFamilies) {
  const std::vector<ChainSpec> specs{
      ChainSpec::cycle(9),          ChainSpec::cycle(10, 0.5),
      ChainSpec::hypercube(16),     ChainSpec::complete(5),
      ChainSpec::lazy(ChainSpec::cycle(12), 0.3),
      ChainSpec::metropolis({1, 3, 2, 5, 4}, ChainSpec::cycle(5)),
  };
  for (const auto& s : specs) {
    const auto k = build_chain(s);
    expect_kernel_invariants(k);
    EXPECT_NEAR(k.lambda(), oracle::lambda(to_oracle(k.rows()), to_oracle(k.mu())), 1e-10)
        << s.describe();
  }
}

TEST(Chain, LazyShiftsSpectrum) {
  // Two-state chain with p = 0.9 has spectrum {1, -0.8}.
  const auto base = TransitionKernel::from_matrix(two_state(0.9));
  EXPECT_NEAR(base.lambda(), 0.8, 1e-12);
  for (double theta : {0.0, 0.25, 0.5, 0.9}) {
    Eigen::MatrixXd lazy = theta * Eigen::MatrixXd::Identity(2, 2) + (1 - theta) * two_state(0.9);
    const auto k = TransitionKernel::from_matrix(lazy);
    EXPECT_NEAR(k.lambda(), std::abs(theta + (1 - theta) * -0.8), 1e-10);
  }
  // Cycle spectrum cos(2 pi j / N) (times move prob plus hold) mapped through
  // x -> theta + (1 - theta) x.
  const std::size_t n = 12;
  const double p = 2.0 / 3.0;
  for (double theta : {0.1, 0.5, 0.8}) {
    double expected = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      const double x = 1 - p + p * std::cos(2 * M_PI * static_cast<double>(j) / n);
      expected = std::max(expected, std::abs(theta + (1 - theta) * x));
    }
    EXPECT_NEAR(build_chain(ChainSpec::lazy(ChainSpec::cycle(n), theta)).lambda(), expected, 1e-10);
  }
}

TEST(Chain, LazyBuildsConvexCombination) {
  const auto base = chain_matrix(ChainSpec::cycle(5));
  const auto lazy = chain_matrix(ChainSpec::lazy(ChainSpec::cycle(5), 0.4));
  EXPECT_LE((lazy - (0.4 * Eigen::MatrixXd::Identity(5, 5) + 0.6 * base)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(Chain, SpecValidation) {
  EXPECT_THROW(build_chain(ChainSpec::hypercube(12)), ValidationError);
  EXPECT_THROW(build_chain(ChainSpec::lazy(ChainSpec::cycle(4), 1.5)), ValidationError);
  EXPECT_THROW(build_chain(ChainSpec::metropolis({0.5, 0.0, 0.5})), ValidationError);
  EXPECT_THROW(build_chain(ChainSpec::complete(0)), ValidationError);
}

TEST(Chain, MixingTime) {
  Eigen::VectorXd mu(2);
  mu << 0.4, 0.6;
  EXPECT_EQ(mixing_time(TransitionKernel::from_matrix(rank_one(mu))), 1u);
  EXPECT_EQ(mixing_time(TransitionKernel::from_matrix(two_state(0.3))), 1u);
  EXPECT_EQ(mixing_time(TransitionKernel::from_matrix(two_state(0.1))), 4u);
  for (double p : {0.01, 0.05, 0.2, 0.45}) {
    const auto k = TransitionKernel::from_matrix(two_state(p));
    EXPECT_EQ(mixing_time(k), oracle::mixing_time(to_oracle(k.rows()), to_oracle(k.mu()), 0.25));
  }
}

TEST(Chain, MixingTimeMatchesBruteForcePowering) {
  for (const auto& s : {ChainSpec::cycle(16), ChainSpec::cycle(9, 0.5), ChainSpec::hypercube(8),
                        ChainSpec::lazy(ChainSpec::cycle(10), 0.7),
                        ChainSpec::metropolis({1, 2, 3, 4}, ChainSpec::cycle(4))}) {
    const auto k = build_chain(s);
    for (double thr : {0.25, 0.1, 0.01}) {
      EXPECT_EQ(mixing_time(k, thr), oracle::mixing_time(to_oracle(k.rows()), to_oracle(k.mu()), thr))
          << s.describe() << " threshold " << thr;
    }
  }
}

TEST(Chain, PeriodicChainNeverMixes) {
  // Deterministic swap: irreducible, reversible, lambda = 1.
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const auto k = TransitionKernel::from_matrix(a);
  EXPECT_NEAR(k.lambda(), 1.0, 1e-12);
  EXPECT_THROW(mixing_time(k, 0.25, 1 << 10), NumericalError);
}

TEST(Chain, TrajectoryReproducible) {
  const auto k = build_chain(ChainSpec::cycle(11));
  EXPECT_EQ(sample_trajectory(k, 200, 42), sample_trajectory(k, 200, 42));
  EXPECT_NE(sample_trajectory(k, 200, 42), sample_trajectory(k, 200, 43));
}

TEST(Chain, TrajectoryMovesAlongEdges) {
  const auto k = build_chain(ChainSpec::cycle(11));
  const auto path = sample_trajectory(k, 500, 9);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const std::size_t diff = (path[i] + 11 - path[i - 1]) % 11;
    EXPECT_TRUE(diff == 0 || diff == 1 || diff == 10);
  }
}

TEST(Chain, FirstStateIsStationary) {
  const auto k = build_chain(ChainSpec::metropolis({0.2, 0.3, 0.5}));
  const std::size_t trials = 100000;
  std::vector<double> counts(3, 0.0);
  for (std::size_t s = 0; s < trials; ++s) counts[sample_trajectory(k, 1, s)[0]] += 1;
  double chi2 = 0.0;
  for (int v = 0; v < 3; ++v) {
    const double e = trials * k.mu()(v);
    chi2 += (counts[v] - e) * (counts[v] - e) / e;
  }
  EXPECT_LT(chi2, 13.82);  // chi-square(2) at 0.999
}

TEST(Chain, LaterMarginalsStayStationary) {
  Eigen::MatrixXd a(2, 2);
  a << 0.9, 0.1, 0.3, 0.7;  // mu = (0.75, 0.25)
  const auto k = TransitionKernel::from_matrix(a);
  const std::size_t trials = 100000;
  double hits = 0;
  for (std::size_t s = 0; s < trials; ++s) hits += sample_trajectory(k, 10, s)[9] == 0;
  const double se = std::sqrt(0.75 * 0.25 / trials);
  EXPECT_NEAR(hits / trials, 0.75, 3 * se);
}

TEST(Chain, IdentityTrajectoryIsConstant) {
  // The identity is reducible and rejected as a kernel, so check the sampler
  // on a chain whose rows are deterministic.
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const auto k = TransitionKernel::from_matrix(a);
  const auto path = sample_trajectory(k, 6, 1);
  for (std::size_t i = 2; i < path.size(); ++i) EXPECT_EQ(path[i], path[i - 2]);
}

TEST(Chain, KernelFileRoundTrip) {
  const auto a = chain_matrix(ChainSpec::metropolis({0.1, 0.2, 0.3, 0.4}));
  std::istringstream in(format_kernel_matrix(a));
  const auto back = read_kernel_matrix(in);
  EXPECT_EQ(back, a);
}

TEST(Chain, KernelFileValidation) {
  std::istringstream bad_count("3\n0.5 0.5\n");
  EXPECT_THROW(read_kernel_matrix(bad_count), ValidationError);
  std::istringstream bad_number("2\n0.5 abc\n0.5 0.5\n");
  EXPECT_THROW(read_kernel_matrix(bad_number), ValidationError);
  std::istringstream comments("# two states\n2\n0.5 0.5\n\n0.5 0.5\n");
  EXPECT_EQ(read_kernel_matrix(comments).rows(), 2);
}

TEST(Chain, FileSpecLoadsKernel) {
  testing_support::TempDir dir;
  const auto p = dir.write("k.txt", format_kernel_matrix(two_state(0.2)));
  EXPECT_NEAR(build_chain(ChainSpec::file(p)).lambda(), 0.6, 1e-12);
  EXPECT_THROW(build_chain(ChainSpec::file(dir.path() / "missing.txt")), ValidationError);
}

TEST(Chain, LargeHypercubeInvariants) {
  for (const auto& s : {ChainSpec::cycle(256), ChainSpec::hypercube(256), ChainSpec::complete(256),
                        ChainSpec::lazy(ChainSpec::cycle(256), 0.5)}) {
    expect_kernel_invariants(build_chain(s));
  }
}
