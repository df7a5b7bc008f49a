#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "chainbound/banach.hpp"
#include "chainbound/error.hpp"
#include "test_support.hpp"

using namespace chainbound;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::vector<NormedSpace> sample_spaces() {
  return {NormedSpace::lp(1, 5),   NormedSpace::lp(1.5, 4), NormedSpace::lp(2, 6),
          NormedSpace::lp(3, 3),   NormedSpace::linf(7),    NormedSpace::sym_matrix(2),
          NormedSpace::sym_matrix(4)};
}

double oracle_matrix_norm(const Eigen::VectorXd& x, std::size_t d) {
  oracle::Matrix m(d, oracle::Vector(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) m[r][c] = x(static_cast<Eigen::Index>(r * d + c));
  }
  return oracle::spectral_norm_symmetric(m);
}

}  // namespace

TEST(Banach, NormExamples) {
  EXPECT_EQ(NormedSpace::linf(3).norm(vec({1, -2, 3})), 3.0);
  EXPECT_NEAR(NormedSpace::sym_matrix(2).norm(vec({2, 0, 0, -5})), 5.0, 1e-14);
  EXPECT_NEAR(NormedSpace::sym_matrix(2).norm(vec({0, 1, 1, 0})), 1.0, 1e-14);
  EXPECT_NEAR(NormedSpace::lp(2, 2).norm(vec({3, 4})), 5.0, 1e-14);
  EXPECT_NEAR(NormedSpace::lp(1, 3).norm(vec({1, -2, 3})), 6.0, 1e-14);
  EXPECT_EQ(NormedSpace::lp(std::numeric_limits<double>::infinity(), 3).kind(),
            NormedSpace::Kind::Linf);
}

TEST(Banach, NormErrors) {
  EXPECT_THROW(NormedSpace::linf(3).norm(vec({1, 2})), ValidationError);
  EXPECT_THROW(NormedSpace::sym_matrix(2).norm(vec({0, 1, 2, 0})), ValidationError);
  EXPECT_THROW(NormedSpace::lp(0.5, 2), ValidationError);
  EXPECT_THROW(NormedSpace::parse("sym", 5), ValidationError);
}

TEST(Banach, ParseTokens) {
  EXPECT_EQ(NormedSpace::parse("l2", 3), NormedSpace::lp(2, 3));
  EXPECT_EQ(NormedSpace::parse("l1.5", 3), NormedSpace::lp(1.5, 3));
  EXPECT_EQ(NormedSpace::parse("linf", 3), NormedSpace::linf(3));
  EXPECT_EQ(NormedSpace::parse("sym", 9), NormedSpace::sym_matrix(3));
  EXPECT_EQ(NormedSpace::sym_matrix(3).dim(), 9u);
  EXPECT_EQ(NormedSpace::sym_matrix(3).side(), 3u);
}

TEST(Banach, NormAxiomsOnRandomElements) {
  Rng rng(2024);
  std::uniform_real_distribution<double> scale(-5, 5);
  for (const auto& space : sample_spaces()) {
    EXPECT_EQ(space.norm(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dim()))), 0.0);
    const int reps = space.kind() == NormedSpace::Kind::SymMatrix ? 2000 : 10000;
    for (int r = 0; r < reps; ++r) {
      const Eigen::VectorXd x = space.random_gaussian(rng);
      const Eigen::VectorXd y = space.random_gaussian(rng);
      const double c = scale(rng);
      const double nx = space.norm(x);
      EXPECT_NEAR(space.norm(c * x), std::abs(c) * nx, 1e-10 * std::max(1.0, nx));
      EXPECT_LE(space.norm(x + y), nx + space.norm(y) + 1e-10);
    }
  }
}

TEST(Banach, MatrixNormMatchesJacobiOracle) {
  Rng rng(5);
  for (std::size_t d = 1; d <= 8; ++d) {
    const auto space = NormedSpace::sym_matrix(d);
    for (int r = 0; r < 50; ++r) {
      const Eigen::VectorXd x = space.random_gaussian(rng);
      EXPECT_NEAR(space.norm(x), oracle_matrix_norm(x, d), 1e-9);
    }
  }
}

TEST(Banach, DualNormIsSupremumOfPairing) {
  // <x, y> <= ||x||_* ||y|| with equality approached by sampled unit y.
  Rng rng(11);
  for (const auto& space : sample_spaces()) {
    for (int r = 0; r < 200; ++r) {
      const Eigen::VectorXd x = space.random_gaussian(rng);
      const Eigen::VectorXd y = space.random_gaussian(rng);
      EXPECT_LE(std::abs(x.dot(y)), space.dual_norm(x) * space.norm(y) * (1 + 1e-12) + 1e-12);
    }
  }
  EXPECT_NEAR(NormedSpace::lp(2, 2).dual_norm(vec({3, 4})), 5.0, 1e-14);
  EXPECT_NEAR(NormedSpace::linf(3).dual_norm(vec({1, -2, 3})), 6.0, 1e-14);
  EXPECT_NEAR(NormedSpace::lp(1, 3).dual_norm(vec({1, -2, 3})), 3.0, 1e-14);
  EXPECT_NEAR(NormedSpace::sym_matrix(2).dual_norm(vec({2, 0, 0, -5})), 7.0, 1e-14);
}

TEST(Banach, RandomUnitAndDualUnit) {
  Rng rng(3);
  for (const auto& space : sample_spaces()) {
    for (int r = 0; r < 20; ++r) {
      EXPECT_NEAR(space.norm(space.random_unit(rng)), 1.0, 1e-12);
      EXPECT_NEAR(space.dual_norm(space.random_dual_unit(rng)), 1.0, 1e-12);
    }
  }
  const auto m = NormedSpace::sym_matrix(3);
  const Eigen::VectorXd x = m.random_gaussian(rng);
  EXPECT_NO_THROW(m.validate_element(x));
}

TEST(Banach, CenteringExamples) {
  const auto space = NormedSpace::linf(1);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(3, 1.0 / 3.0);

  Table constant = Table::Constant(6, 1, 4.0);
  const auto zero = center_and_normalize(make_step_functions(space, 2, 3, constant), uniform);
  EXPECT_TRUE(zero.degenerate);
  EXPECT_EQ(zero.table.cwiseAbs().maxCoeff(), 0.0);

  Table ramp(3, 1);
  ramp << 1, 2, 3;
  const auto c = center_and_normalize(make_step_functions(space, 1, 3, ramp), uniform);
  EXPECT_FALSE(c.degenerate);
  EXPECT_NEAR(c.table(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(c.table(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(c.table(2, 0), 1.0, 1e-15);
  EXPECT_EQ(c.max_norm, 1.0);

  Table big(3, 1);
  big << -2, 0, 2;
  const auto b = center_and_normalize(make_step_functions(space, 1, 3, big), uniform);
  EXPECT_EQ(b.max_norm, 1.0);
  EXPECT_EQ(b.table(0, 0), -1.0);
  EXPECT_EQ(b.table(2, 0), 1.0);
}

TEST(Banach, CenteringInvariantsAndIdempotence) {
  Eigen::VectorXd mu(4);
  mu << 0.1, 0.2, 0.3, 0.4;
  for (const auto& space : sample_spaces()) {
    const auto raw = random_unit_vectors(space, 5, 4, 17);
    auto f = raw.scaled(3.0);
    const auto c = center_and_normalize(f, mu);
    EXPECT_TRUE(c.centered);
    EXPECT_LE(c.max_norm, 1.0 + 1e-12);
    for (std::size_t i = 0; i < c.steps; ++i) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(space.dim()));
      for (std::size_t v = 0; v < 4; ++v) mean += mu(static_cast<Eigen::Index>(v)) * c.value(i, v);
      EXPECT_LE(mean.cwiseAbs().maxCoeff(), 1e-10);
    }
    const auto again = center_and_normalize(c, mu);
    EXPECT_LE((again.table - c.table).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Banach, CenteringRejectsWrongMu) {
  const auto f = random_unit_vectors(NormedSpace::lp(2, 2), 2, 3, 1);
  EXPECT_THROW(center_and_normalize(f, Eigen::VectorXd::Constant(4, 0.25)), ValidationError);
}

TEST(Banach, SmoothnessHilbert) {
  const double exact = std::sqrt(2.0) - 1.0;
  const double est = estimate_smoothness(NormedSpace::lp(2, 2), 1.0, 20000, 7);
  EXPECT_LE(est, exact + 1e-12);
  EXPECT_GT(est, exact - 1e-3);

  // Dense grid over unit pairs in the plane.
  double grid = 0.0;
  for (int a = 0; a < 720; ++a) {
    const double t = 2 * M_PI * a / 720.0;
    const double px = std::cos(t) + std::cos(0.0), py = std::sin(t);
    const double mx = std::cos(t) - 1.0, my = std::sin(t);
    grid = std::max(grid, 0.5 * (std::hypot(px, py) + std::hypot(mx, my)) - 1.0);
  }
  EXPECT_NEAR(grid, exact, 1e-9);

  for (double tau : {0.1, 0.5, 2.0}) {
    EXPECT_LE(estimate_smoothness(NormedSpace::lp(2, 5), tau, 2000, 1),
              std::sqrt(1 + tau * tau) - 1 + 1e-12);
  }
}

TEST(Banach, SmoothnessNonnegativeAndMonotone) {
  for (const auto& space : sample_spaces()) {
    EXPECT_GE(estimate_smoothness(space, 1e-3, 10, 3), -1e-12);
    double prev = -1.0;
    for (std::size_t trials : {1, 5, 25, 125}) {
      const double v = estimate_smoothness(space, 0.5, trials, 99);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
  // l_inf, x = e1, y = e2, tau = 1: exactly 0.
  const auto s = NormedSpace::linf(2);
  EXPECT_EQ(0.5 * (s.norm(vec({1, 1})) + s.norm(vec({1, -1}))) - 1.0, 0.0);
}

TEST(Banach, RademacherMatrices) {
  const auto f = random_rademacher_matrices(4, 3, 5, 8);
  EXPECT_EQ(f.table.rows(), 15);
  EXPECT_EQ(f.table.cols(), 16);
  for (Eigen::Index r = 0; r < f.table.rows(); ++r) {
    for (Eigen::Index e = 0; e < 16; ++e) EXPECT_NEAR(std::abs(f.table(r, e)), 0.5, 1e-15);
    EXPECT_NO_THROW(f.space.validate_element(f.table.row(r).transpose()));
  }
  const auto h = random_rademacher_matrices(4, 3, 5, 8, true);
  EXPECT_EQ(h.table.middleRows(0, 5), h.table.middleRows(5, 5));
  EXPECT_EQ(f.table, random_rademacher_matrices(4, 3, 5, 8).table);
}

TEST(Banach, PrefixAndScaled) {
  const auto f = random_unit_vectors(NormedSpace::lp(2, 3), 6, 4, 2);
  const auto p = f.prefix(2);
  EXPECT_EQ(p.steps, 2u);
  EXPECT_EQ(p.table, f.table.topRows(8));
  EXPECT_THROW(f.prefix(7), ValidationError);
  EXPECT_NEAR(f.scaled(2.0).max_norm, 2.0 * f.max_norm, 1e-14);
}

TEST(Banach, FunctionsFileRoundTrip) {
  for (const auto& space : sample_spaces()) {
    const auto f = random_unit_vectors(space, 3, 4, 5);
    std::istringstream in(format_step_functions(f));
    const auto back = read_step_functions(in);
    EXPECT_EQ(back.space, f.space);
    EXPECT_EQ(back.table, f.table);
  }
}

TEST(Banach, FunctionsFileValidation) {
  std::istringstream asym("1 1 sym 4\n0 1 2 0\n");
  EXPECT_THROW(read_step_functions(asym), ValidationError);
  std::istringstream short_file("2 1 l2 2\n1 2\n");
  EXPECT_THROW(read_step_functions(short_file), ValidationError);
  std::istringstream with_mu("1 2 l2 1\nmu 0.25 0.75\n1\n2\n");
  const auto t = read_table_file(with_mu);
  ASSERT_TRUE(t.mu.has_value());
  EXPECT_EQ((*t.mu)(1), 0.75);
  std::istringstream bad_mu("1 2 l2 1\nmu 0.5 0.75\n1\n2\n");
  EXPECT_THROW(read_table_file(bad_mu), ValidationError);
}
