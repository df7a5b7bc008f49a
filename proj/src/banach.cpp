#include "chainbound/banach.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <random>

#include "chainbound/error.hpp"
#include "chainbound/text_io.hpp"

namespace chainbound {

namespace {

constexpr double kSymmetryTol = 1e-12;

// Scaled l_p norm; dividing by the largest entry first keeps the result
// exactly homogeneous under power-of-two scaling.
double lp_norm(const Eigen::Ref<const Eigen::VectorXd>& x, double p) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0 || !std::isfinite(m)) return m;
  if (p == 1.0) return x.cwiseAbs().sum();
  double acc = 0.0;
  if (p == 2.0) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double r = x(j) / m;
      acc += r * r;
    }
    return m * std::sqrt(acc);
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) acc += std::pow(std::abs(x(j)) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> as_matrix(
    const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t side) {
  const auto d = static_cast<Eigen::Index>(side);
  return {x.data(), d, d};
}

}  // namespace

// ---------------------------------------------------------------------------
// NormedSpace

NormedSpace NormedSpace::lp(double p, std::size_t dim) {
  require(dim >= 1, "space dimension must be positive");
  if (std::isinf(p) && p > 0) return linf(dim);
  require(std::isfinite(p) && p >= 1.0, "l_p needs p >= 1");
  return {Kind::Lp, p, dim, 0};
}

NormedSpace NormedSpace::linf(std::size_t dim) {
  require(dim >= 1, "space dimension must be positive");
  return {Kind::Linf, std::numeric_limits<double>::infinity(), dim, 0};
}

NormedSpace NormedSpace::sym_matrix(std::size_t side) {
  require(side >= 1, "matrix side must be positive");
  return {Kind::SymMatrix, 0.0, side * side, side};
}

NormedSpace NormedSpace::parse(const std::string& kind, std::size_t dim) {
  if (kind == "linf") return linf(dim);
  if (kind == "sym") {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
    require(side * side == dim, "sym space needs a square ambient dimension, got " +
                                    std::to_string(dim));
    return sym_matrix(side);
  }
  if (kind.size() > 1 && kind.front() == 'l') {
    return lp(io::parse_double(std::string_view(kind).substr(1)), dim);
  }
  throw ValidationError("unknown space kind '" + kind + "'");
}

std::string NormedSpace::kind_token() const {
  switch (kind_) {
    case Kind::Linf:
      return "linf";
    case Kind::SymMatrix:
      return "sym";
    case Kind::Lp:
      return "l" + io::format_double(p_);
  }
  return "?";
}

std::string NormedSpace::describe() const {
  if (kind_ == Kind::SymMatrix) {
    return "sym_matrix(d=" + std::to_string(side_) + ")";
  }
  return kind_token() + "(k=" + std::to_string(dim_) + ")";
}

void NormedSpace::validate_element(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require(static_cast<std::size_t>(x.size()) == dim_,
          "element has dimension " + std::to_string(x.size()) + ", space expects " +
              std::to_string(dim_));
  require(x.allFinite(), "element has non-finite entries");
  if (kind_ == Kind::SymMatrix) {
    const auto m = as_matrix(x, side_);
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale,
            "matrix element is not symmetric");
  }
}

double symmetric_spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigen solve failed");
  const auto& ev = eig.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double NormedSpace::norm(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require(static_cast<std::size_t>(x.size()) == dim_, "norm: dimension mismatch");
  switch (kind_) {
    case Kind::Linf:
      return x.cwiseAbs().maxCoeff();
    case Kind::Lp:
      return lp_norm(x, p_);
    case Kind::SymMatrix: {
      validate_element(x);
      return symmetric_spectral_norm(as_matrix(x, side_));
    }
  }
  return 0.0;
}

double NormedSpace::dual_norm(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require(static_cast<std::size_t>(x.size()) == dim_, "dual_norm: dimension mismatch");
  switch (kind_) {
    case Kind::Linf:
      return x.cwiseAbs().sum();
    case Kind::Lp:
      if (p_ == 1.0) return x.cwiseAbs().maxCoeff();
      return lp_norm(x, p_ / (p_ - 1.0));
    case Kind::SymMatrix: {
      validate_element(x);
      if (side_ == 1) return std::abs(x(0));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(as_matrix(x, side_),
                                                         Eigen::EigenvaluesOnly);
      return eig.eigenvalues().cwiseAbs().sum();
    }
  }
  return 0.0;
}

Eigen::VectorXd NormedSpace::random_gaussian(Rng& rng) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim_));
  if (kind_ != Kind::SymMatrix) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
    return x;
  }
  const auto d = static_cast<Eigen::Index>(side_);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      const double g = normal(rng);
      x(a * d + b) = g;
      x(b * d + a) = g;
    }
  }
  return x;
}

Eigen::VectorXd NormedSpace::random_unit(Rng& rng) const {
  while (true) {
    Eigen::VectorXd x = random_gaussian(rng);
    const double n = norm(x);
    if (n > 0.0) return x / n;
  }
}

Eigen::VectorXd NormedSpace::random_dual_unit(Rng& rng) const {
  while (true) {
    Eigen::VectorXd x = random_gaussian(rng);
    const double n = dual_norm(x);
    if (n > 0.0) return x / n;
  }
}

// ---------------------------------------------------------------------------
// StepFunctions

StepFunctions StepFunctions::prefix(std::size_t n) const {
  require(n >= 1 && n <= steps, "prefix length out of range");
  StepFunctions out = *this;
  out.steps = n;
  out.table = table.topRows(static_cast<Eigen::Index>(n * states));
  out.max_norm = family_max_norm(out);
  return out;
}

StepFunctions StepFunctions::scaled(double factor) const {
  StepFunctions out = *this;
  out.table *= factor;
  out.max_norm = max_norm * std::abs(factor);
  return out;
}

double family_max_norm(const StepFunctions& f) {
  double m = 0.0;
  for (Eigen::Index r = 0; r < f.table.rows(); ++r) {
    m = std::max(m, f.space.norm(f.table.row(r).transpose()));
  }
  return m;
}

StepFunctions make_step_functions(NormedSpace space, std::size_t steps, std::size_t states,
                                  Table table) {
  require(steps >= 1 && states >= 1, "step functions need n >= 1 and N >= 1");
  require(static_cast<std::size_t>(table.rows()) == steps * states,
          "function table has " + std::to_string(table.rows()) + " rows, expected n*N = " +
              std::to_string(steps * states));
  require(static_cast<std::size_t>(table.cols()) == space.dim(),
          "function table width differs from the space dimension");
  for (Eigen::Index r = 0; r < table.rows(); ++r) space.validate_element(table.row(r).transpose());
  StepFunctions f;
  f.space = space;
  f.steps = steps;
  f.states = states;
  f.table = std::move(table);
  f.max_norm = family_max_norm(f);
  return f;
}

StepFunctions center_and_normalize(const StepFunctions& f, const Eigen::VectorXd& mu) {
  require(static_cast<std::size_t>(mu.size()) == f.states,
          "mu has " + std::to_string(mu.size()) + " entries, family has N = " +
              std::to_string(f.states));
  StepFunctions out = f;
  const auto nstates = static_cast<Eigen::Index>(f.states);
  for (std::size_t i = 0; i < f.steps; ++i) {
    auto block = out.table.middleRows(static_cast<Eigen::Index>(i * f.states), nstates);
    const Eigen::RowVectorXd mean = mu.transpose() * block;
    block.rowwise() -= mean;
  }
  out.centered = true;
  out.max_norm = family_max_norm(out);
  out.degenerate = out.max_norm == 0.0;
  if (out.max_norm > 1.0) {
    out.table /= out.max_norm;
    out.max_norm = family_max_norm(out);
  }
  return out;
}

double estimate_smoothness(const NormedSpace& space, double tau, std::size_t trials,
                           std::uint64_t seed) {
  require(tau > 0.0, "smoothness tau must be positive");
  require(trials >= 1, "smoothness needs at least one trial");
  Rng rng(seed);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::VectorXd x = space.random_unit(rng);
    const Eigen::VectorXd y = space.random_unit(rng);
    const double value = 0.5 * (space.norm(x + tau * y) + space.norm(x - tau * y)) - 1.0;
    best = std::max(best, value);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Random families

StepFunctions random_rademacher_matrices(std::size_t side, std::size_t steps, std::size_t states,
                                         std::uint64_t seed, bool time_homogeneous) {
  const NormedSpace space = NormedSpace::sym_matrix(side);
  require(steps >= 1 && states >= 1, "random family needs n >= 1 and N >= 1");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(side);
  const double entry = 1.0 / std::sqrt(static_cast<double>(side));
  const std::size_t distinct = time_homogeneous ? 1 : steps;
  Table table(static_cast<Eigen::Index>(steps * states), static_cast<Eigen::Index>(side * side));
  for (std::size_t i = 0; i < distinct; ++i) {
    for (std::size_t v = 0; v < states; ++v) {
      const auto r = static_cast<Eigen::Index>(i * states + v);
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a; b < d; ++b) {
          const double s = (rng() >> 63) ? entry : -entry;
          table(r, a * d + b) = s;
          table(r, b * d + a) = s;
        }
      }
    }
  }
  for (std::size_t i = distinct; i < steps; ++i) {
    table.middleRows(static_cast<Eigen::Index>(i * states), static_cast<Eigen::Index>(states)) =
        table.topRows(static_cast<Eigen::Index>(states));
  }
  return make_step_functions(space, steps, states, std::move(table));
}

StepFunctions random_unit_vectors(const NormedSpace& space, std::size_t steps, std::size_t states,
                                  std::uint64_t seed, bool time_homogeneous) {
  require(steps >= 1 && states >= 1, "random family needs n >= 1 and N >= 1");
  Rng rng(seed);
  const std::size_t distinct = time_homogeneous ? 1 : steps;
  Table table(static_cast<Eigen::Index>(steps * states), static_cast<Eigen::Index>(space.dim()));
  for (std::size_t r = 0; r < distinct * states; ++r) {
    table.row(static_cast<Eigen::Index>(r)) = space.random_unit(rng).transpose();
  }
  for (std::size_t i = distinct; i < steps; ++i) {
    table.middleRows(static_cast<Eigen::Index>(i * states), static_cast<Eigen::Index>(states)) =
        table.topRows(static_cast<Eigen::Index>(states));
  }
  return make_step_functions(space, steps, states, std::move(table));
}

// ---------------------------------------------------------------------------
// Files

TableFile read_table_file(std::istream& in) {
  std::string line;
  require(io::next_content_line(in, line), "functions file: missing header");
  const auto header = io::split_ws(line);
  require(header.size() == 4, "functions file: header must be 'n N kind dim'");
  TableFile file;
  file.steps = io::parse_size(header[0]);
  file.states = io::parse_size(header[1]);
  file.kind = std::string(header[2]);
  file.dim = io::parse_size(header[3]);
  require(file.steps >= 1 && file.states >= 1 && file.dim >= 1,
          "functions file: n, N and dim must be positive");

  const std::size_t rows = file.steps * file.states;
  file.table.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(file.dim));
  std::size_t r = 0;
  while (r < rows) {
    require(io::next_content_line(in, line), "functions file: expected " + std::to_string(rows) +
                                                 " value lines, got " + std::to_string(r));
    auto tokens = io::split_ws(line);
    if (r == 0 && !file.mu && !tokens.empty() && tokens.front() == "mu") {
      require(tokens.size() == file.states + 1, "functions file: mu line needs N weights");
      Eigen::VectorXd mu(static_cast<Eigen::Index>(file.states));
      for (std::size_t v = 0; v < file.states; ++v) {
        mu(static_cast<Eigen::Index>(v)) = io::parse_double(tokens[v + 1]);
      }
      require(mu.minCoeff() > 0.0 && std::abs(mu.sum() - 1.0) <= 1e-9,
              "functions file: mu must be positive and sum to 1");
      file.mu = std::move(mu);
      continue;
    }
    require(tokens.size() == file.dim, "functions file: line " + std::to_string(r) + " has " +
                                           std::to_string(tokens.size()) + " values, expected " +
                                           std::to_string(file.dim));
    for (std::size_t j = 0; j < file.dim; ++j) {
      file.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          io::parse_double(tokens[j]);
    }
    ++r;
  }
  require(!io::next_content_line(in, line), "functions file: trailing content");
  return file;
}

std::string format_table_file(const TableFile& file) {
  std::string out = std::to_string(file.steps) + " " + std::to_string(file.states) + " " +
                    file.kind + " " + std::to_string(file.dim) + "\n";
  if (file.mu) {
    out += "mu";
    for (Eigen::Index v = 0; v < file.mu->size(); ++v) out += " " + io::format_double((*file.mu)(v));
    out += '\n';
  }
  for (Eigen::Index r = 0; r < file.table.rows(); ++r) {
    for (Eigen::Index j = 0; j < file.table.cols(); ++j) {
      if (j) out += ' ';
      out += io::format_double(file.table(r, j));
    }
    out += '\n';
  }
  return out;
}

StepFunctions read_step_functions(std::istream& in) {
  TableFile file = read_table_file(in);
  const NormedSpace space = NormedSpace::parse(file.kind, file.dim);
  return make_step_functions(space, file.steps, file.states, std::move(file.table));
}

StepFunctions load_step_functions(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open functions file " + path.string());
  return read_step_functions(in);
}

std::string format_step_functions(const StepFunctions& f) {
  TableFile file;
  file.steps = f.steps;
  file.states = f.states;
  file.kind = f.space.kind_token();
  file.dim = f.space.dim();
  file.table = f.table;
  return format_table_file(file);
}

}  // namespace chainbound
