#include "chainbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "chainbound/error.hpp"
#include "chainbound/text_io.hpp"

namespace chainbound {

namespace {

void require_lambda(double lambda, const char* bound) {
  require(std::isfinite(lambda) && lambda >= 0.0 && lambda <= 1.0,
          std::string(bound) + ": lambda must lie in [0,1]");
  require(lambda < 1.0, std::string(bound) + ": lambda = 1 makes the bound vacuous");
}

void require_u(double u, const char* bound) {
  require(std::isfinite(u) && u >= 0.0, std::string(bound) + ": u must be finite and >= 0");
}

BoundReport start(std::string name, const UniversalConstants& consts,
                  std::vector<std::pair<std::string, double>> params) {
  consts.validate();
  BoundReport r;
  r.name = std::move(name);
  r.params = std::move(params);
  for (auto& entry : consts.entries()) r.params.push_back(std::move(entry));
  return r;
}

void finish(BoundReport& r, double value) {
  if (!std::isfinite(value) && !std::isinf(value)) {
    throw NumericalError(r.name + ": bound evaluated to NaN");
  }
  r.value = value;
  r.raw_value = value;
}

}  // namespace

void UniversalConstants::validate() const {
  for (const auto& [name, value] : entries()) {
    require(std::isfinite(value) && value > 0.0, "constant " + name + " must be positive");
  }
}

std::vector<std::pair<std::string, double>> UniversalConstants::entries() const {
  return {{"c_naor", c_naor}, {"C_main", C_main},   {"C1_tail", C1_tail},
          {"C2_tail", C2_tail}, {"C_gauss", C_gauss}, {"C_net", C_net}};
}

double BoundReport::get(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  for (const auto& [k, v] : extras) {
    if (k == key) return v;
  }
  throw std::out_of_range("report " + name + " has no entry " + std::string(key));
}

BoundReport to_probability(BoundReport report) {
  if (report.raw_value > 1.0) {
    report.value = 1.0;
    report.clipped = true;
  }
  return report;
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["value"] = report.value;
  j["exponent"] = report.exponent ? nlohmann::json(*report.exponent) : nlohmann::json(nullptr);
  j["clipped"] = report.clipped;
  j["raw_value"] = report.raw_value;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : report.params) params[k] = v;
  j["params"] = std::move(params);
  if (!report.extras.empty()) {
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [k, v] : report.extras) extras[k] = v;
    j["extras"] = std::move(extras);
  }
  if (!report.notes.empty()) j["notes"] = report.notes;
  return j;
}

// ---------------------------------------------------------------------------

BoundReport paulin_tail(double u, double sigma2, double M, double lambda,
                        const UniversalConstants& consts) {
  require_u(u, "paulin");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "paulin: sigma2 must be positive");
  require(M > 0.0 && std::isfinite(M), "paulin: M must be positive");
  require_lambda(lambda, "paulin");
  auto r = start("paulin", consts, {{"u", u}, {"sigma2", sigma2}, {"M", M}, {"lambda", lambda}});
  const double gap = 1.0 - lambda;
  const double exponent = -u * u * (2.0 * gap - gap * gap) / (8.0 * sigma2 + 20.0 * u * M);
  const double simplified_exponent =
      -std::min(u * u * gap / (16.0 * sigma2), u * gap / (40.0 * M));
  r.exponent = exponent;
  finish(r, 2.0 * std::exp(exponent));
  const double simplified = 2.0 * std::exp(simplified_exponent);
  r.extras = {{"simplified", simplified}, {"simplified_exponent", simplified_exponent}};
  if (r.value > simplified + 1e-12) {
    throw NumericalError("paulin: exact form exceeds simplified form");
  }
  return r;
}

BoundReport naor_bounds(double u, std::size_t n, double s, const UniversalConstants& consts) {
  require(std::isfinite(u), "naor: u must be finite");
  require(n >= 1, "naor: n must be >= 1");
  require(s > 0.0 && std::isfinite(s), "naor: s must be positive");
  auto r = start("naor", consts, {{"u", u}, {"n", static_cast<double>(n)}, {"s", s}});
  const double exponent = s + 2.0 - consts.c_naor * u * u;
  r.exponent = exponent;
  finish(r, std::exp(exponent));
  r.extras = {{"threshold", u * std::sqrt(static_cast<double>(n))},
              {"expectation", consts.C_main * std::sqrt(static_cast<double>(n) * s)}};
  r.notes.push_back("tail is for the event ||sum|| >= u*sqrt(n); samples independent");
  return r;
}

BoundReport main_expectation(std::size_t k, double lambda, double L,
                             const UniversalConstants& consts) {
  require(k >= 1, "main_expectation: k must be >= 1");
  require(L >= 0.0 && std::isfinite(L), "main_expectation: L must be >= 0");
  require_lambda(lambda, "main_expectation");
  auto r = start("main_expectation", consts,
                 {{"k", static_cast<double>(k)}, {"lambda", lambda}, {"L", L}});
  const double gap = 1.0 - lambda;
  const double dimension_term = consts.C_main * static_cast<double>(k) / gap;
  const double gaussian_term = consts.C_main * L / std::sqrt(gap);
  finish(r, dimension_term + gaussian_term);
  r.extras = {{"dimension_term", dimension_term}, {"gaussian_term", gaussian_term}};
  return r;
}

BoundReport main_tail(double u, std::size_t k, double lambda, double L,
                      const UniversalConstants& consts) {
  require_u(u, "main_tail");
  require(k >= 1, "main_tail: k must be >= 1");
  require(L > 0.0 && std::isfinite(L), "main_tail: L must be positive");
  require_lambda(lambda, "main_tail");
  auto r = start("main_tail", consts,
                 {{"u", u}, {"k", static_cast<double>(k)}, {"lambda", lambda}, {"L", L}});
  const double exponent =
      -consts.C2_tail * (1.0 - lambda) * std::min(u / static_cast<double>(k), u * u / (L * L));
  r.exponent = exponent;
  finish(r, consts.C1_tail * std::exp(exponent));
  return r;
}

BoundReport sharp_expectation(SharpVariant variant, std::size_t size, double lambda, double L,
                              const UniversalConstants& consts) {
  require(size >= 1, "sharp_expectation: dimension must be >= 1");
  require(L >= 0.0 && std::isfinite(L), "sharp_expectation: L must be >= 0");
  require_lambda(lambda, "sharp_expectation");
  const bool matrix = variant == SharpVariant::Matrix;
  auto r = start(matrix ? "sharp_expectation_matrix" : "sharp_expectation_linf", consts,
                 {{matrix ? "d" : "k", static_cast<double>(size)}, {"lambda", lambda}, {"L", L}});
  const double gap = 1.0 - lambda;
  const double size_term = matrix ? static_cast<double>(size) : std::log(static_cast<double>(size));
  const double dimension_term = consts.C_main * size_term / gap;
  const double gaussian_term = consts.C_main * L / std::sqrt(gap);
  finish(r, dimension_term + gaussian_term);
  r.extras = {{"dimension_term", dimension_term}, {"gaussian_term", gaussian_term}};
  return r;
}

BoundReport gaussian_matrix_expectation(double variance_norm, std::size_t k,
                                        const UniversalConstants& consts) {
  require(variance_norm >= 0.0 && std::isfinite(variance_norm),
          "gaussian_matrix: variance_norm must be >= 0");
  require(k >= 2, "gaussian_matrix: k must be >= 2");
  auto r = start("gaussian_matrix", consts,
                 {{"variance_norm", variance_norm}, {"k", static_cast<double>(k)}});
  const double logk = std::log(static_cast<double>(k));
  const double as_stated = consts.C_gauss * variance_norm * std::sqrt(logk);
  const double sqrt_form = consts.C_gauss * std::sqrt(variance_norm * logk);
  finish(r, sqrt_form);
  r.extras = {{"sqrt_form", sqrt_form}, {"as_stated", as_stated}};
  r.notes.push_back(
      "value is the square-root reading C*sqrt(||sum A_i^2|| log k); as_stated omits the root");
  return r;
}

BoundReport nsw_tail(double u, double sigma2, double lambda, std::size_t k,
                     const UniversalConstants& consts) {
  require_u(u, "nsw");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "nsw: sigma2 must be positive");
  require(k >= 1, "nsw: k must be >= 1");
  require_lambda(lambda, "nsw");
  auto r = start("nsw", consts,
                 {{"u", u}, {"sigma2", sigma2}, {"lambda", lambda}, {"k", static_cast<double>(k)}});
  constexpr double pi = std::numbers::pi;
  const double alpha = (1.0 + lambda) / (1.0 - lambda);
  const double beta = lambda == 0.0 ? 4.0 / (3.0 * pi) : (8.0 / pi) / (1.0 - lambda);
  const double exponent = -(u * u * pi * pi / (32.0 * 32.0)) / (alpha * sigma2 + beta * u);
  r.exponent = exponent;
  finish(r, std::pow(static_cast<double>(k), 1.0 - pi / 8.0) * std::exp(exponent));
  r.extras = {{"alpha", alpha}, {"beta", beta}};
  r.notes.push_back("the numerator threshold t is taken to be u");
  return r;
}

BoundReport mcdiarmid_tail(double u, std::span<const double> c, std::optional<std::size_t> tau,
                           const UniversalConstants& consts) {
  require_u(u, "mcdiarmid");
  require(!c.empty(), "mcdiarmid: c must be non-empty");
  double sum_sq = 0.0;
  for (double ci : c) {
    require(ci > 0.0 && std::isfinite(ci), "mcdiarmid: every c_i must be positive");
    sum_sq += ci * ci;
  }
  std::vector<std::pair<std::string, double>> params{{"u", u},
                                                     {"n", static_cast<double>(c.size())},
                                                     {"sum_c2", sum_sq}};
  if (tau) {
    require(*tau >= 1, "mcdiarmid: tau must be >= 1");
    params.emplace_back("tau", static_cast<double>(*tau));
  }
  auto r = start(tau ? "mcdiarmid_markov" : "mcdiarmid", consts, std::move(params));
  const double denom = tau ? static_cast<double>(*tau) * sum_sq : sum_sq;
  const double exponent = -2.0 * u * u / denom;
  r.exponent = exponent;
  finish(r, 2.0 * std::exp(exponent));
  return r;
}

std::size_t linf_chain_cutoff(std::size_t k) {
  require(k >= 1, "linf chaining cutoff needs k >= 1");
  return static_cast<std::size_t>(
      std::ceil(std::log2(std::log2(2.0 * static_cast<double>(k) + 1.0))));
}

double gamma1_analytic(Gamma1Kind kind, std::size_t k, const UniversalConstants& consts) {
  require(k >= 1, "gamma1_analytic: k must be >= 1");
  consts.validate();
  if (kind == Gamma1Kind::Linf) {
    const std::size_t top = linf_chain_cutoff(k);
    double sum = 0.0;
    for (std::size_t i = 0; i <= top; ++i) sum += std::ldexp(1.0, static_cast<int>(i));
    return sum;
  }
  // Terms rise until 2^i ~ k and then decay doubly exponentially.
  const double kk = static_cast<double>(k);
  double sum = 0.0;
  for (int i = 0; i < 1100; ++i) {
    const double scale = std::ldexp(1.0, i);
    const double term = scale * std::min(1.0, std::exp2(-scale / kk));
    sum += term;
    if (scale > kk && term < 1e-15) break;
  }
  return consts.C_net * sum;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& bound_names() {
  static const std::vector<std::string> names{
      "paulin", "naor", "main_expectation", "main_tail", "sharp_expectation",
      "gaussian_matrix", "nsw", "mcdiarmid"};
  return names;
}

bool is_tail_bound(std::string_view name) {
  return name == "paulin" || name == "naor" || name == "main_tail" || name == "nsw" ||
         name == "mcdiarmid";
}

BoundReport evaluate_bound(std::string_view name, const BoundInputs& in,
                           const UniversalConstants& consts) {
  if (name == "paulin") return paulin_tail(in.u, in.sigma2, in.M, in.lambda, consts);
  if (name == "naor") return naor_bounds(in.u, in.n, in.s, consts);
  if (name == "main_expectation") return main_expectation(in.k, in.lambda, in.L, consts);
  if (name == "main_tail") return main_tail(in.u, in.k, in.lambda, in.L, consts);
  if (name == "sharp_expectation") {
    return sharp_expectation(in.variant, in.variant == SharpVariant::Matrix ? in.d : in.k,
                             in.lambda, in.L, consts);
  }
  if (name == "gaussian_matrix") return gaussian_matrix_expectation(in.variance_norm, in.k, consts);
  if (name == "nsw") return nsw_tail(in.u, in.sigma2, in.lambda, in.k, consts);
  if (name == "mcdiarmid") return mcdiarmid_tail(in.u, in.c, in.tau, consts);
  throw ValidationError("unknown bound '" + std::string(name) + "'");
}

std::string bounds_csv(std::span<const std::string> names, const BoundInputs& base,
                       std::span<const double> u_grid, const UniversalConstants& consts,
                       bool probability_mode) {
  std::string out = "name,u,value,exponent,clipped\n";
  for (const auto& name : names) {
    for (double u : u_grid) {
      BoundInputs in = base;
      in.u = u;
      BoundReport r = evaluate_bound(name, in, consts);
      if (probability_mode && is_tail_bound(name)) r = to_probability(std::move(r));
      out += r.name + "," + io::format_double(u) + "," + io::format_double(r.value) + "," +
             (r.exponent ? io::format_double(*r.exponent) : std::string()) + "," +
             (r.clipped ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace chainbound
