#pragma once

// Piecewise i.i.d. simulation series: univariate normal, bivariate normal
// and bivariate copula segments (Frank, Gaussian) with normal / exponential /
// uniform marginals.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <nlohmann/json.hpp>

#include "cecpd/entropy.hpp"
#include "cecpd/errors.hpp"
#include "cecpd/matrix.hpp"

namespace cecpd {

struct UniformMarginal {
  friend bool operator==(const UniformMarginal&, const UniformMarginal&) = default;
};
struct NormalMarginal {
  double mean = 0.0;
  double variance = 1.0;
  friend bool operator==(const NormalMarginal&, const NormalMarginal&) = default;
};
struct ExponentialMarginal {
  double rate = 1.0;
  friend bool operator==(const ExponentialMarginal&, const ExponentialMarginal&) = default;
};
using Marginal = std::variant<UniformMarginal, NormalMarginal, ExponentialMarginal>;
using MarginalPair = std::array<Marginal, 2>;

// Inverse CDF at u, where u_complement = 1 - u is passed separately so tails
// keep full precision.
inline double marginal_quantile(const Marginal& marginal, double u, double u_complement) {
  struct Visitor {
    double u, uc;
    double operator()(const UniformMarginal&) const { return u; }
    double operator()(const NormalMarginal& m) const {
      const boost::math::normal dist(m.mean, std::sqrt(m.variance));
      return u <= 0.5 ? boost::math::quantile(dist, u) : boost::math::quantile(boost::math::complement(dist, uc));
    }
    double operator()(const ExponentialMarginal& m) const { return -std::log(uc) / m.rate; }
  };
  return std::visit(Visitor{u, u_complement}, marginal);
}

inline void validate_marginal(const Marginal& marginal) {
  if (const auto* n = std::get_if<NormalMarginal>(&marginal); n && !(n->variance > 0.0)) {
    throw ConfigError("normal marginal needs positive variance");
  }
  if (const auto* e = std::get_if<ExponentialMarginal>(&marginal); e && !(e->rate > 0.0)) {
    throw ConfigError("exponential marginal needs positive rate");
  }
}

enum class CopulaFamily { frank, gaussian };

struct UnivariateNormal {
  double mean = 0.0;
  double variance = 1.0;
  friend bool operator==(const UnivariateNormal&, const UnivariateNormal&) = default;
};
// Unit variances, `cov` off the diagonal.
struct BivariateNormal {
  std::array<double, 2> mean{0.0, 0.0};
  double cov = 0.0;
  friend bool operator==(const BivariateNormal&, const BivariateNormal&) = default;
};
struct CopulaBivariate {
  CopulaFamily family = CopulaFamily::gaussian;
  double parameter = 0.0;  // theta for Frank, rho for Gaussian
  MarginalPair marginals{UniformMarginal{}, UniformMarginal{}};
  friend bool operator==(const CopulaBivariate&, const CopulaBivariate&) = default;
};
using SegmentDistribution = std::variant<UnivariateNormal, BivariateNormal, CopulaBivariate>;

struct SegmentSpec {
  std::size_t length = 50;
  SegmentDistribution distribution;
  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

struct SimulationSpec {
  std::string name;
  Seed seed = 0;
  std::vector<SegmentSpec> segments;
  friend bool operator==(const SimulationSpec&, const SimulationSpec&) = default;
};

struct Simulation {
  std::string name;
  SampleMatrix values;
  std::vector<std::size_t> truth;  // 1-based first index of each new regime
};

namespace detail {

using Engine = std::mt19937_64;

inline Engine make_engine(Seed seed, std::uint64_t stream) {
  return Engine(hash_combine(splitmix64(seed), stream));
}

// Uniform on the open interval (0, 1).
inline double open_uniform(Engine& rng) {
  boost::random::uniform_01<double> unit;
  for (;;) {
    const double u = unit(rng);
    if (u > 0.0) return u;
  }
}

inline double std_normal(Engine& rng) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

inline double normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::sqrt(2.0)); }

inline std::size_t dimension_of(const SegmentDistribution& dist) {
  return std::holds_alternative<UnivariateNormal>(dist) ? 1 : 2;
}

}  // namespace detail

// Solves dC(u, v)/du = t for v in closed form, C the Frank copula.
// v = [log(t + (1-t) e^{-theta u}) - log((1-t) e^{-theta u} + t e^{-theta})] / theta.
// Near independence both logs are close to zero and go through log1p; for
// larger |theta| each log is a log-sum-exp of positive terms.
inline double frank_conditional_inverse(double u, double t, double theta) {
  if (std::abs(theta) < 1.0) {
    const double a = (1.0 - t) * std::expm1(-theta * u);
    return (std::log1p(a) - std::log1p(a + t * std::expm1(-theta))) / theta;
  }
  auto log_add = [](double x, double y) {
    const double hi = std::max(x, y);
    return hi + std::log1p(std::exp(std::min(x, y) - hi));
  };
  const double log_t = std::log(t);
  const double log_rest = std::log1p(-t) - theta * u;
  return (log_add(log_t, log_rest) - log_add(log_rest, log_t - theta)) / theta;
}

// dC(u, v)/du for the Frank copula.
inline double frank_conditional_cdf(double u, double v, double theta) {
  const double a = std::expm1(-theta * u);
  const double b = std::expm1(-theta * v);
  return (a + 1.0) * b / (std::expm1(-theta) + a * b);
}

namespace detail {

inline void fill_gaussian_copula(Engine& rng, std::size_t n, double rho, const MarginalPair& marginals,
                                 std::vector<double>& out) {
  const double tail = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = std_normal(rng);
    const double z2 = rho * z1 + tail * std_normal(rng);
    out.push_back(marginal_quantile(marginals[0], normal_cdf(z1), normal_cdf(-z1)));
    out.push_back(marginal_quantile(marginals[1], normal_cdf(z2), normal_cdf(-z2)));
  }
}

inline void fill_frank_copula(Engine& rng, std::size_t n, double theta, const MarginalPair& marginals,
                              std::vector<double>& out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = open_uniform(rng);
    double v = 0.0;
    do {
      v = frank_conditional_inverse(u, open_uniform(rng), theta);
    } while (!(v > 0.0 && v < 1.0));
    out.push_back(marginal_quantile(marginals[0], u, 1.0 - u));
    out.push_back(marginal_quantile(marginals[1], v, 1.0 - v));
  }
}

inline void validate_copula(CopulaFamily family, double parameter, const MarginalPair& marginals) {
  if (family == CopulaFamily::gaussian && !(std::abs(parameter) < 1.0)) {
    throw ConfigError("gaussian copula needs |rho| < 1");
  }
  if (family == CopulaFamily::frank && (parameter == 0.0 || !std::isfinite(parameter))) {
    throw ConfigError("frank copula needs a finite nonzero theta");
  }
  validate_marginal(marginals[0]);
  validate_marginal(marginals[1]);
}

}  // namespace detail

inline SampleMatrix sample_gaussian_copula(std::size_t n, double rho, const MarginalPair& marginals, Seed seed) {
  detail::validate_copula(CopulaFamily::gaussian, rho, marginals);
  if (n == 0) throw ConfigError("sample_gaussian_copula: n must be positive");
  auto rng = detail::make_engine(seed, 0);
  std::vector<double> values;
  values.reserve(2 * n);
  detail::fill_gaussian_copula(rng, n, rho, marginals, values);
  return {n, 2, std::move(values)};
}

inline SampleMatrix sample_frank_copula(std::size_t n, double theta, const MarginalPair& marginals, Seed seed) {
  detail::validate_copula(CopulaFamily::frank, theta, marginals);
  if (n == 0) throw ConfigError("sample_frank_copula: n must be positive");
  auto rng = detail::make_engine(seed, 0);
  std::vector<double> values;
  values.reserve(2 * n);
  detail::fill_frank_copula(rng, n, theta, marginals, values);
  return {n, 2, std::move(values)};
}

inline void validate(const SimulationSpec& spec) {
  if (spec.segments.empty()) throw ConfigError("simulation '" + spec.name + "' has no segments");
  const std::size_t d = detail::dimension_of(spec.segments.front().distribution);
  for (const auto& seg : spec.segments) {
    if (seg.length == 0) throw ConfigError("segment length must be positive");
    if (detail::dimension_of(seg.distribution) != d) throw ConfigError("segments differ in dimension");
    if (const auto* u = std::get_if<UnivariateNormal>(&seg.distribution); u && !(u->variance > 0.0)) {
      throw ConfigError("normal segment needs positive variance");
    }
    if (const auto* b = std::get_if<BivariateNormal>(&seg.distribution); b && !(std::abs(b->cov) < 1.0)) {
      throw ConfigError("bivariate normal segment needs |cov| < 1 for a positive-definite covariance");
    }
    if (const auto* c = std::get_if<CopulaBivariate>(&seg.distribution)) {
      detail::validate_copula(c->family, c->parameter, c->marginals);
    }
  }
}

inline std::vector<std::size_t> truth_of(const SimulationSpec& spec) {
  std::vector<std::size_t> truth;
  std::size_t offset = 0;
  for (std::size_t s = 0; s + 1 < spec.segments.size(); ++s) {
    offset += spec.segments[s].length;
    truth.push_back(offset + 1);
  }
  return truth;
}

// Each segment draws from its own stream keyed by (seed, segment index).
inline Simulation generate(const SimulationSpec& spec) {
  validate(spec);
  const std::size_t d = detail::dimension_of(spec.segments.front().distribution);
  std::vector<double> values;
  std::size_t n = 0;
  for (std::size_t s = 0; s < spec.segments.size(); ++s) {
    const auto& seg = spec.segments[s];
    auto rng = detail::make_engine(spec.seed, s + 1);
    if (const auto* u = std::get_if<UnivariateNormal>(&seg.distribution)) {
      const double sd = std::sqrt(u->variance);
      for (std::size_t i = 0; i < seg.length; ++i) values.push_back(u->mean + sd * detail::std_normal(rng));
    } else if (const auto* b = std::get_if<BivariateNormal>(&seg.distribution)) {
      const double tail = std::sqrt(1.0 - b->cov * b->cov);
      for (std::size_t i = 0; i < seg.length; ++i) {
        const double z1 = detail::std_normal(rng);
        const double z2 = b->cov * z1 + tail * detail::std_normal(rng);
        values.push_back(b->mean[0] + z1);
        values.push_back(b->mean[1] + z2);
      }
    } else {
      const auto& c = std::get<CopulaBivariate>(seg.distribution);
      if (c.family == CopulaFamily::frank) {
        detail::fill_frank_copula(rng, seg.length, c.parameter, c.marginals, values);
      } else {
        detail::fill_gaussian_copula(rng, seg.length, c.parameter, c.marginals, values);
      }
    }
    n += seg.length;
  }
  return {spec.name, SampleMatrix(n, d, std::move(values)), truth_of(spec)};
}

enum class UnivariateCase { mean, mean_var, var };
enum class MultivariateCase { mean, mean_var, var, copula };

inline std::string_view to_string(UnivariateCase c) {
  switch (c) {
    case UnivariateCase::mean: return "mean";
    case UnivariateCase::mean_var: return "mean-var";
    case UnivariateCase::var: return "var";
  }
  return "";
}

inline std::string_view to_string(MultivariateCase c) {
  switch (c) {
    case MultivariateCase::mean: return "mean";
    case MultivariateCase::mean_var: return "mean-var";
    case MultivariateCase::var: return "var";
    case MultivariateCase::copula: return "copula";
  }
  return "";
}

inline UnivariateCase parse_univariate_case(std::string_view s) {
  if (s == "mean") return UnivariateCase::mean;
  if (s == "mean-var") return UnivariateCase::mean_var;
  if (s == "var") return UnivariateCase::var;
  throw ConfigError("unknown univariate case '" + std::string(s) + "' (mean, mean-var, var)");
}

inline MultivariateCase parse_multivariate_case(std::string_view s) {
  if (s == "mean") return MultivariateCase::mean;
  if (s == "mean-var") return MultivariateCase::mean_var;
  if (s == "var") return MultivariateCase::var;
  if (s == "copula") return MultivariateCase::copula;
  throw ConfigError("unknown multivariate case '" + std::string(s) + "' (mean, mean-var, var, copula)");
}

// Four 50-point normal segments; second parameter is the variance.
inline SimulationSpec univariate_spec(UnivariateCase c, Seed seed) {
  using P = std::array<double, 2>;
  std::array<P, 4> params{};
  switch (c) {
    case UnivariateCase::mean: params = {P{0, 1}, P{5, 1}, P{10, 1}, P{3, 1}}; break;
    case UnivariateCase::mean_var: params = {P{0, 1}, P{5, 3}, P{10, 1}, P{3, 10}}; break;
    case UnivariateCase::var: params = {P{0, 1}, P{0, 10}, P{0, 5}, P{0, 1}}; break;
  }
  SimulationSpec spec{"uni-" + std::string(to_string(c)), seed, {}};
  for (const auto& [mean, variance] : params) spec.segments.push_back({50, UnivariateNormal{mean, variance}});
  return spec;
}

inline SimulationSpec multivariate_spec(MultivariateCase c, Seed seed) {
  SimulationSpec spec{"multi-" + std::string(to_string(c)), seed, {}};
  auto normal = [&](double m0, double m1, double cov) {
    spec.segments.push_back({50, BivariateNormal{{m0, m1}, cov}});
  };
  const MarginalPair marginals{NormalMarginal{0.0, 2.0}, ExponentialMarginal{0.5}};
  switch (c) {
    case MultivariateCase::mean:
      normal(0, 0, 0.2), normal(10, 10, 0.2), normal(5, 5, 0.2), normal(1, 0, 0.2);
      break;
    case MultivariateCase::mean_var:
      normal(0, 0, 0.2), normal(10, 10, 0.8), normal(5, 5, 0.1), normal(1, 0, 0.9);
      break;
    case MultivariateCase::var:
      normal(0, 0, 0.2), normal(0, 0, 0.8), normal(0, 0, 0.1), normal(0, 0, 0.9);
      break;
    case MultivariateCase::copula:
      normal(0, 0, 0.2);
      spec.segments.push_back({50, CopulaBivariate{CopulaFamily::frank, 0.9, marginals}});
      normal(5, 5, 0.1);
      spec.segments.push_back({50, CopulaBivariate{CopulaFamily::gaussian, 0.3, marginals}});
      break;
  }
  return spec;
}

inline Simulation gen_univariate_case(UnivariateCase c, Seed seed) { return generate(univariate_spec(c, seed)); }
inline Simulation gen_multivariate_case(MultivariateCase c, Seed seed) {
  return generate(multivariate_spec(c, seed));
}

// JSON form of SimulationSpec:
//   {"name": ..., "seed": ..., "segments": [{"length": 50, "distribution": {...}}]}
// with distribution objects tagged by "type": "univariate_normal" {mean,
// variance}, "bivariate_normal" {mean: [a, b], cov}, or "copula" {family:
// "frank"|"gaussian", parameter, marginals: [m, m]}; marginals are tagged
// "uniform", "normal" {mean, variance} or "exponential" {rate}.
inline nlohmann::json marginal_to_json(const Marginal& m) {
  if (const auto* n = std::get_if<NormalMarginal>(&m)) {
    return {{"type", "normal"}, {"mean", n->mean}, {"variance", n->variance}};
  }
  if (const auto* e = std::get_if<ExponentialMarginal>(&m)) return {{"type", "exponential"}, {"rate", e->rate}};
  return {{"type", "uniform"}};
}

inline Marginal marginal_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "uniform") return UniformMarginal{};
  if (type == "normal") return NormalMarginal{j.at("mean").get<double>(), j.at("variance").get<double>()};
  if (type == "exponential") return ExponentialMarginal{j.at("rate").get<double>()};
  throw ParseError("unknown marginal type '" + type + "'");
}

inline nlohmann::json to_json(const SimulationSpec& spec) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& seg : spec.segments) {
    nlohmann::json dist;
    if (const auto* u = std::get_if<UnivariateNormal>(&seg.distribution)) {
      dist = {{"type", "univariate_normal"}, {"mean", u->mean}, {"variance", u->variance}};
    } else if (const auto* b = std::get_if<BivariateNormal>(&seg.distribution)) {
      dist = {{"type", "bivariate_normal"}, {"mean", b->mean}, {"cov", b->cov}};
    } else {
      const auto& c = std::get<CopulaBivariate>(seg.distribution);
      dist = {{"type", "copula"},
              {"family", c.family == CopulaFamily::frank ? "frank" : "gaussian"},
              {"parameter", c.parameter},
              {"marginals", {marginal_to_json(c.marginals[0]), marginal_to_json(c.marginals[1])}}};
    }
    segments.push_back({{"length", seg.length}, {"distribution", dist}});
  }
  return {{"name", spec.name}, {"seed", spec.seed}, {"segments", segments}};
}

inline SimulationSpec spec_from_json(const nlohmann::json& j) {
  try {
    SimulationSpec spec;
    spec.name = j.value("name", std::string("simulation"));
    spec.seed = j.value("seed", Seed{0});
    for (const auto& s : j.at("segments")) {
      SegmentSpec seg;
      seg.length = s.value("length", std::size_t{50});
      const auto& d = s.at("distribution");
      const auto type = d.at("type").get<std::string>();
      if (type == "univariate_normal") {
        seg.distribution = UnivariateNormal{d.at("mean").get<double>(), d.at("variance").get<double>()};
      } else if (type == "bivariate_normal") {
        seg.distribution = BivariateNormal{d.at("mean").get<std::array<double, 2>>(), d.at("cov").get<double>()};
      } else if (type == "copula") {
        const auto family = d.at("family").get<std::string>();
        if (family != "frank" && family != "gaussian") throw ParseError("unknown copula family '" + family + "'");
        const auto& m = d.at("marginals");
        if (!m.is_array() || m.size() != 2) throw ParseError("copula segment needs exactly two marginals");
        seg.distribution = CopulaBivariate{family == "frank" ? CopulaFamily::frank : CopulaFamily::gaussian,
                                           d.at("parameter").get<double>(),
                                           {marginal_from_json(m[0]), marginal_from_json(m[1])}};
      } else {
        throw ParseError("unknown segment distribution '" + type + "'");
      }
      spec.segments.push_back(seg);
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("simulation spec: ") + e.what());
  }
}

}  // namespace cecpd
