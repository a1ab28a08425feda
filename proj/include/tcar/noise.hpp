#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tcar {

enum class NoiseFamily { normal, bernoulli, gamma, degenerate };

inline std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::normal: return "normal";
    case NoiseFamily::bernoulli: return "bernoulli";
    case NoiseFamily::gamma: return "gamma";
    case NoiseFamily::degenerate: return "degenerate";
  }
  return "unknown";
}

inline NoiseFamily noise_family_from_string(std::string_view name) {
  if (name == "normal") return NoiseFamily::normal;
  if (name == "bernoulli") return NoiseFamily::bernoulli;
  if (name == "gamma") return NoiseFamily::gamma;
  if (name == "degenerate") return NoiseFamily::degenerate;
  throw std::invalid_argument("unknown noise family '" + std::string(name) + "'");
}

/// Distribution of an exogenous noise term.
///
/// Parameters by family:
///   normal      (mean, stddev)
///   bernoulli   (p)
///   gamma       (shape, scale)   mean = shape*scale, var = shape*scale^2
///   degenerate  (value)
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::normal;
  std::vector<double> params{0.0, 1.0};

  static NoiseSpec normal(double mean, double stddev) { return {NoiseFamily::normal, {mean, stddev}}; }
  static NoiseSpec bernoulli(double p) { return {NoiseFamily::bernoulli, {p}}; }
  static NoiseSpec gamma(double shape, double scale) { return {NoiseFamily::gamma, {shape, scale}}; }
  static NoiseSpec degenerate(double value) { return {NoiseFamily::degenerate, {value}}; }

  static std::size_t arity(NoiseFamily family) {
    switch (family) {
      case NoiseFamily::normal: return 2;
      case NoiseFamily::gamma: return 2;
      case NoiseFamily::bernoulli: return 1;
      case NoiseFamily::degenerate: return 1;
    }
    return 0;
  }

  // Empty string when the parameters are admissible.
  std::string check() const {
    if (params.size() != arity(family)) {
      return std::string(to_string(family)) + " noise expects " + std::to_string(arity(family)) +
             " parameter(s), got " + std::to_string(params.size());
    }
    for (double v : params) {
      if (!std::isfinite(v)) return "non-finite noise parameter";
    }
    switch (family) {
      case NoiseFamily::normal:
        if (!(params[1] > 0.0)) return "normal stddev must be > 0";
        break;
      case NoiseFamily::gamma:
        if (!(params[0] > 0.0)) return "gamma shape must be > 0";
        if (!(params[1] > 0.0)) return "gamma scale must be > 0";
        break;
      case NoiseFamily::bernoulli:
        if (!(params[0] >= 0.0 && params[0] <= 1.0)) return "bernoulli p must lie in [0, 1]";
        break;
      case NoiseFamily::degenerate:
        break;
    }
    return {};
  }

  bool valid() const { return check().empty(); }

  double mean() const {
    switch (family) {
      case NoiseFamily::normal: return params[0];
      case NoiseFamily::bernoulli: return params[0];
      case NoiseFamily::gamma: return params[0] * params[1];
      case NoiseFamily::degenerate: return params[0];
    }
    return 0.0;
  }

  double variance() const {
    switch (family) {
      case NoiseFamily::normal: return params[1] * params[1];
      case NoiseFamily::bernoulli: return params[0] * (1.0 - params[0]);
      case NoiseFamily::gamma: return params[0] * params[1] * params[1];
      case NoiseFamily::degenerate: return 0.0;
    }
    return 0.0;
  }

  bool operator==(const NoiseSpec&) const = default;
};

// Stateful sampler bound to one NoiseSpec. Distribution objects carry
// internal state (normal draws come in pairs), so a sampler must be
// created fresh for every independent RNG stream.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseSpec& spec) {
    switch (spec.family) {
      case NoiseFamily::normal:
        dist_ = std::normal_distribution<double>(spec.params[0], spec.params[1]);
        break;
      case NoiseFamily::bernoulli:
        dist_ = std::bernoulli_distribution(spec.params[0]);
        break;
      case NoiseFamily::gamma:
        dist_ = std::gamma_distribution<double>(spec.params[0], spec.params[1]);
        break;
      case NoiseFamily::degenerate:
        dist_ = spec.params[0];
        break;
    }
  }

  template <class Rng>
  double operator()(Rng& rng) {
    return std::visit(
        [&rng](auto& d) -> double {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, double>) {
            return d;
          } else if constexpr (std::is_same_v<D, std::bernoulli_distribution>) {
            return d(rng) ? 1.0 : 0.0;
          } else {
            return d(rng);
          }
        },
        dist_);
  }

 private:
  std::variant<std::normal_distribution<double>, std::bernoulli_distribution,
               std::gamma_distribution<double>, double>
      dist_;
};

}  // namespace tcar
