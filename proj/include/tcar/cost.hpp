#pragma once

// Action costs: feature-space l_p cost (optionally variance-normalized) plus
// a graph-derived time cost, combined as c_s + lambda * c_t.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tcar/graph.hpp"
#include "tcar/scm.hpp"

namespace tcar {

enum class Normalization { none, marginal_sigma, proper_sigma };
enum class TimeVariant { longest_path, weighted_average_raw, weighted_average_abs };

inline std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::marginal_sigma: return "marginal_sigma";
    case Normalization::proper_sigma: return "proper_sigma";
  }
  return "unknown";
}

inline Normalization normalization_from_string(std::string_view s) {
  if (s == "none") return Normalization::none;
  if (s == "marginal_sigma" || s == "marginal") return Normalization::marginal_sigma;
  if (s == "proper_sigma" || s == "proper") return Normalization::proper_sigma;
  throw std::invalid_argument("unknown normalization '" + std::string(s) + "'");
}

inline std::string_view to_string(TimeVariant v) {
  switch (v) {
    case TimeVariant::longest_path: return "longest_path";
    case TimeVariant::weighted_average_raw: return "weighted_average_raw";
    case TimeVariant::weighted_average_abs: return "weighted_average_abs";
  }
  return "unknown";
}

inline TimeVariant time_variant_from_string(std::string_view s) {
  if (s == "longest_path" || s == "lp") return TimeVariant::longest_path;
  if (s == "weighted_average_raw" || s == "avg") return TimeVariant::weighted_average_raw;
  if (s == "weighted_average_abs" || s == "avg-abs") return TimeVariant::weighted_average_abs;
  throw std::invalid_argument("unknown time variant '" + std::string(s) + "'");
}

struct CostSpec {
  double p = 1.0;
  Normalization normalization = Normalization::proper_sigma;
  double lambda = 0.0;
  TimeVariant time_variant = TimeVariant::weighted_average_abs;
  std::optional<double> time_budget;

  void validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("cost exponent p must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
    if (time_budget && !(*time_budget >= 0.0)) throw std::invalid_argument("time budget must be >= 0");
  }

  bool operator==(const CostSpec&) const = default;
};

/// Setting used for the CED experiment: l1 over proper stddevs, no time term.
inline CostSpec experiment_cost_spec() { return CostSpec{}; }

/// Setting used by the recourse demo.
inline CostSpec demo_cost_spec() {
  CostSpec spec;
  spec.p = 2.0;
  spec.time_variant = TimeVariant::weighted_average_abs;
  return spec;
}

struct CostBreakdown {
  double feature = 0.0;  // c_s
  double time = 0.0;     // c_t
  double total = 0.0;
};

inline double normalizer(std::string_view name, const CostSpec& spec, const VarianceTable& var) {
  if (spec.normalization == Normalization::none) return 1.0;
  auto it = var.find(std::string(name));
  if (it == var.end()) throw std::invalid_argument("no variance available for '" + std::string(name) + "'");
  const double v = spec.normalization == Normalization::proper_sigma ? it->second.proper : it->second.marginal;
  if (!(v > 0.0)) throw std::invalid_argument("zero variance normalizer for '" + std::string(name) + "'");
  return std::sqrt(v);
}

inline double lp_norm(std::span<const double> values, double p) {
  double acc = 0.0;
  if (p == 1.0) {
    for (double v : values) acc += std::abs(v);
    return acc;
  }
  if (p == 2.0) {
    for (double v : values) acc += v * v;
    return std::sqrt(acc);
  }
  // scale by the max to avoid overflow for large p
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  for (double v : values) acc += std::pow(std::abs(v) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

inline double feature_cost(const Action& action, const CostSpec& spec, const VarianceTable& var) {
  std::vector<double> scaled;
  for (const auto& [name, delta] : action.shifts) {
    if (delta == 0.0) continue;
    scaled.push_back(std::abs(delta) / normalizer(name, spec, var));
  }
  return lp_norm(scaled, spec.p);
}

struct TimeCostDetail {
  double value = 0.0;
  // Support members with no directed path to the target; they contribute nothing.
  std::vector<std::string> unreachable;
};

inline TimeCostDetail time_cost_detail(const CausalDag& dag, std::span<const std::string> support,
                                       std::string_view target, const CostSpec& spec) {
  if (support.empty()) throw std::invalid_argument("time cost needs a non-empty support");
  TimeCostDetail out;
  for (const auto& v : support) {
    const auto lp = longest_path_time(dag, v, target);
    if (!lp) {
      out.unreachable.push_back(v);
      continue;
    }
    double t = 0.0;
    switch (spec.time_variant) {
      case TimeVariant::longest_path:
        t = *lp;
        break;
      case TimeVariant::weighted_average_raw:
        t = v == target ? 0.0 : expected_response_time(dag, v, target, Weighting::raw);
        break;
      case TimeVariant::weighted_average_abs:
        t = v == target ? 0.0 : expected_response_time(dag, v, target, Weighting::absolute);
        break;
    }
    out.value = std::max(out.value, t);
  }
  return out;
}

/// Time until the effect of acting on every support member has reached the
/// target: sup over members of the per-member time.
inline double time_cost(const CausalDag& dag, std::span<const std::string> support, std::string_view target,
                        const CostSpec& spec) {
  return time_cost_detail(dag, support, target, spec).value;
}

inline CostBreakdown total_cost(const Action& action, const CausalDag& dag, std::string_view target,
                                const CostSpec& spec, const VarianceTable& var) {
  spec.validate();
  CostBreakdown b;
  const auto support = action.support();
  if (support.empty()) return b;
  b.feature = feature_cost(action, spec, var);
  b.time = time_cost(dag, support, target, spec);
  b.total = b.feature + spec.lambda * b.time;
  return b;
}

}  // namespace tcar
