#pragma once

// Minimal-cost recourse: find the cheapest additive action whose
// counterfactual flips the classifier to the favorable label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcar/cost.hpp"
#include "tcar/graph.hpp"
#include "tcar/scm.hpp"

namespace tcar {

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Bounds&) const = default;
};

struct RecourseProblem {
  RecourseProblem(Scm scm_, CausalDag dag_, Instance instance_, CostSpec cost_ = demo_cost_spec())
      : scm(std::move(scm_)), dag(std::move(dag_)), instance(std::move(instance_)), cost(cost_) {}

  Scm scm;
  CausalDag dag;
  Instance instance;
  CostSpec cost;
  std::size_t max_support = 2;
  // Per-variable overrides; everything else gets +-bound_sigmas * proper stddev.
  std::map<std::string, Bounds> bounds;
  double bound_sigmas = 5.0;
  // Brute-force oracle: grid points per side of zero, per variable.
  std::size_t grid_steps = 100;

  void validate() const {
    scm.require_valid();
    cost.validate();
    if (max_support == 0) throw std::invalid_argument("max support size k must be >= 1");
    if (!(bound_sigmas >= 0.0)) throw std::invalid_argument("bound_sigmas must be >= 0");
    for (const auto& [name, b] : bounds) {
      scm.index_of(name);
      if (!(b.lo <= 0.0 && 0.0 <= b.hi)) throw std::invalid_argument("bounds for '" + name + "' must contain 0");
    }
    if (!dag.contains(scm.target().name)) throw std::invalid_argument("DAG lacks the target node");
  }

  Bounds bounds_for(const std::string& name, const VarianceTable& var) const {
    if (auto it = bounds.find(name); it != bounds.end()) return it->second;
    const double r = bound_sigmas * std::sqrt(var.at(name).proper);
    return {-r, r};
  }
};

struct SearchDiagnostics {
  std::size_t subsets_examined = 0;
  std::size_t budget_filtered = 0;
  std::size_t infeasible_subsets = 0;
  std::size_t grid_points = 0;
  std::string message;
  std::vector<std::string> warnings;
};

struct RecourseSolution {
  Action action;
  CostBreakdown cost;
  Instance counterfactual;
  double probability = 0.0;
  bool feasible = false;
  SearchDiagnostics diagnostics;

  std::vector<std::string> support() const { return action.support(); }
};

inline std::vector<std::vector<std::string>> admissible_supports(const RecourseProblem& problem) {
  std::vector<std::string> actionable;
  for (const auto& v : problem.scm.variables()) {
    if (v.actionability == Actionability::actionable) actionable.push_back(v.name);
  }
  if (actionable.empty()) throw std::invalid_argument("SCM has no actionable variables");
  std::sort(actionable.begin(), actionable.end());

  std::vector<std::vector<std::string>> out;
  const std::size_t k = std::min(problem.max_support, actionable.size());
  std::vector<std::string> current;
  for (std::size_t size = 1; size <= k; ++size) {
    auto rec = [&](auto&& self, std::size_t start) -> void {
      if (current.size() == size) {
        out.push_back(current);
        return;
      }
      for (std::size_t i = start; i < actionable.size(); ++i) {
        current.push_back(actionable[i]);
        self(self, i + 1);
        current.pop_back();
      }
    };
    rec(rec, 0);
  }
  return out;
}

namespace detail {

// Total order used to pick among solutions: cost, then smaller support,
// then lexicographic support. Costs within a relative 1e-9 count as tied.
inline bool better_solution(const RecourseSolution& a, const RecourseSolution& b) {
  const double tol = 1e-9 * std::max({1.0, std::abs(a.cost.total), std::abs(b.cost.total)});
  if (a.cost.total < b.cost.total - tol) return true;
  if (a.cost.total > b.cost.total + tol) return false;
  const auto sa = a.support();
  const auto sb = b.support();
  if (sa.size() != sb.size()) return sa.size() < sb.size();
  return sa < sb;
}

struct SolveContext {
  VarianceTable variances;
  std::vector<double> x;
  Prediction current;
  double gap = 0.0;  // score increase needed for the favorable label

  explicit SolveContext(const RecourseProblem& p)
      : variances(tcar::variances(p.scm)), x(to_values(p.scm, p.instance)), current(predict(p.scm, x)) {
    gap = logit(p.scm.target().decision_threshold) - current.score;
  }
};

inline RecourseSolution evaluate(const RecourseProblem& problem, const SolveContext& ctx, const Action& action) {
  RecourseSolution sol;
  sol.action = action;
  const auto delta = to_shifts(problem.scm, action);
  std::vector<double> out(problem.scm.size());
  counterfactual(problem.scm, ctx.x, delta, out);
  const auto pred = predict(problem.scm, out);
  sol.counterfactual = to_instance(problem.scm, out);
  sol.probability = pred.probability;

  const auto support = action.support();
  if (!support.empty()) {
    sol.cost.feature = feature_cost(action, problem.cost, ctx.variances);
    const auto t = time_cost_detail(problem.dag, support, problem.scm.target().name, problem.cost);
    sol.cost.time = t.value;
    if (t.unreachable.size() == support.size()) {
      sol.diagnostics.warnings.push_back("no support variable has a directed path to the target; c_t = 0");
    }
    sol.cost.total = sol.cost.feature + problem.cost.lambda * sol.cost.time;
  }
  sol.feasible = pred.label == 1;
  if (problem.cost.time_budget && sol.cost.time > *problem.cost.time_budget) sol.feasible = false;
  return sol;
}

// Minimize ||z||_p over z >= 0, z <= cap, sum(a_i z_i) >= g (a_i > 0).
// Returns nullopt if the capacity sum(a_i cap_i) falls short of g.
inline std::optional<std::vector<double>> min_norm_on_halfspace(const std::vector<double>& a,
                                                                const std::vector<double>& cap, double g,
                                                                double p) {
  const std::size_t n = a.size();
  std::vector<double> z(n, 0.0);
  if (g <= 0.0) return z;
  double capacity = 0.0;
  for (std::size_t i = 0; i < n; ++i) capacity += a[i] * cap[i];
  if (capacity < g) return std::nullopt;

  if (p == 1.0) {
    // l1: the optimum is a vertex; fill coordinates by decreasing effect.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return a[l] > a[r]; });
    double remaining = g;
    for (auto i : idx) {
      if (remaining <= 0.0 || a[i] <= 0.0) break;
      z[i] = std::min(cap[i], remaining / a[i]);
      remaining -= a[i] * z[i];
    }
    return z;
  }

  // p > 1: KKT gives z_i = min(cap_i, t * a_i^{1/(p-1)}). The constraint is
  // piecewise linear in t, so sweep the clipping breakpoints.
  const double q = 1.0 / (p - 1.0);
  const double amax = *std::max_element(a.begin(), a.end());
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::pow(a[i] / amax, q);

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i] > 0.0) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t rr) { return cap[l] / r[l] < cap[rr] / r[rr]; });
  double slope = 0.0;
  for (auto i : idx) slope += a[i] * r[i];
  double fixed = 0.0;
  double t = -1.0;
  for (auto i : idx) {
    const double tb = cap[i] / r[i];
    if (slope * tb + fixed >= g) {
      t = (g - fixed) / slope;
      break;
    }
    slope -= a[i] * r[i];
    fixed += a[i] * cap[i];
  }
  if (t < 0.0) return cap;  // every coordinate at its bound
  for (auto i : idx) z[i] = std::min(cap[i], t * r[i]);
  return z;
}

}  // namespace detail

/// Counterfactual, prediction and cost of one action. Feasible means the
/// counterfactual is favorable and, with a budget, c_t stays within it.
inline RecourseSolution evaluate_action(const RecourseProblem& problem, const Action& action) {
  problem.validate();
  const auto support = action.support();
  if (support.size() > problem.max_support) {
    throw std::invalid_argument("action support exceeds k = " + std::to_string(problem.max_support));
  }
  for (const auto& name : support) {
    if (problem.scm.variable(name).actionability != Actionability::actionable) {
      throw std::invalid_argument("'" + name + "' is not actionable");
    }
  }
  detail::SolveContext ctx(problem);
  return detail::evaluate(problem, ctx, action);
}

/// Production solver. For a linear SCM the counterfactual score moves by
/// e . delta, with e the total effects on the score, so the favorable region
/// of each support is a half-space and the cheapest point on it has a
/// closed form. Every candidate is re-checked by a full counterfactual.
inline RecourseSolution solve(const RecourseProblem& problem) {
  problem.validate();
  detail::SolveContext ctx(problem);
  const auto& target = problem.scm.target().name;

  if (ctx.current.label == 1) {
    RecourseSolution sol = detail::evaluate(problem, ctx, Action{});
    sol.feasible = true;
    sol.diagnostics.message = "instance already receives the favorable decision";
    return sol;
  }

  std::optional<RecourseSolution> best;
  SearchDiagnostics diag;
  for (const auto& support : admissible_supports(problem)) {
    ++diag.subsets_examined;
    double ct = 0.0;
    try {
      ct = time_cost(problem.dag, support, target, problem.cost);
    } catch (const IllDefinedAverageError& e) {
      diag.warnings.push_back(e.what());
      continue;
    }
    if (problem.cost.time_budget && ct > *problem.cost.time_budget) {
      ++diag.budget_filtered;
      continue;
    }

    std::vector<double> a;
    std::vector<double> cap;
    std::vector<double> scale;
    std::vector<double> sign;
    for (const auto& name : support) {
      const double s = normalizer(name, problem.cost, ctx.variances);
      const double w = total_causal_effect(problem.dag, name, target) * s;
      const auto b = problem.bounds_for(name, ctx.variances);
      a.push_back(std::abs(w));
      sign.push_back(w >= 0.0 ? 1.0 : -1.0);
      cap.push_back((w >= 0.0 ? b.hi : -b.lo) / s);
      scale.push_back(s);
    }

    std::optional<RecourseSolution> found;
    for (double slack : {1e-9, 1e-7, 1e-5}) {
      const double g = ctx.gap + slack * std::max(1.0, std::abs(ctx.gap));
      auto z = detail::min_norm_on_halfspace(a, cap, g, problem.cost.p);
      if (!z) continue;
      Action action;
      for (std::size_t i = 0; i < support.size(); ++i) {
        if ((*z)[i] > 0.0) {
          const auto b = problem.bounds_for(support[i], ctx.variances);
          action.shifts[support[i]] = std::clamp(sign[i] * (*z)[i] * scale[i], b.lo, b.hi);
        }
      }
      if (action.empty()) continue;
      auto sol = detail::evaluate(problem, ctx, action);
      if (sol.feasible) {
        found = std::move(sol);
        break;
      }
    }
    if (!found) {
      ++diag.infeasible_subsets;
      continue;
    }
    if (!best || detail::better_solution(*found, *best)) best = std::move(found);
  }

  if (!best) {
    RecourseSolution sol = detail::evaluate(problem, ctx, Action{});
    sol.feasible = false;
    sol.diagnostics = diag;
    sol.diagnostics.message = "no feasible action within bounds";
    return sol;
  }
  auto warnings = std::move(best->diagnostics.warnings);
  best->diagnostics = diag;
  best->diagnostics.warnings.insert(best->diagnostics.warnings.end(), warnings.begin(), warnings.end());
  return *best;
}

/// Upper bound on the cost gap between the grid optimum and the true one.
inline double oracle_tolerance(const RecourseProblem& problem) {
  const auto var = variances(problem.scm);
  double step = 0.0;
  for (const auto& v : problem.scm.variables()) {
    if (v.actionability != Actionability::actionable) continue;
    const auto b = problem.bounds_for(v.name, var);
    const double s = normalizer(v.name, problem.cost, var);
    step = std::max(step, std::max(-b.lo, b.hi) / static_cast<double>(problem.grid_steps) / s);
  }
  return step * std::pow(static_cast<double>(problem.max_support), 1.0 / problem.cost.p);
}

inline constexpr std::uint64_t kMaxGridPoints = 10'000'000;

/// Exhaustive grid search over every admissible support; each grid point is
/// judged by a full counterfactual and prediction. Test oracle.
inline RecourseSolution brute_force_solve(const RecourseProblem& problem) {
  problem.validate();
  if (problem.grid_steps == 0) throw std::invalid_argument("grid resolution must be >= 1");
  detail::SolveContext ctx(problem);
  const auto supports = admissible_supports(problem);
  const std::uint64_t per_var = 2 * static_cast<std::uint64_t>(problem.grid_steps);
  std::uint64_t total = 0;
  for (const auto& s : supports) {
    std::uint64_t pts = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      pts *= per_var;
      if (pts > kMaxGridPoints) break;
    }
    total += pts;
    if (total > kMaxGridPoints) throw std::invalid_argument("recourse grid exceeds 1e7 points");
  }

  if (ctx.current.label == 1) {
    RecourseSolution sol = detail::evaluate(problem, ctx, Action{});
    sol.feasible = true;
    return sol;
  }

  const auto& target = problem.scm.target().name;
  SearchDiagnostics diag;
  diag.grid_points = total;
  std::optional<RecourseSolution> best;
  std::vector<double> delta(problem.scm.size(), 0.0);
  std::vector<double> out(problem.scm.size());
  std::vector<double> scaled;

  for (const auto& support : supports) {
    ++diag.subsets_examined;
    double ct = 0.0;
    try {
      ct = time_cost(problem.dag, support, target, problem.cost);
    } catch (const IllDefinedAverageError& e) {
      diag.warnings.push_back(e.what());
      continue;
    }
    if (problem.cost.time_budget && ct > *problem.cost.time_budget) {
      ++diag.budget_filtered;
      continue;
    }
    const std::size_t k = support.size();
    std::vector<std::size_t> idx(k);
    std::vector<std::vector<double>> grid(k);
    std::vector<double> s(k);
    for (std::size_t i = 0; i < k; ++i) {
      idx[i] = problem.scm.index_of(support[i]);
      s[i] = normalizer(support[i], problem.cost, ctx.variances);
      const auto b = problem.bounds_for(support[i], ctx.variances);
      const double m = static_cast<double>(problem.grid_steps);
      for (std::size_t j = problem.grid_steps; j >= 1; --j) grid[i].push_back(b.lo * static_cast<double>(j) / m);
      for (std::size_t j = 1; j <= problem.grid_steps; ++j) grid[i].push_back(b.hi * static_cast<double>(j) / m);
    }

    double best_here = std::numeric_limits<double>::infinity();
    std::vector<double> best_delta;
    std::vector<std::size_t> pos(k, 0);
    scaled.assign(k, 0.0);
    while (true) {
      for (std::size_t i = 0; i < k; ++i) {
        delta[idx[i]] = grid[i][pos[i]];
        scaled[i] = std::abs(grid[i][pos[i]]) / s[i];
      }
      const double cs = lp_norm(scaled, problem.cost.p);
      if (cs + problem.cost.lambda * ct < best_here) {
        detail::counterfactual(problem.scm, ctx.x, delta, out);
        if (detail::predict(problem.scm, out).label == 1) {
          best_here = cs + problem.cost.lambda * ct;
          best_delta.assign(k, 0.0);
          for (std::size_t i = 0; i < k; ++i) best_delta[i] = grid[i][pos[i]];
        }
      }
      std::size_t d = 0;
      while (d < k && ++pos[d] == grid[d].size()) pos[d++] = 0;
      if (d == k) break;
    }
    for (auto i : idx) delta[i] = 0.0;

    if (best_delta.empty()) {
      ++diag.infeasible_subsets;
      continue;
    }
    Action action;
    for (std::size_t i = 0; i < k; ++i) action.shifts[support[i]] = best_delta[i];
    auto sol = detail::evaluate(problem, ctx, action);
    if (!sol.feasible) continue;
    if (!best || detail::better_solution(sol, *best)) best = std::move(sol);
  }

  if (!best) {
    RecourseSolution sol = detail::evaluate(problem, ctx, Action{});
    sol.feasible = false;
    sol.diagnostics = diag;
    sol.diagnostics.message = "no feasible grid point within bounds";
    return sol;
  }
  best->diagnostics = diag;
  return *best;
}

/// First sampled individual (seeded) that receives the unfavorable label.
inline Instance sample_unfavorable_instance(const Scm& scm, std::uint64_t seed) {
  constexpr std::size_t kRounds = 64;
  for (std::size_t round = 0; round < kRounds; ++round) {
    const auto ds = sample(scm, kSampleBlockRows, splitmix64(seed + round), {1, false});
    const auto col = ds.variable_count();
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (ds.at(r, col) < scm.target().decision_threshold) return ds.instance(r);
    }
  }
  throw std::runtime_error("no unfavorable individual found in sampled population");
}

struct FrontierPoint {
  double lambda = 0.0;
  RecourseSolution solution;
  bool support_changed = false;  // relative to the previous entry
};

inline std::vector<FrontierPoint> lambda_frontier(const RecourseProblem& problem, const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("lambda list is empty");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw std::invalid_argument("lambda values must be >= 0");
  }
  std::vector<FrontierPoint> out;
  for (double l : lambdas) {
    auto p = problem;
    p.cost.lambda = l;
    FrontierPoint pt{l, solve(p), false};
    if (!out.empty()) pt.support_changed = pt.solution.support() != out.back().solution.support();
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace tcar
