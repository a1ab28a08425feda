#pragma once

// Linear additive-noise structural causal models: definition, validation,
// sampling, interventions and closed-form counterfactuals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "tcar/errors.hpp"
#include "tcar/noise.hpp"

namespace tcar {

enum class Actionability { actionable, mutable_, non_actionable };

inline std::string_view to_string(Actionability a) {
  switch (a) {
    case Actionability::actionable: return "actionable";
    case Actionability::mutable_: return "mutable";
    case Actionability::non_actionable: return "non_actionable";
  }
  return "unknown";
}

inline Actionability actionability_from_string(std::string_view s) {
  if (s == "actionable") return Actionability::actionable;
  if (s == "mutable") return Actionability::mutable_;
  if (s == "non_actionable") return Actionability::non_actionable;
  throw std::invalid_argument("unknown actionability '" + std::string(s) + "'");
}

// Only linear equations are evaluated; the tag reserves room for other forms.
enum class EquationForm { linear };

struct StructuralEquation {
  std::vector<std::string> parents;
  std::map<std::string, double> coefficients;
  double intercept = 0.0;
  EquationForm form = EquationForm::linear;

  static StructuralEquation linear(const std::vector<std::pair<std::string, double>>& terms,
                                   double intercept = 0.0) {
    StructuralEquation eq;
    eq.intercept = intercept;
    for (const auto& [parent, coef] : terms) {
      eq.parents.push_back(parent);
      eq.coefficients[parent] = coef;
    }
    return eq;
  }

  bool operator==(const StructuralEquation&) const = default;
};

struct Variable {
  std::string name;
  StructuralEquation equation;
  NoiseSpec noise;
  Actionability actionability = Actionability::actionable;

  bool operator==(const Variable&) const = default;
};

/// Sigmoid-link classifier on a linear score of the variables.
struct TargetSpec {
  std::map<std::string, double> coefficients;
  double decision_threshold = 0.5;
  std::string name = "Y";

  bool operator==(const TargetSpec&) const = default;
};

struct Instance {
  std::map<std::string, double> values;

  double at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw std::invalid_argument("instance has no value for '" + name + "'");
    return it->second;
  }
  bool operator==(const Instance&) const = default;
};

/// Additive intervention. Zero shifts are not part of the support.
struct Action {
  std::map<std::string, double> shifts;

  std::vector<std::string> support() const {
    std::vector<std::string> out;
    for (const auto& [name, delta] : shifts) {
      if (delta != 0.0) out.push_back(name);
    }
    return out;
  }
  bool empty() const { return support().empty(); }
  bool operator==(const Action&) const = default;
};

enum class IssueKind {
  duplicate_name,
  dangling_parent,
  self_parent,
  coefficient_mismatch,
  invalid_noise,
  cycle,
  invalid_target,
};

inline std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::duplicate_name: return "duplicate_name";
    case IssueKind::dangling_parent: return "dangling_parent";
    case IssueKind::self_parent: return "self_parent";
    case IssueKind::coefficient_mismatch: return "coefficient_mismatch";
    case IssueKind::invalid_noise: return "invalid_noise";
    case IssueKind::cycle: return "cycle";
    case IssueKind::invalid_target: return "invalid_target";
  }
  return "unknown";
}

struct ValidationIssue {
  IssueKind kind;
  std::string variable;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(IssueKind kind) const {
    return std::any_of(issues.begin(), issues.end(),
                       [kind](const ValidationIssue& i) { return i.kind == kind; });
  }
  std::string summary() const {
    std::string out;
    for (const auto& i : issues) {
      if (!out.empty()) out += "; ";
      out += std::string(to_string(i.kind)) + (i.variable.empty() ? "" : " [" + i.variable + "]") +
             ": " + i.message;
    }
    return out;
  }
};

/// An SCM is immutable once built. Construction never throws on model
/// defects; they are collected in report() and any operation that needs a
/// well-formed model throws ModelError.
class Scm {
 public:
  struct Term {
    std::size_t parent;
    double coefficient;
  };

  Scm() = default;
  Scm(std::vector<Variable> variables, TargetSpec target)
      : variables_(std::move(variables)), target_(std::move(target)) {
    build();
  }

  const std::vector<Variable>& variables() const { return variables_; }
  const TargetSpec& target() const { return target_; }
  std::size_t size() const { return variables_.size(); }
  const ValidationReport& report() const { return report_; }
  bool valid() const { return report_.ok(); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index_of(std::string_view name) const {
    auto idx = find(name);
    if (!idx) throw std::invalid_argument("unknown variable '" + std::string(name) + "'");
    return *idx;
  }
  const Variable& variable(std::string_view name) const { return variables_[index_of(name)]; }

  void require_valid() const {
    if (!valid()) throw ModelError("invalid SCM: " + report_.summary());
  }

  // Topological order as declaration indices (empty when invalid).
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<std::vector<Term>>& terms() const { return terms_; }
  // Score weight per declaration index.
  const std::vector<double>& score_weights() const { return score_weights_; }

  bool operator==(const Scm& other) const {
    return variables_ == other.variables_ && target_ == other.target_;
  }

 private:
  void build() {
    report_ = {};
    index_.clear();
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& v = variables_[i];
      if (!index_.emplace(v.name, i).second) {
        report_.issues.push_back({IssueKind::duplicate_name, v.name, "variable declared twice"});
      }
    }
    if (variables_.empty()) {
      report_.issues.push_back({IssueKind::invalid_target, "", "SCM has no variables"});
    }
    for (const auto& v : variables_) {
      const auto& eq = v.equation;
      std::set<std::string> parent_set(eq.parents.begin(), eq.parents.end());
      if (parent_set.size() != eq.parents.size()) {
        report_.issues.push_back({IssueKind::coefficient_mismatch, v.name, "parent listed twice"});
      }
      std::set<std::string> keys;
      for (const auto& [k, c] : eq.coefficients) {
        keys.insert(k);
        if (!std::isfinite(c)) {
          report_.issues.push_back({IssueKind::coefficient_mismatch, v.name, "non-finite coefficient"});
        }
      }
      if (keys != parent_set) {
        report_.issues.push_back(
            {IssueKind::coefficient_mismatch, v.name, "coefficient keys differ from parent list"});
      }
      if (!std::isfinite(eq.intercept)) {
        report_.issues.push_back({IssueKind::coefficient_mismatch, v.name, "non-finite intercept"});
      }
      for (const auto& p : eq.parents) {
        if (p == v.name) {
          report_.issues.push_back({IssueKind::self_parent, v.name, "variable lists itself as parent"});
        } else if (!index_.count(p)) {
          report_.issues.push_back({IssueKind::dangling_parent, v.name, "unknown parent '" + p + "'"});
        }
      }
      if (auto err = v.noise.check(); !err.empty()) {
        report_.issues.push_back({IssueKind::invalid_noise, v.name, err});
      }
    }
    bool any_nonzero = false;
    for (const auto& [name, c] : target_.coefficients) {
      if (!index_.count(name)) {
        report_.issues.push_back({IssueKind::invalid_target, name, "target references unknown variable"});
      }
      if (!std::isfinite(c)) {
        report_.issues.push_back({IssueKind::invalid_target, name, "non-finite target coefficient"});
      }
      any_nonzero = any_nonzero || c != 0.0;
    }
    if (!any_nonzero) {
      report_.issues.push_back({IssueKind::invalid_target, "", "target needs a nonzero coefficient"});
    }
    if (!(target_.decision_threshold > 0.0 && target_.decision_threshold < 1.0)) {
      report_.issues.push_back({IssueKind::invalid_target, "", "decision threshold must lie in (0, 1)"});
    }
    if (target_.name.empty() || index_.count(target_.name)) {
      report_.issues.push_back(
          {IssueKind::invalid_target, target_.name, "target name must be non-empty and distinct from variables"});
    }

    // Kahn's algorithm, ties broken by declaration index.
    const std::size_t n = variables_.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& p : variables_[i].equation.parents) {
        auto it = index_.find(p);
        if (it == index_.end() || it->second == i) continue;
        children[it->second].push_back(i);
        ++indegree[i];
      }
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] == 0) ready.push(i);
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
      auto i = ready.top();
      ready.pop();
      order.push_back(i);
      for (auto c : children[i]) {
        if (--indegree[c] == 0) ready.push(c);
      }
    }
    if (order.size() != n) {
      std::string members;
      for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] > 0) members += (members.empty() ? "" : ", ") + variables_[i].name;
      }
      report_.issues.push_back({IssueKind::cycle, "", "cycle through {" + members + "}"});
    }

    order_.clear();
    terms_.clear();
    score_weights_.clear();
    if (!report_.ok()) return;
    order_ = std::move(order);
    terms_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& eq = variables_[i].equation;
      for (const auto& p : eq.parents) terms_[i].push_back({index_.at(p), eq.coefficients.at(p)});
    }
    score_weights_.assign(n, 0.0);
    for (const auto& [name, c] : target_.coefficients) score_weights_[index_.at(name)] = c;
  }

  std::vector<Variable> variables_;
  TargetSpec target_;
  ValidationReport report_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<Term>> terms_;
  std::vector<double> score_weights_;
};

inline ValidationReport validate(const Scm& scm) { return scm.report(); }

inline std::vector<std::string> topological_order(const Scm& scm) {
  if (scm.report().has(IssueKind::cycle)) throw ModelError("cycle detected: " + scm.report().summary());
  scm.require_valid();
  std::vector<std::string> out;
  out.reserve(scm.size());
  for (auto i : scm.order()) out.push_back(scm.variables()[i].name);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction

inline double sigmoid(double score) {
  if (score >= 0.0) return 1.0 / (1.0 + std::exp(-score));
  const double e = std::exp(score);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct Prediction {
  double score = 0.0;
  double probability = 0.5;
  int label = 1;
};

namespace detail {

inline std::vector<double> to_values(const Scm& scm, const Instance& x) {
  if (x.values.size() != scm.size()) {
    throw std::invalid_argument("instance has " + std::to_string(x.values.size()) + " values, SCM has " +
                                std::to_string(scm.size()) + " variables");
  }
  std::vector<double> out(scm.size());
  for (std::size_t i = 0; i < scm.size(); ++i) {
    const auto& name = scm.variables()[i].name;
    auto it = x.values.find(name);
    if (it == x.values.end()) throw std::invalid_argument("instance is missing variable '" + name + "'");
    out[i] = it->second;
  }
  return out;
}

inline Instance to_instance(const Scm& scm, std::span<const double> values) {
  Instance x;
  for (std::size_t i = 0; i < scm.size(); ++i) x.values[scm.variables()[i].name] = values[i];
  return x;
}

inline std::vector<double> to_shifts(const Scm& scm, const Action& action) {
  std::vector<double> delta(scm.size(), 0.0);
  for (const auto& [name, d] : action.shifts) {
    auto idx = scm.find(name);
    if (!idx) throw std::invalid_argument("action targets unknown variable '" + name + "'");
    delta[*idx] = d;
  }
  return delta;
}

inline double score(const Scm& scm, std::span<const double> values) {
  double s = 0.0;
  const auto& w = scm.score_weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) s += w[i] * values[i];
  }
  return s;
}

inline Prediction predict(const Scm& scm, std::span<const double> values) {
  Prediction p;
  p.score = score(scm, values);
  p.probability = sigmoid(p.score);
  p.label = p.probability >= scm.target().decision_threshold ? 1 : 0;
  return p;
}

inline double structural_mean(const Scm& scm, std::size_t i, std::span<const double> values) {
  double f = scm.variables()[i].equation.intercept;
  for (const auto& t : scm.terms()[i]) f += t.coefficient * values[t.parent];
  return f;
}

// Abduction-action-prediction for additive noise. Substituting
// u = x - f(pa) into the shifted equation gives x' = x + delta + f(pa') - f(pa);
// the difference form keeps untouched coordinates bit-identical.
inline void counterfactual(const Scm& scm, std::span<const double> x, std::span<const double> delta,
                           std::span<double> out) {
  for (auto i : scm.order()) {
    double change = delta[i];
    for (const auto& t : scm.terms()[i]) {
      const double d = out[t.parent] - x[t.parent];
      if (d != 0.0) change += t.coefficient * d;
    }
    out[i] = change == 0.0 ? x[i] : x[i] + change;
  }
}

}  // namespace detail

inline Prediction predict(const Scm& scm, const Instance& x) {
  scm.require_valid();
  auto v = detail::to_values(scm, x);
  return detail::predict(scm, v);
}

// ---------------------------------------------------------------------------
// Interventions and counterfactuals

inline Scm intervene(const Scm& scm, const Action& action) {
  auto vars = scm.variables();
  for (const auto& [name, d] : action.shifts) {
    auto idx = scm.find(name);
    if (!idx) throw std::invalid_argument("action targets unknown variable '" + name + "'");
    if (d != 0.0) vars[*idx].equation.intercept += d;
  }
  return Scm(std::move(vars), scm.target());
}

inline Scm hard_intervene(const Scm& scm, const std::map<std::string, double>& assignments) {
  auto vars = scm.variables();
  for (const auto& [name, value] : assignments) {
    auto idx = scm.find(name);
    if (!idx) throw std::invalid_argument("do() targets unknown variable '" + name + "'");
    auto& v = vars[*idx];
    v.equation = StructuralEquation{};
    v.noise = NoiseSpec::degenerate(value);
  }
  return Scm(std::move(vars), scm.target());
}

inline std::map<std::string, double> abduct(const Scm& scm, const Instance& x) {
  scm.require_valid();
  auto v = detail::to_values(scm, x);
  std::map<std::string, double> u;
  for (std::size_t i = 0; i < scm.size(); ++i) {
    u[scm.variables()[i].name] = v[i] - detail::structural_mean(scm, i, v);
  }
  return u;
}

inline Instance counterfactual(const Scm& scm, const Instance& x, const Action& action) {
  scm.require_valid();
  auto v = detail::to_values(scm, x);
  auto delta = detail::to_shifts(scm, action);
  std::vector<double> out(scm.size());
  detail::counterfactual(scm, v, delta, out);
  return detail::to_instance(scm, out);
}

// ---------------------------------------------------------------------------
// Sampling

inline constexpr std::size_t kSampleBlockRows = 1024;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30u)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27u)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31u);
}

// Independent stream per fixed-size row block: output never depends on how
// blocks are spread over threads.
inline std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) {
  return splitmix64(splitmix64(seed) ^ (block * 0xd1b54a32d192ed03ull + 0x632be59bd9b4e019ull));
}

struct Dataset {
  // Variables in topological order, then "Y_prob", "Y_label".
  std::vector<std::string> columns;
  // Row-major, rows() x columns.size().
  std::vector<double> data;
  // Realized noise per row, same variable order as columns (no target columns).
  // Each entry is x - f(pa) as computed during generation, i.e. exactly what
  // abduction returns for that row.
  std::vector<double> noise;
  std::uint64_t seed = 0;

  std::size_t width() const { return columns.size(); }
  std::size_t variable_count() const { return columns.size() - 2; }
  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }
  double at(std::size_t row, std::size_t col) const { return data[row * width() + col]; }
  double noise_at(std::size_t row, std::size_t col) const { return noise[row * variable_count() + col]; }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] == name) return c;
    }
    throw std::invalid_argument("dataset has no column '" + std::string(name) + "'");
  }
  std::vector<double> column(std::string_view name) const {
    const auto c = column_index(name);
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
    return out;
  }
  Instance instance(std::size_t row) const {
    Instance x;
    for (std::size_t c = 0; c < variable_count(); ++c) x.values[columns[c]] = at(row, c);
    return x;
  }
};

struct SampleOptions {
  unsigned threads = 1;
  bool keep_noise = true;
};

namespace detail {

inline void sample_block(const Scm& scm, std::uint64_t seed, std::size_t block, std::size_t first,
                         std::size_t last, bool keep_noise, Dataset& ds) {
  std::mt19937_64 rng(block_seed(seed, block));
  const auto& order = scm.order();
  std::vector<NoiseSampler> samplers;
  samplers.reserve(order.size());
  for (auto i : order) samplers.emplace_back(scm.variables()[i].noise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(scm.size());
  const std::size_t width = ds.width();
  const std::size_t nvar = scm.size();
  for (std::size_t r = first; r < last; ++r) {
    double* row = ds.data.data() + r * width;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto i = order[k];
      const double u = samplers[k](rng);
      const double f = structural_mean(scm, i, x);
      x[i] = f + u;
      row[k] = x[i];
      if (keep_noise) ds.noise[r * nvar + k] = x[i] - f;
    }
    const double prob = sigmoid(score(scm, x));
    row[nvar] = prob;
    row[nvar + 1] = unit(rng) < prob ? 1.0 : 0.0;
  }
}

}  // namespace detail

inline Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed, SampleOptions opts = {}) {
  scm.require_valid();
  if (n == 0) throw std::invalid_argument("sample size must be >= 1");
  Dataset ds;
  ds.seed = seed;
  for (auto i : scm.order()) ds.columns.push_back(scm.variables()[i].name);
  ds.columns.push_back("Y_prob");
  ds.columns.push_back("Y_label");
  ds.data.assign(n * ds.width(), 0.0);
  if (opts.keep_noise) ds.noise.assign(n * scm.size(), 0.0);

  const std::size_t blocks = (n + kSampleBlockRows - 1) / kSampleBlockRows;
  auto run = [&](std::size_t b) {
    const std::size_t first = b * kSampleBlockRows;
    detail::sample_block(scm, seed, b, first, std::min(n, first + kSampleBlockRows), opts.keep_noise, ds);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(blocks)));
  if (threads == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Variances

struct VarianceEntry {
  double proper = 0.0;    // Var(U_i)
  double marginal = 0.0;  // Var(X_i)
};

using VarianceTable = std::map<std::string, VarianceEntry>;

/// Exact covariance of the endogenous variables (declaration-indexed),
/// propagated through the linear equations in topological order.
inline std::vector<std::vector<double>> covariance_matrix(const Scm& scm) {
  scm.require_valid();
  const std::size_t n = scm.size();
  std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
  std::vector<std::size_t> done;
  for (auto i : scm.order()) {
    const auto& terms = scm.terms()[i];
    for (auto k : done) {
      double c = 0.0;
      for (const auto& t : terms) c += t.coefficient * cov[t.parent][k];
      cov[i][k] = cov[k][i] = c;
    }
    double v = scm.variables()[i].noise.variance();
    for (const auto& a : terms) {
      for (const auto& b : terms) v += a.coefficient * b.coefficient * cov[a.parent][b.parent];
    }
    cov[i][i] = v;
    done.push_back(i);
  }
  return cov;
}

inline VarianceTable variances(const Scm& scm) {
  auto cov = covariance_matrix(scm);
  VarianceTable out;
  for (std::size_t i = 0; i < scm.size(); ++i) {
    out[scm.variables()[i].name] = {scm.variables()[i].noise.variance(), cov[i][i]};
  }
  return out;
}

// sigma_i^2 ~= sum_j a_ji sigma_j^2 + sigma_hat_i^2, taken verbatim (unsquared
// coefficients, parents treated as independent). Comparison only.
inline std::map<std::string, double> approx_variance(const Scm& scm) {
  scm.require_valid();
  std::vector<double> v(scm.size(), 0.0);
  for (auto i : scm.order()) {
    double s = scm.variables()[i].noise.variance();
    for (const auto& t : scm.terms()[i]) s += t.coefficient * v[t.parent];
    v[i] = s;
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < scm.size(); ++i) out[scm.variables()[i].name] = v[i];
  return out;
}

}  // namespace tcar
