#pragma once

// Semi-synthetic German-Credit benchmark: the loan-approval SCM, its
// response-time annotations, and the causal-effect-derivative experiment.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tcar/csv.hpp"
#include "tcar/graph.hpp"
#include "tcar/scm.hpp"

namespace tcar {

inline Scm german_scm() {
  using SE = StructuralEquation;
  std::vector<Variable> vars{
      {"G", SE{}, NoiseSpec::bernoulli(0.5), Actionability::non_actionable},
      {"A", SE::linear({}, -35.0), NoiseSpec::gamma(10.0, 3.5), Actionability::non_actionable},
      {"E", SE::linear({{"G", 1.0}, {"A", 1.0}}), NoiseSpec::normal(0.0, 1.0), Actionability::actionable},
      {"J", SE::linear({{"G", 1.0}, {"A", 2.0}, {"E", 4.0}}), NoiseSpec::normal(0.0, 2.0), Actionability::actionable},
      {"L", SE::linear({{"A", 1.0}, {"G", 0.5}}), NoiseSpec::normal(0.0, 3.0), Actionability::actionable},
      {"D", SE::linear({{"G", 1.0}, {"A", -0.5}, {"L", 2.0}}), NoiseSpec::normal(0.0, 2.0), Actionability::mutable_},
      {"I", SE::linear({{"G", 0.5}, {"A", 1.0}, {"E", 4.0}, {"J", 5.0}}), NoiseSpec::normal(0.0, 4.0),
       Actionability::actionable},
      {"S", SE::linear({{"I", 5.0}}), NoiseSpec::normal(0.0, 2.0), Actionability::actionable},
  };
  TargetSpec target;
  target.coefficients = {{"I", 2.0}, {"S", 3.0}, {"L", -1.0}, {"D", -1.0}};
  return Scm(std::move(vars), std::move(target));
}

// Edges starting at Education are slow; everything unlisted is instantaneous.
inline ResponseTimes german_times() {
  return {
      {{"E", "I"}, 5.0}, {{"E", "J"}, 5.0}, {{"J", "I"}, 1.0}, {{"I", "S"}, 2.0}, {{"D", "Y"}, 0.0},
      {{"I", "Y"}, 1.0}, {{"S", "Y"}, 0.0}, {{"L", "Y"}, 0.0}, {{"L", "D"}, 0.0},
  };
}

inline CausalDag german_dag() { return from_scm(german_scm(), german_times()); }

// Zero-noise individual aged 0.25 years below the mean (U_A = 34.75, G = 0).
// Score -148.125: unfavorable, and reachable both through Education and
// through Income within +-5 proper stddevs.
inline Instance german_demo_individual() {
  return Instance{{{"G", 0.0}, {"A", -0.25}, {"E", -0.25}, {"J", -1.5}, {"L", -0.25}, {"D", -0.375},
                   {"I", -8.75}, {"S", -43.75}}};
}

/// Education -> Skill -> Salary chain; the classifier looks at salary only.
inline Scm chain_scm(double a = 3.0, double b = 1.0) {
  using SE = StructuralEquation;
  std::vector<Variable> vars{
      {"X", SE{}, NoiseSpec::normal(0.0, 1.0), Actionability::actionable},
      {"Y", SE::linear({{"X", a}}), NoiseSpec::normal(0.0, 1.0), Actionability::actionable},
      {"Z", SE::linear({{"Y", b}}), NoiseSpec::normal(0.0, 1.0), Actionability::mutable_},
  };
  TargetSpec target;
  target.coefficients = {{"Z", 1.0}};
  target.name = "h";
  return Scm(std::move(vars), std::move(target));
}

inline ResponseTimes chain_times() { return {{{"X", "Y"}, 4.0}, {{"Y", "Z"}, 1.0}}; }

// Five-node toy graph X->W->Z->Y, W->Y, X->C->Y with unit betas. With
// unit_times every tau is 1; otherwise the annotated times 3,5,1,1,0,4.
inline CausalDag toy_time_graph(bool unit_times) {
  const auto t = [&](double tau) { return unit_times ? 1.0 : tau; };
  return CausalDag({"X", "W", "Z", "C", "Y"}, {{"X", "W", 1.0, t(3.0)},
                                               {"W", "Z", 1.0, t(5.0)},
                                               {"W", "Y", 1.0, t(1.0)},
                                               {"Z", "Y", 1.0, t(1.0)},
                                               {"X", "C", 1.0, t(0.0)},
                                               {"C", "Y", 1.0, t(4.0)}});
}

inline Scm two_node_scm() {
  std::vector<Variable> vars{{"X", StructuralEquation{}, NoiseSpec::normal(0.0, 1.0), Actionability::actionable}};
  TargetSpec target;
  target.coefficients = {{"X", 1.0}};
  return Scm(std::move(vars), std::move(target));
}

// ---------------------------------------------------------------------------
// Causal effect derivative

enum class CedPairing { common_random_numbers, independent };
enum class CedOutcome { probability, label };

struct CedOptions {
  CedPairing pairing = CedPairing::common_random_numbers;
  CedOutcome outcome = CedOutcome::probability;
  unsigned threads = 1;
};

struct CedEstimate {
  std::string variable;
  double alpha = 1.0;
  double shift = 0.0;  // alpha * proper stddev
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool operator==(const CedEstimate&) const = default;
};

namespace detail {

inline std::uint64_t independent_seed(std::uint64_t seed, std::size_t variable) {
  return splitmix64(seed ^ (0x5851f42d4c957f2dull * (variable + 1)));
}

inline CedEstimate ced_from(const Scm& scm, const Dataset& obs, std::size_t var, double alpha, std::size_t n,
                            std::uint64_t seed, const CedOptions& opts) {
  const auto& v = scm.variables()[var];
  CedEstimate est;
  est.variable = v.name;
  est.alpha = alpha;
  est.shift = alpha * std::sqrt(v.noise.variance());
  est.n = n;
  est.seed = seed;

  const bool paired = opts.pairing == CedPairing::common_random_numbers;
  const auto shifted = intervene(scm, Action{{{v.name, est.shift}}});
  const auto sample_seed = paired ? seed : independent_seed(seed, var);
  const auto dx = sample(shifted, n, sample_seed, {opts.threads, false});
  const auto col = obs.column_index(opts.outcome == CedOutcome::probability ? "Y_prob" : "Y_label");

  // Welford over the paired difference, or over both arms separately.
  double mean_d = 0.0, m2_d = 0.0, mean0 = 0.0, m20 = 0.0, mean1 = 0.0, m21 = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double y0 = obs.at(r, col);
    const double y1 = dx.at(r, col);
    const double k = static_cast<double>(r + 1);
    const double d = y1 - y0;
    double delta = d - mean_d;
    mean_d += delta / k;
    m2_d += delta * (d - mean_d);
    delta = y0 - mean0;
    mean0 += delta / k;
    m20 += delta * (y0 - mean0);
    delta = y1 - mean1;
    mean1 += delta / k;
    m21 += delta * (y1 - mean1);
  }
  const double nn = static_cast<double>(n);
  est.estimate = (mean1 - mean0) / alpha;
  if (paired) {
    est.std_error = std::sqrt(m2_d / (nn - 1.0) / nn) / alpha;
  } else {
    est.std_error = std::sqrt(m20 / (nn - 1.0) / nn + m21 / (nn - 1.0) / nn) / alpha;
  }
  return est;
}

}  // namespace detail

/// (mean Y under X_i + alpha * sigma_hat_i  -  mean Y observational) / alpha.
/// Paired mode reuses the observational noise draws for the shifted arm.
inline CedEstimate ced(const Scm& scm, const std::string& variable, double alpha, std::size_t n,
                       std::uint64_t seed, const CedOptions& opts = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (n < 2) throw std::invalid_argument("CED needs n >= 2");
  const auto var = scm.index_of(variable);
  const auto obs = sample(scm, n, seed, {opts.threads, false});
  return detail::ced_from(scm, obs, var, alpha, n, seed, opts);
}

struct CedRow {
  CedEstimate estimate;
  Actionability actionability = Actionability::actionable;
  bool actionable() const { return actionability == Actionability::actionable; }
  bool operator==(const CedRow&) const = default;
};

struct CedReport {
  double alpha = 1.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<CedRow> rows;  // declaration order

  const CedEstimate& at(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.estimate.variable == name) return r.estimate;
    }
    throw std::invalid_argument("no CED row for '" + name + "'");
  }
  bool operator==(const CedReport&) const = default;
};

inline CedReport ced_table(const Scm& scm, double alpha, std::size_t n, std::uint64_t seed,
                           const CedOptions& opts = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (n < 2) throw std::invalid_argument("CED needs n >= 2");
  const auto obs = sample(scm, n, seed, {opts.threads, false});
  CedReport report{alpha, n, seed, {}};
  for (std::size_t i = 0; i < scm.size(); ++i) {
    report.rows.push_back({detail::ced_from(scm, obs, i, alpha, n, seed, opts), scm.variables()[i].actionability});
  }
  return report;
}

inline std::string ced_stamp(const CedReport& r) {
  return "seed=" + std::to_string(r.seed) + " n=" + std::to_string(r.n) + " alpha=" + format_double(r.alpha);
}

inline void write_ced_csv(std::ostream& os, const CedReport& r) {
  os << "# " << ced_stamp(r) << '\n';
  os << "variable,actionable,alpha,ced,stderr\n";
  for (const auto& row : r.rows) {
    os << row.estimate.variable << ',' << to_string(row.actionability) << ',' << format_double(row.estimate.alpha)
       << ',' << format_double(row.estimate.estimate) << ',' << format_double(row.estimate.std_error) << '\n';
  }
}

inline void write_ced_text(std::ostream& os, const CedReport& r) {
  os << "# " << ced_stamp(r) << '\n';
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %-15s %8s %12s %12s\n", "variable", "actionable", "alpha", "ced", "stderr");
  os << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-10s %-15s %8.3f %12.6f %12.6f\n", row.estimate.variable.c_str(),
                  std::string(to_string(row.actionability)).c_str(), row.estimate.alpha, row.estimate.estimate,
                  row.estimate.std_error);
    os << line;
  }
}

// ---------------------------------------------------------------------------
// Pair-plot export

struct LabeledDataset {
  std::string label;
  Dataset data;
};

/// Observational sample plus one shifted sample per (variable, alpha), all
/// drawn with the same seed so unaffected columns coincide row by row.
inline std::vector<LabeledDataset> pairplot_data(const Scm& scm, std::size_t n, std::uint64_t seed,
                                                 const std::vector<std::pair<std::string, double>>& interventions) {
  std::vector<LabeledDataset> out;
  out.push_back({"observational", sample(scm, n, seed, {1, false})});
  for (const auto& [name, alpha] : interventions) {
    const double shift = alpha * std::sqrt(scm.variable(name).noise.variance());
    out.push_back({"do_" + name, sample(intervene(scm, Action{{{name, shift}}}), n, seed, {1, false})});
  }
  return out;
}

inline void write_pairplot_csv(std::ostream& os, const std::vector<LabeledDataset>& sets,
                               std::vector<std::string> columns, const std::string& comment = {}) {
  if (sets.empty()) return;
  if (columns.empty()) {
    const auto& all = sets.front().data.columns;
    columns.assign(all.begin(), all.end() - 1);  // drop Y_label
  } else {
    columns.push_back("Y_prob");
  }
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "distribution";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (const auto& set : sets) {
    std::vector<std::size_t> idx;
    for (const auto& c : columns) idx.push_back(set.data.column_index(c));
    for (std::size_t r = 0; r < set.data.rows(); ++r) {
      os << set.label;
      for (auto c : idx) os << ',' << format_double(set.data.at(r, c));
      os << '\n';
    }
  }
}

inline const std::vector<std::string>& pairplot_default_columns() {
  static const std::vector<std::string> cols{"A", "E", "I", "L"};
  return cols;
}

inline void pairplot_export(std::ostream& os, const Scm& scm, std::size_t n, std::uint64_t seed,
                            const std::vector<std::pair<std::string, double>>& interventions,
                            bool all_columns = false) {
  const auto sets = pairplot_data(scm, n, seed, interventions);
  write_pairplot_csv(os, sets, all_columns ? std::vector<std::string>{} : pairplot_default_columns(),
                     "seed=" + std::to_string(seed) + " n=" + std::to_string(n));
}

}  // namespace tcar
