#pragma once

// JSON mapping for SCM definition files and recourse requests/responses.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tcar/bench.hpp"
#include "tcar/cost.hpp"
#include "tcar/graph.hpp"
#include "tcar/recourse.hpp"
#include "tcar/scm.hpp"

namespace tcar {

using json = nlohmann::ordered_json;

struct ScmFile {
  Scm scm;
  ResponseTimes response_times;
};

namespace detail {

inline const char* const kNormalParams[] = {"mean", "stddev"};
inline const char* const kGammaParams[] = {"shape", "scale"};
inline const char* const kBernoulliParams[] = {"p"};
inline const char* const kDegenerateParams[] = {"value"};

inline std::vector<std::string> param_names(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::normal: return {kNormalParams[0], kNormalParams[1]};
    case NoiseFamily::gamma: return {kGammaParams[0], kGammaParams[1]};
    case NoiseFamily::bernoulli: return {kBernoulliParams[0]};
    case NoiseFamily::degenerate: return {kDegenerateParams[0]};
  }
  return {};
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw std::invalid_argument(what + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  n.family = noise_family_from_string(j.at("family").get<std::string>());
  n.params.clear();
  const auto& p = j.at("params");
  if (p.is_array()) {
    for (const auto& v : p) n.params.push_back(detail::number(v, "noise parameter"));
  } else if (p.is_object()) {
    for (const auto& key : detail::param_names(n.family)) {
      if (!p.contains(key)) throw std::invalid_argument(std::string(to_string(n.family)) + " noise needs '" + key + "'");
      n.params.push_back(detail::number(p.at(key), key));
    }
  } else {
    throw std::invalid_argument("noise params must be an array or object");
  }
  return n;
}

inline json noise_to_json(const NoiseSpec& n) {
  json params = json::object();
  const auto names = detail::param_names(n.family);
  for (std::size_t i = 0; i < n.params.size() && i < names.size(); ++i) params[names[i]] = n.params[i];
  return {{"family", to_string(n.family)}, {"params", params}};
}

inline ScmFile scm_file_from_json(const json& j) {
  std::vector<Variable> vars;
  for (const auto& jv : j.at("variables")) {
    Variable v;
    v.name = jv.at("name").get<std::string>();
    if (jv.contains("parents")) {
      for (const auto& [parent, coef] : jv.at("parents").items()) {
        v.equation.parents.push_back(parent);
        v.equation.coefficients[parent] = detail::number(coef, "coefficient of " + parent);
      }
    }
    v.equation.intercept = jv.contains("intercept") ? detail::number(jv.at("intercept"), "intercept") : 0.0;
    v.noise = noise_from_json(jv.at("noise"));
    v.actionability =
        actionability_from_string(jv.contains("actionability") ? jv.at("actionability").get<std::string>() : "actionable");
    vars.push_back(std::move(v));
  }
  TargetSpec target;
  const auto& jt = j.at("target");
  for (const auto& [name, coef] : jt.at("coefficients").items()) target.coefficients[name] = detail::number(coef, name);
  if (jt.contains("threshold")) target.decision_threshold = detail::number(jt.at("threshold"), "threshold");
  if (jt.contains("name")) target.name = jt.at("name").get<std::string>();

  ScmFile out{Scm(std::move(vars), std::move(target)), {}};
  if (j.contains("response_times")) {
    for (const auto& [key, tau] : j.at("response_times").items()) {
      out.response_times[parse_edge_key(key)] = detail::number(tau, "response time " + key);
    }
  }
  return out;
}

inline ScmFile load_scm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open SCM file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
  return scm_file_from_json(j);
}

inline json scm_to_json(const Scm& scm, const ResponseTimes& times = {}) {
  json vars = json::array();
  for (const auto& v : scm.variables()) {
    json parents = json::object();
    for (const auto& p : v.equation.parents) parents[p] = v.equation.coefficients.at(p);
    vars.push_back({{"name", v.name},
                    {"parents", parents},
                    {"intercept", v.equation.intercept},
                    {"noise", noise_to_json(v.noise)},
                    {"actionability", to_string(v.actionability)}});
  }
  json coefs = json::object();
  for (const auto& [name, c] : scm.target().coefficients) coefs[name] = c;
  json out{{"variables", vars},
           {"target", {{"name", scm.target().name}, {"coefficients", coefs}, {"threshold", scm.target().decision_threshold}}}};
  json rt = json::object();
  for (const auto& [key, tau] : times) rt[edge_key(key.first, key.second)] = tau;
  out["response_times"] = rt;
  return out;
}

inline Instance instance_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object of name -> value");
  Instance x;
  for (const auto& [name, v] : j.items()) x.values[name] = detail::number(v, "instance value '" + name + "'");
  return x;
}

inline json instance_to_json(const Instance& x) {
  json j = json::object();
  for (const auto& [name, v] : x.values) j[name] = v;
  return j;
}

inline Action action_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("action must be a JSON object of name -> shift");
  Action a;
  for (const auto& [name, v] : j.items()) a.shifts[name] = detail::number(v, "shift '" + name + "'");
  return a;
}

inline json action_to_json(const Action& a) {
  json j = json::object();
  for (const auto& [name, d] : a.shifts) {
    if (d != 0.0) j[name] = d;
  }
  return j;
}

inline CostSpec cost_spec_from_json(const json& j, CostSpec base = demo_cost_spec()) {
  if (!j.is_object()) throw std::invalid_argument("cost_spec must be an object");
  if (j.contains("p")) base.p = detail::number(j.at("p"), "p");
  if (j.contains("normalization")) base.normalization = normalization_from_string(j.at("normalization").get<std::string>());
  if (j.contains("lambda")) base.lambda = detail::number(j.at("lambda"), "lambda");
  if (j.contains("time_variant")) base.time_variant = time_variant_from_string(j.at("time_variant").get<std::string>());
  if (j.contains("time_budget") && !j.at("time_budget").is_null()) {
    base.time_budget = detail::number(j.at("time_budget"), "time_budget");
  }
  base.validate();
  return base;
}

inline json cost_spec_to_json(const CostSpec& c) {
  json j{{"p", c.p},
         {"normalization", to_string(c.normalization)},
         {"lambda", c.lambda},
         {"time_variant", to_string(c.time_variant)}};
  j["time_budget"] = c.time_budget ? json(*c.time_budget) : json(nullptr);
  return j;
}

/// Builds a problem from a request {instance, cost_spec, k?, time_budget?, bounds?}.
inline RecourseProblem recourse_problem_from_json(const json& req, const Scm& scm, const CausalDag& dag) {
  if (!req.is_object()) throw std::invalid_argument("request body must be a JSON object");
  if (!req.contains("instance")) throw std::invalid_argument("request needs 'instance'");
  RecourseProblem p{scm, dag, instance_from_json(req.at("instance")), demo_cost_spec()};
  if (req.contains("cost_spec")) p.cost = cost_spec_from_json(req.at("cost_spec"));
  if (req.contains("k")) {
    const auto k = detail::number(req.at("k"), "k");
    if (!(k >= 1.0) || k != std::floor(k)) throw std::invalid_argument("k must be a positive integer");
    p.max_support = static_cast<std::size_t>(k);
  }
  if (req.contains("time_budget") && !req.at("time_budget").is_null()) {
    p.cost.time_budget = detail::number(req.at("time_budget"), "time_budget");
  }
  if (req.contains("bounds")) {
    for (const auto& [name, b] : req.at("bounds").items()) {
      p.bounds[name] = {detail::number(b.at("lo"), name + ".lo"), detail::number(b.at("hi"), name + ".hi")};
    }
  }
  // surface instance problems as request errors rather than later
  detail::to_values(scm, p.instance);
  p.validate();
  return p;
}

inline json solution_to_json(const RecourseSolution& s) {
  json warnings = json::array();
  for (const auto& w : s.diagnostics.warnings) warnings.push_back(w);
  return {{"action", action_to_json(s.action)},
          {"cost", {{"c_s", s.cost.feature}, {"c_t", s.cost.time}, {"total", s.cost.total}}},
          {"counterfactual", instance_to_json(s.counterfactual)},
          {"probability", s.probability},
          {"feasible", s.feasible},
          {"diagnostics",
           {{"subsets_examined", s.diagnostics.subsets_examined},
            {"budget_filtered", s.diagnostics.budget_filtered},
            {"infeasible_subsets", s.diagnostics.infeasible_subsets},
            {"message", s.diagnostics.message},
            {"warnings", warnings}}}};
}

inline json frontier_to_json(const std::vector<FrontierPoint>& frontier) {
  json out = json::array();
  for (const auto& pt : frontier) {
    out.push_back({{"lambda", pt.lambda}, {"support_changed", pt.support_changed}, {"solution", solution_to_json(pt.solution)}});
  }
  return out;
}

inline json prediction_to_json(const Prediction& p) {
  return {{"score", p.score}, {"probability", p.probability}, {"label", p.label}};
}

inline json ced_report_to_json(const CedReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"variable", row.estimate.variable},
                    {"actionability", to_string(row.actionability)},
                    {"alpha", row.estimate.alpha},
                    {"ced", row.estimate.estimate},
                    {"stderr", row.estimate.std_error}});
  }
  return {{"alpha", r.alpha}, {"n", r.n}, {"seed", r.seed}, {"rows", rows}};
}

}  // namespace tcar
