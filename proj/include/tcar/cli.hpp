#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation failure or
// infeasible recourse, 2 usage error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tcar/bench.hpp"
#include "tcar/csv.hpp"
#include "tcar/io.hpp"
#include "tcar/recourse.hpp"
#include "tcar/service.hpp"

namespace tcar::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

namespace detail {

struct RecourseFlags {
  std::string instance_path;
  bool random_individual = false;
  double lambda = 0.0;
  std::optional<double> time_budget;
  double p = 2.0;
  std::string norm = "proper";
  std::string variant = "avg-abs";
  std::size_t k = 2;
};

inline void add_recourse_flags(CLI::App* cmd, RecourseFlags& f, bool with_lambda) {
  auto* inst = cmd->add_option("--instance", f.instance_path, "JSON file mapping variable -> value");
  auto* rnd = cmd->add_flag("--random-individual", f.random_individual, "sample an unfavorable individual (uses --seed)");
  inst->excludes(rnd);
  if (with_lambda) cmd->add_option("--lambda", f.lambda, "weight of the time cost")->required()->check(CLI::NonNegativeNumber);
  cmd->add_option("--time-budget", f.time_budget, "maximum admissible time cost")->check(CLI::NonNegativeNumber);
  cmd->add_option("--p", f.p, "exponent of the feature-cost norm")->check(CLI::Range(1.0, 1e9));
  cmd->add_option("--norm", f.norm, "feature normalization")->check(CLI::IsMember({"proper", "marginal", "none"}));
  cmd->add_option("--variant", f.variant, "time-cost variant")->check(CLI::IsMember({"lp", "avg", "avg-abs"}));
  cmd->add_option("-k", f.k, "maximum support size")->check(CLI::PositiveNumber);
}

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file '" + path + "'");
  try {
    return instance_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed instance file '" + path + "': " + e.what());
  }
}

inline RecourseProblem make_problem(const RecourseFlags& f, const ScmFile& file, std::uint64_t seed) {
  if (f.instance_path.empty() && !f.random_individual) {
    throw CLI::RequiredError("--instance or --random-individual");
  }
  const auto dag = from_scm(file.scm, file.response_times);
  const auto x = f.random_individual ? sample_unfavorable_instance(file.scm, seed) : read_instance(f.instance_path);
  RecourseProblem p{file.scm, dag, x, demo_cost_spec()};
  p.cost.lambda = f.lambda;
  p.cost.p = f.p;
  p.cost.time_budget = f.time_budget;
  p.cost.normalization = normalization_from_string(f.norm);
  p.cost.time_variant = time_variant_from_string(f.variant);
  p.max_support = f.k;
  return p;
}

inline std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("--lambdas", "'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--lambdas", "empty list");
  return out;
}

}  // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-aware causal algorithmic recourse toolkit", "tcar"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string scm_path;
  std::string out_path;
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--scm", scm_path, "SCM definition file (default: built-in German-Credit SCM)");
  app.add_option("--out", out_path, "write output to this file instead of stdout");

  auto* validate_cmd = app.add_subcommand("validate", "check an SCM definition");

  std::size_t sample_n = 0;
  auto* sample_cmd = app.add_subcommand("sample", "draw an observational dataset as CSV");
  sample_cmd->add_option("--n", sample_n, "number of rows")->required()->check(CLI::PositiveNumber);

  double ced_alpha = 1.0;
  std::size_t ced_n = 10000;
  std::string ced_format = "text";
  bool ced_independent = false;
  bool ced_label = false;
  auto* ced_cmd = app.add_subcommand("ced", "causal effect derivative table");
  ced_cmd->add_option("--alpha", ced_alpha, "intervention size in proper stddevs")->check(CLI::PositiveNumber);
  ced_cmd->add_option("--n", ced_n, "samples per dataset")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  ced_cmd->add_option("--format", ced_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  ced_cmd->add_flag("--independent", ced_independent, "draw the shifted dataset with independent noise");
  ced_cmd->add_flag("--label-mode", ced_label, "average sampled labels instead of probabilities");

  std::string path_from;
  std::string path_to;
  std::size_t path_cap = kDefaultPathCap;
  auto* paths_cmd = app.add_subcommand("paths", "enumerate directed paths as CSV");
  paths_cmd->add_option("--from", path_from, "source node")->required();
  paths_cmd->add_option("--to", path_to, "destination node (default: target)");
  paths_cmd->add_option("--cap", path_cap, "maximum number of paths")->check(CLI::PositiveNumber);

  std::string predict_instance;
  auto* predict_cmd = app.add_subcommand("predict", "score an instance");
  predict_cmd->add_option("--instance", predict_instance, "instance JSON file")->required();

  std::string cf_instance;
  std::string cf_action;
  auto* cf_cmd = app.add_subcommand("counterfactual", "counterfactual of an additive action");
  cf_cmd->add_option("--instance", cf_instance, "instance JSON file")->required();
  cf_cmd->add_option("--action", cf_action, "action JSON file (name -> shift)")->required();

  detail::RecourseFlags rec;
  auto* recourse_cmd = app.add_subcommand("recourse", "minimal-cost recourse for one individual");
  detail::add_recourse_flags(recourse_cmd, rec, true);

  detail::RecourseFlags fr;
  std::string fr_lambdas;
  auto* frontier_cmd = app.add_subcommand("frontier", "recourse solutions over a lambda sweep");
  detail::add_recourse_flags(frontier_cmd, fr, false);
  frontier_cmd->add_option("--lambdas", fr_lambdas, "comma-separated lambda values")->required();

  std::size_t pp_n = 10000;
  double pp_alpha = 1.0;
  std::string pp_vars = "E,I";
  bool pp_all = false;
  auto* pairplot_cmd = app.add_subcommand("pairplot", "observational vs interventional samples (long CSV)");
  pairplot_cmd->add_option("--n", pp_n, "rows per distribution")->check(CLI::PositiveNumber);
  pairplot_cmd->add_option("--alpha", pp_alpha, "intervention size in proper stddevs")->check(CLI::PositiveNumber);
  pairplot_cmd->add_option("--vars", pp_vars, "comma-separated intervened variables");
  pairplot_cmd->add_flag("--all-columns", pp_all, "emit every variable instead of A,E,I,L");

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "run the JSON API");
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", host, "bind address");

  std::vector<const char*> argv{"tcar"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  std::unique_ptr<std::ofstream> file_out;
  if (!out_path.empty()) {
    file_out = std::make_unique<std::ofstream>(out_path);
    if (!*file_out) {
      err << "error: cannot write '" << out_path << "'\n";
      return kUsage;
    }
  }
  std::ostream& os = file_out ? *file_out : out;

  try {
    ScmFile file = scm_path.empty() ? ScmFile{german_scm(), german_times()} : load_scm_file(scm_path);

    if (validate_cmd->parsed()) {
      const auto& report = file.scm.report();
      if (!report.ok()) {
        err << "invalid SCM:\n";
        for (const auto& i : report.issues) {
          err << "  " << to_string(i.kind) << (i.variable.empty() ? "" : " [" + i.variable + "]") << ": " << i.message
              << '\n';
        }
        return kFailure;
      }
      from_scm(file.scm, file.response_times);
      os << "ok: " << file.scm.size() << " variables, order";
      for (const auto& n : topological_order(file.scm)) os << ' ' << n;
      os << '\n';
      return kOk;
    }

    file.scm.require_valid();

    if (sample_cmd->parsed()) {
      const auto ds = sample(file.scm, sample_n, seed, {1, false});
      write_dataset_csv(os, ds, "seed=" + std::to_string(seed) + " n=" + std::to_string(sample_n));
      return kOk;
    }
    if (ced_cmd->parsed()) {
      CedOptions opts;
      opts.pairing = ced_independent ? CedPairing::independent : CedPairing::common_random_numbers;
      opts.outcome = ced_label ? CedOutcome::label : CedOutcome::probability;
      const auto report = ced_table(file.scm, ced_alpha, ced_n, seed, opts);
      if (ced_format == "csv") {
        write_ced_csv(os, report);
      } else {
        write_ced_text(os, report);
      }
      return kOk;
    }
    if (paths_cmd->parsed()) {
      const auto dag = from_scm(file.scm, file.response_times);
      const auto to = path_to.empty() ? file.scm.target().name : path_to;
      write_paths_csv(os, enumerate_paths(dag, path_from, to, path_cap));
      return kOk;
    }
    if (predict_cmd->parsed()) {
      os << prediction_to_json(predict(file.scm, detail::read_instance(predict_instance))).dump(2) << '\n';
      return kOk;
    }
    if (cf_cmd->parsed()) {
      std::ifstream in(cf_action);
      if (!in) throw std::invalid_argument("cannot open action file '" + cf_action + "'");
      const auto cf = counterfactual(file.scm, detail::read_instance(cf_instance), action_from_json(json::parse(in)));
      const auto p = predict(file.scm, cf);
      os << json{{"counterfactual", instance_to_json(cf)}, {"probability", p.probability}, {"label", p.label}}.dump(2)
         << '\n';
      return kOk;
    }
    if (recourse_cmd->parsed()) {
      const auto sol = solve(detail::make_problem(rec, file, seed));
      os << solution_to_json(sol).dump(2) << '\n';
      if (!sol.feasible) {
        err << "infeasible: " << sol.diagnostics.message << '\n';
        return kFailure;
      }
      return kOk;
    }
    if (frontier_cmd->parsed()) {
      const auto lambdas = detail::parse_lambdas(fr_lambdas);
      os << frontier_to_json(lambda_frontier(detail::make_problem(fr, file, seed), lambdas)).dump(2) << '\n';
      return kOk;
    }
    if (pairplot_cmd->parsed()) {
      std::vector<std::pair<std::string, double>> interventions;
      std::stringstream ss(pp_vars);
      std::string v;
      while (std::getline(ss, v, ',')) {
        if (!v.empty()) interventions.emplace_back(v, pp_alpha);
      }
      pairplot_export(os, file.scm, pp_n, seed, interventions, pp_all);
      return kOk;
    }
    if (serve_cmd->parsed()) {
      Service service(std::move(file));
      err << "listening on http://" << host << ':' << port << '\n';
      if (!service.listen(host, port)) {
        err << "error: cannot bind " << host << ':' << port << '\n';
        return kFailure;
      }
      return kOk;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace tcar::cli
