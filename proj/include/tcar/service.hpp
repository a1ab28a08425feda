#pragma once

// Stateless JSON API over one fixed SCM. Routing lives in handle(), so the
// whole surface is testable without opening a socket; listen() binds it to
// cpp-httplib.

#include <cmath>
#include <string>
#include <utility>

#include "httplib.h"
#include "tcar/io.hpp"

namespace tcar {

struct ApiResponse {
  int status = 200;
  json body;
};

enum class ApiErrorCode { bad_request, infeasible, internal };

inline std::string_view to_string(ApiErrorCode c) {
  switch (c) {
    case ApiErrorCode::bad_request: return "bad_request";
    case ApiErrorCode::infeasible: return "infeasible";
    case ApiErrorCode::internal: return "internal";
  }
  return "internal";
}

inline ApiResponse api_error(ApiErrorCode code, const std::string& message, json extra = json::object()) {
  const int status = code == ApiErrorCode::bad_request ? 400 : code == ApiErrorCode::infeasible ? 422 : 500;
  extra["error"] = {{"code", to_string(code)}, {"message", message}};
  return {status, std::move(extra)};
}

inline constexpr std::size_t kMaxCedSamples = 1'000'000;

class Service {
 public:
  explicit Service(ScmFile file)
      : scm_(std::move(file.scm)), times_(std::move(file.response_times)), dag_(from_scm(scm_, times_)) {
    scm_.require_valid();
  }

  const Scm& scm() const { return scm_; }
  const CausalDag& dag() const { return dag_; }

  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) const {
    try {
      if (method == "GET" && path == "/api/health") return {200, {{"status", "ok"}}};
      if (method == "GET" && path == "/api/scm") return {200, describe()};
      if (method != "POST") return api_error(ApiErrorCode::bad_request, "no route for " + method + " " + path);

      json req;
      try {
        req = body.empty() ? json::object() : json::parse(body);
      } catch (const json::exception& e) {
        return api_error(ApiErrorCode::bad_request, std::string("malformed JSON: ") + e.what());
      }
      if (!req.is_object()) return api_error(ApiErrorCode::bad_request, "request body must be a JSON object");

      if (path == "/api/predict") return predict_route(req);
      if (path == "/api/counterfactual") return counterfactual_route(req);
      if (path == "/api/recourse") return recourse_route(req);
      if (path == "/api/frontier") return frontier_route(req);
      if (path == "/api/ced") return ced_route(req);
      if (path == "/api/random_individual") return random_individual_route(req);
      return api_error(ApiErrorCode::bad_request, "no route for POST " + path);
    } catch (const std::invalid_argument& e) {
      return api_error(ApiErrorCode::bad_request, e.what());
    } catch (const json::exception& e) {
      return api_error(ApiErrorCode::bad_request, e.what());
    } catch (const std::exception& e) {
      return api_error(ApiErrorCode::internal, e.what());
    }
  }

  // Registers the API routes and CORS headers.
  void bind(httplib::Server& server) const {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const auto out = handle(req.method, req.path, req.body);
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Get(R"(/api/.*)", forward);
    server.Post(R"(/api/.*)", forward);
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }

  bool listen(const std::string& host, int port) const {
    httplib::Server server;
    bind(server);
    return server.listen(host, port);
  }

 private:
  json describe() const {
    auto out = scm_to_json(scm_, times_);
    json edges = json::array();
    for (const auto& e : dag_.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"beta", e.beta}, {"tau", e.tau}});
    out["edges"] = edges;
    json var = json::object();
    for (const auto& [name, v] : variances(scm_)) {
      var[name] = {{"proper_variance", v.proper},
                   {"marginal_variance", v.marginal},
                   {"proper_sigma", std::sqrt(v.proper)},
                   {"marginal_sigma", std::sqrt(v.marginal)}};
    }
    out["variances"] = var;
    return out;
  }

  ApiResponse predict_route(const json& req) const {
    return {200, prediction_to_json(predict(scm_, instance_from_json(req.at("instance"))))};
  }

  ApiResponse counterfactual_route(const json& req) const {
    const auto x = instance_from_json(req.at("instance"));
    const auto a = req.contains("action") ? action_from_json(req.at("action")) : Action{};
    const auto cf = counterfactual(scm_, x, a);
    const auto p = predict(scm_, cf);
    return {200, {{"counterfactual", instance_to_json(cf)}, {"probability", p.probability}, {"label", p.label}}};
  }

  ApiResponse recourse_route(const json& req) const {
    const auto problem = recourse_problem_from_json(req, scm_, dag_);
    const auto sol = solve(problem);
    if (!sol.feasible) {
      return api_error(ApiErrorCode::infeasible, sol.diagnostics.message, {{"solution", solution_to_json(sol)}});
    }
    return {200, solution_to_json(sol)};
  }

  ApiResponse frontier_route(const json& req) const {
    if (!req.contains("lambdas") || !req.at("lambdas").is_array()) {
      return api_error(ApiErrorCode::bad_request, "request needs a 'lambdas' array");
    }
    std::vector<double> lambdas;
    for (const auto& l : req.at("lambdas")) lambdas.push_back(detail::number(l, "lambda"));
    const auto problem = recourse_problem_from_json(req, scm_, dag_);
    return {200, frontier_to_json(lambda_frontier(problem, lambdas))};
  }

  ApiResponse ced_route(const json& req) const {
    const double alpha = req.contains("alpha") ? detail::number(req.at("alpha"), "alpha") : 1.0;
    const double n = req.contains("n") ? detail::number(req.at("n"), "n") : 10000.0;
    const double seed = req.contains("seed") ? detail::number(req.at("seed"), "seed") : 42.0;
    if (!(n >= 2.0) || n > static_cast<double>(kMaxCedSamples) || n != std::floor(n)) {
      return api_error(ApiErrorCode::bad_request, "n must be an integer in [2, 1000000]");
    }
    if (!(seed >= 0.0) || seed != std::floor(seed)) return api_error(ApiErrorCode::bad_request, "seed must be a non-negative integer");
    const auto report = ced_table(scm_, alpha, static_cast<std::size_t>(n), static_cast<std::uint64_t>(seed));
    return {200, ced_report_to_json(report)};
  }

  ApiResponse random_individual_route(const json& req) const {
    const double seed = req.contains("seed") ? detail::number(req.at("seed"), "seed") : 0.0;
    if (!(seed >= 0.0) || seed != std::floor(seed)) return api_error(ApiErrorCode::bad_request, "seed must be a non-negative integer");
    const auto x = sample_unfavorable_instance(scm_, static_cast<std::uint64_t>(seed));
    return {200, {{"instance", instance_to_json(x)}, {"prediction", prediction_to_json(predict(scm_, x))}}};
  }

  Scm scm_;
  ResponseTimes times_;
  CausalDag dag_;
};

}  // namespace tcar
