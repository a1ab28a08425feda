#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "tcar/bench.hpp"
#include "tcar/cost.hpp"

using namespace tcar;

namespace {

CostSpec raw_spec(double p, Normalization n) {
  CostSpec s;
  s.p = p;
  s.normalization = n;
  return s;
}

}  // namespace

TEST(CostSpecParse, Aliases) {
  EXPECT_EQ(normalization_from_string("proper"), Normalization::proper_sigma);
  EXPECT_EQ(normalization_from_string("marginal"), Normalization::marginal_sigma);
  EXPECT_EQ(normalization_from_string("none"), Normalization::none);
  EXPECT_EQ(normalization_from_string(to_string(Normalization::marginal_sigma)), Normalization::marginal_sigma);
  EXPECT_EQ(time_variant_from_string("lp"), TimeVariant::longest_path);
  EXPECT_EQ(time_variant_from_string("avg"), TimeVariant::weighted_average_raw);
  EXPECT_EQ(time_variant_from_string("avg-abs"), TimeVariant::weighted_average_abs);
  EXPECT_EQ(time_variant_from_string(to_string(TimeVariant::longest_path)), TimeVariant::longest_path);
  EXPECT_THROW(normalization_from_string("zscore"), std::invalid_argument);
  EXPECT_THROW(time_variant_from_string("mean"), std::invalid_argument);
}

TEST(CostSpecValidate, RejectsOutOfRange) {
  CostSpec s;
  s.p = 0.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.p = 1;
  s.lambda = -1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.lambda = 0;
  s.time_budget = -0.1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.time_budget = 0.0;
  EXPECT_NO_THROW(s.validate());
}

TEST(CostSpecDefaults, ExperimentAndDemo) {
  const auto e = experiment_cost_spec();
  EXPECT_EQ(e.p, 1.0);
  EXPECT_EQ(e.normalization, Normalization::proper_sigma);
  EXPECT_EQ(e.lambda, 0.0);
  const auto d = demo_cost_spec();
  EXPECT_EQ(d.p, 2.0);
  EXPECT_EQ(d.time_variant, TimeVariant::weighted_average_abs);
}

TEST(FeatureCost, Examples) {
  const auto var = variances(german_scm());
  EXPECT_EQ(feature_cost(Action{}, experiment_cost_spec(), var), 0.0);
  EXPECT_DOUBLE_EQ(feature_cost(Action{{{"S", 2.0}}}, experiment_cost_spec(), var), 1.0);
  EXPECT_DOUBLE_EQ(feature_cost(Action{{{"E", 3.0}, {"J", 4.0}}}, raw_spec(2, Normalization::none), var), 5.0);
  EXPECT_DOUBLE_EQ(feature_cost(Action{{{"E", std::sqrt(123.75)}}}, raw_spec(1, Normalization::marginal_sigma), var),
                   1.0);
}

TEST(FeatureCost, MissingOrZeroNormalizer) {
  VarianceTable var{{"X", {0.0, 0.0}}};
  EXPECT_THROW(feature_cost(Action{{{"X", 1.0}}}, experiment_cost_spec(), var), std::invalid_argument);
  EXPECT_THROW(feature_cost(Action{{{"Q", 1.0}}}, experiment_cost_spec(), var), std::invalid_argument);
  EXPECT_EQ(feature_cost(Action{{{"Q", 1.0}}}, raw_spec(1, Normalization::none), var), 1.0);
}

TEST(LpNorm, LargeExponentIsStable) {
  const std::vector<double> v{1e200, 1e200};
  EXPECT_NEAR(lp_norm(v, 3.0) / 1e200, std::cbrt(2.0), 1e-12);
  EXPECT_NEAR(lp_norm(std::vector<double>{3, 4}, 1.5), std::pow(std::pow(3, 1.5) + std::pow(4, 1.5), 1 / 1.5), 1e-12);
}

TEST(TimeCost, ToyGraphSupportSup) {
  CostSpec s;
  s.time_variant = TimeVariant::longest_path;
  const std::vector<std::string> support{"W", "X"};
  EXPECT_EQ(time_cost(toy_time_graph(true), support, "Y", s), 3.0);
  EXPECT_EQ(time_cost(toy_time_graph(false), support, "Y", s), 9.0);
}

TEST(TimeCost, GermanVariants) {
  const auto dag = german_dag();
  CostSpec s;
  s.time_variant = TimeVariant::weighted_average_raw;
  const std::vector<std::string> e{"E"};
  EXPECT_NEAR(time_cost(dag, e, "Y", s), 3148.0 / 408.0, 1e-12);
  s.time_variant = TimeVariant::longest_path;
  EXPECT_EQ(time_cost(dag, e, "Y", s), 8.0);
  const std::vector<std::string> y{"Y"};
  EXPECT_EQ(time_cost(dag, y, "Y", s), 0.0);
  EXPECT_THROW(time_cost(dag, std::vector<std::string>{}, "Y", s), std::invalid_argument);
}

TEST(TimeCost, UnreachableMembersAreSkipped) {
  const CausalDag dag({"a", "b", "y"}, {{"a", "y", 1, 2}});
  CostSpec s;
  const std::vector<std::string> support{"a", "b"};
  const auto d = time_cost_detail(dag, support, "y", s);
  EXPECT_EQ(d.value, 2.0);
  EXPECT_EQ(d.unreachable, (std::vector<std::string>{"b"}));
}

TEST(TotalCost, Examples) {
  const auto scm = german_scm();
  const auto var = variances(scm);
  const auto dag = german_dag();
  CostSpec s = experiment_cost_spec();
  s.lambda = 1.0;
  s.time_variant = TimeVariant::weighted_average_raw;
  const auto b = total_cost(Action{{{"E", 1.0}}}, dag, "Y", s, var);
  EXPECT_NEAR(b.total, 1.0 + 3148.0 / 408.0, 1e-12);
  EXPECT_DOUBLE_EQ(b.feature, 1.0);

  const auto empty = total_cost(Action{}, dag, "Y", s, var);
  EXPECT_EQ(empty.feature, 0.0);
  EXPECT_EQ(empty.time, 0.0);
  EXPECT_EQ(empty.total, 0.0);

  s.lambda = 0.0;
  const Action a{{{"I", 2.5}, {"E", -1.0}}};
  EXPECT_EQ(total_cost(a, dag, "Y", s, var).total, feature_cost(a, s, var));
}

TEST(CostProperty, HomogeneityAndTimeIndependence) {
  std::mt19937_64 rng(201);
  const auto scm = german_scm();
  const auto var = variances(scm);
  const auto dag = german_dag();
  const std::vector<std::string> names{"E", "J", "L", "I", "S"};
  std::uniform_real_distribution<double> mag(0.1, 5.0);
  std::uniform_real_distribution<double> pexp(1.0, 4.0);
  std::uniform_real_distribution<double> kdist(1.01, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    CostSpec s;
    s.p = trial % 3 == 0 ? 1.0 : pexp(rng);
    s.lambda = mag(rng);
    s.time_variant = static_cast<TimeVariant>(trial % 3);
    Action a;
    for (const auto& n : names) {
      if (rng() % 2) a.shifts[n] = (rng() % 2 ? 1 : -1) * mag(rng);
    }
    if (a.empty()) a.shifts["E"] = 1.0;
    const double k = kdist(rng);
    Action scaled = a;
    for (auto& [n, d] : scaled.shifts) d *= k;
    const auto b0 = total_cost(a, dag, "Y", s, var);
    const auto b1 = total_cost(scaled, dag, "Y", s, var);
    EXPECT_NEAR(b1.feature, k * b0.feature, 1e-9 * b1.feature);
    EXPECT_EQ(b1.time, b0.time);
    EXPECT_GT(b1.total, b0.total);
  }
}

TEST(CostProperty, NormalizedCostIsUnitInvariant) {
  std::mt19937_64 rng(203);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double sigma = u(rng), delta = u(rng), other = u(rng), s = u(rng);
    VarianceTable a{{"x", {sigma * sigma, 2 * sigma * sigma}}, {"y", {1.0, 1.0}}};
    VarianceTable b{{"x", {s * s * sigma * sigma, 2 * s * s * sigma * sigma}}, {"y", {1.0, 1.0}}};
    for (auto norm : {Normalization::proper_sigma, Normalization::marginal_sigma}) {
      const auto spec = raw_spec(1.0 + static_cast<double>(trial % 3), norm);
      const double ca = feature_cost(Action{{{"x", delta}, {"y", other}}}, spec, a);
      const double cb = feature_cost(Action{{{"x", s * delta}, {"y", other}}}, spec, b);
      EXPECT_NEAR(ca, cb, 1e-12 * ca);
    }
  }
}
