#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tcar/bench.hpp"

using namespace tcar;

namespace {

// E[sigmoid(X + a) - sigmoid(X)] for X ~ N(0, 1) by composite Simpson on [-12, 12].
double two_node_ced_quadrature(double a) {
  const int n = 20000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
  auto f = [&](double x) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return phi * (1.0 / (1.0 + std::exp(-(x + a))) - 1.0 / (1.0 + std::exp(-x)));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Scm with_isolated_variable() {
  auto vars = chain_scm().variables();
  vars.push_back({"W", StructuralEquation{}, NoiseSpec::normal(0.0, 1.0), Actionability::actionable});
  return Scm(vars, chain_scm().target());
}

}  // namespace

TEST(GermanFixture, Structure) {
  const auto scm = german_scm();
  EXPECT_TRUE(scm.valid());
  EXPECT_EQ(scm.size(), 8u);
  EXPECT_EQ(scm.variable("G").actionability, Actionability::non_actionable);
  EXPECT_EQ(scm.variable("A").actionability, Actionability::non_actionable);
  EXPECT_EQ(scm.variable("D").actionability, Actionability::mutable_);
  for (const char* v : {"E", "J", "L", "I", "S"}) EXPECT_EQ(scm.variable(v).actionability, Actionability::actionable);
  EXPECT_DOUBLE_EQ(std::sqrt(variances(scm).at("S").proper), 2.0);
  EXPECT_EQ(scm.variable("A").equation.intercept, -35.0);
  EXPECT_EQ(scm.variable("I").equation.coefficients.at("J"), 5.0);
}

TEST(GermanFixture, Times) {
  const auto t = german_times();
  EXPECT_EQ(t.at({"E", "I"}), 5.0);
  EXPECT_EQ(t.at({"I", "S"}), 2.0);
  EXPECT_EQ(t.count({"G", "E"}), 0u);
  EXPECT_EQ(t.size(), 9u);
}

TEST(GermanFixture, DemoIndividualIsZeroNoiseUnfavorable) {
  const auto scm = german_scm();
  const auto x = german_demo_individual();
  const auto u = abduct(scm, x);
  EXPECT_EQ(u.at("A"), 34.75);
  for (const char* v : {"G", "E", "J", "L", "D", "I", "S"}) EXPECT_EQ(u.at(v), 0.0) << v;
  EXPECT_EQ(predict(scm, x).label, 0);
}

TEST(Ced, IsolatedVariableIsExactlyZero) {
  const auto e = ced(with_isolated_variable(), "W", 1.0, 5000, 3);
  EXPECT_EQ(e.estimate, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Ced, TwoNodeMatchesQuadrature) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto e = ced(two_node_scm(), "X", alpha, 200000, 11);
    const double want = two_node_ced_quadrature(alpha) / alpha;
    EXPECT_NEAR(e.estimate, want, 4.0 * e.std_error) << alpha;
    EXPECT_GT(e.std_error, 0.0);
  }
}

TEST(Ced, IndependentModeAgreesWithinErrors) {
  CedOptions opts;
  opts.pairing = CedPairing::independent;
  const auto ind = ced(two_node_scm(), "X", 1.0, 200000, 12, opts);
  const auto crn = ced(two_node_scm(), "X", 1.0, 200000, 12);
  EXPECT_GT(ind.std_error, crn.std_error);
  EXPECT_NEAR(ind.estimate, two_node_ced_quadrature(1.0), 4.0 * ind.std_error);
}

TEST(Ced, LabelModeIsUnbiased) {
  CedOptions opts;
  opts.outcome = CedOutcome::label;
  const auto e = ced(two_node_scm(), "X", 1.0, 200000, 13, opts);
  EXPECT_NEAR(e.estimate, two_node_ced_quadrature(1.0), 4.0 * e.std_error);
}

TEST(Ced, RejectsBadArguments) {
  EXPECT_THROW(ced(two_node_scm(), "X", 0.0, 100, 1), std::invalid_argument);
  EXPECT_THROW(ced(two_node_scm(), "X", 1.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(ced(two_node_scm(), "Q", 1.0, 100, 1), std::invalid_argument);
  EXPECT_THROW(ced_table(two_node_scm(), -1.0, 100, 1), std::invalid_argument);
}

TEST(CedTable, GermanSignPatternAndFlags) {
  const auto r = ced_table(german_scm(), 1.0, 10000, 42);
  ASSERT_EQ(r.rows.size(), 8u);
  for (const char* v : {"G", "A", "E", "J", "I", "S"}) EXPECT_GT(r.at(v).estimate, 0.0) << v;
  for (const char* v : {"L", "D"}) EXPECT_LT(r.at(v).estimate, 0.0) << v;
  EXPECT_FALSE(r.rows[0].actionable());
  EXPECT_EQ(r.rows[5].actionability, Actionability::mutable_);
  EXPECT_GT(r.at("E").estimate, r.at("I").estimate);
  EXPECT_GT(r.at("J").estimate, r.at("S").estimate);
}

TEST(CedTable, Deterministic) {
  EXPECT_EQ(ced_table(german_scm(), 1.0, 3000, 7), ced_table(german_scm(), 1.0, 3000, 7));
  CedOptions threaded;
  threaded.threads = 4;
  EXPECT_EQ(ced_table(german_scm(), 1.0, 3000, 7), ced_table(german_scm(), 1.0, 3000, 7, threaded));
}

TEST(CedTable, HalvingAlphaIsStable) {
  // A wider smoothing scale (chain SCM) keeps the finite difference in the
  // derivative regime for both step sizes.
  const auto a = ced_table(chain_scm(0.5, 0.5), 0.2, 50000, 5);
  const auto b = ced_table(chain_scm(0.5, 0.5), 0.1, 50000, 5);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i].estimate;
    const auto& y = b.rows[i].estimate;
    EXPECT_NEAR(x.estimate, y.estimate, 3.0 * std::hypot(x.std_error, y.std_error) + 0.01 * std::abs(x.estimate))
        << x.variable;
  }
}

TEST(CedTable, SmallStepMatchesEffectTimesAverageSlope) {
  const auto scm = chain_scm(0.5, 0.5);
  const auto dag = from_scm(scm);
  const auto ds = sample(scm, 50000, 9);
  double slope = 0.0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double p = ds.at(r, ds.column_index("Y_prob"));
    slope += p * (1.0 - p);
  }
  slope /= static_cast<double>(ds.rows());
  const auto table = ced_table(scm, 0.01, 50000, 9);
  for (const auto& row : table.rows) {
    const auto& e = row.estimate;
    const double sigma = std::sqrt(scm.variable(e.variable).noise.variance());
    const double want = total_causal_effect(dag, e.variable, scm.target().name) * sigma * slope;
    EXPECT_NEAR(e.estimate, want, 3.0 * e.std_error + 0.01 * std::abs(want)) << e.variable;
  }
}

TEST(CedOutput, CsvAndText) {
  const auto r = ced_table(chain_scm(), 1.0, 100, 42);
  std::ostringstream csv;
  write_ced_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# seed=42 n=100 alpha=1");
  std::getline(in, line);
  EXPECT_EQ(line, "variable,actionable,alpha,ced,stderr");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("X,actionable,1,", 0), 0u);
  std::ostringstream text;
  write_ced_text(text, r);
  EXPECT_NE(text.str().find("Z          mutable"), std::string::npos);
}

TEST(Pairplot, CommonRandomNumbersAndOrdering) {
  const auto sets = pairplot_data(german_scm(), 10000, 42, {{"E", 1.0}, {"I", 1.0}});
  ASSERT_EQ(sets.size(), 3u);
  EXPECT_EQ(sets[1].label, "do_E");
  const auto l0 = sets[0].data.column("L");
  const auto a0 = sets[0].data.column("A");
  for (std::size_t s = 1; s < 3; ++s) {
    EXPECT_EQ(sets[s].data.column("L"), l0);
    EXPECT_EQ(sets[s].data.column("A"), a0);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  EXPECT_GT(mean(sets[1].data.column("Y_prob")), mean(sets[2].data.column("Y_prob")));
  EXPECT_GT(mean(sets[2].data.column("Y_prob")), mean(sets[0].data.column("Y_prob")));
}

TEST(Pairplot, CsvLayout) {
  std::ostringstream os;
  pairplot_export(os, german_scm(), 5, 1, {{"E", 1.0}, {"I", 1.0}});
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# seed=1 n=5");
  std::getline(in, line);
  EXPECT_EQ(line, "distribution,A,E,I,L,Y_prob");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 15u);

  std::ostringstream all;
  pairplot_export(all, german_scm(), 2, 1, {{"E", 1.0}}, true);
  EXPECT_NE(all.str().find("distribution,G,A,E,J,L,D,I,S,Y_prob\n"), std::string::npos);
}
