#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "generators.hpp"
#include "linalg_oracle.hpp"
#include "tcar/bench.hpp"
#include "tcar/csv.hpp"
#include "tcar/scm.hpp"

using namespace tcar;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Sample, ShapeAndColumns) {
  const auto ds = sample(german_scm(), 2500, 1);
  EXPECT_EQ(ds.rows(), 2500u);
  EXPECT_EQ(ds.columns, (std::vector<std::string>{"G", "A", "E", "J", "L", "D", "I", "S", "Y_prob", "Y_label"}));
  EXPECT_EQ(ds.seed, 1u);
}

TEST(Sample, ZeroRowsRejected) { EXPECT_THROW(sample(german_scm(), 0, 1), std::invalid_argument); }

TEST(Sample, StandardNormalMean) { EXPECT_NEAR(mean(sample(two_node_scm(), 100000, 4).column("X")), 0.0, 0.02); }

TEST(Sample, GermanAgeIsCentered) { EXPECT_NEAR(mean(sample(german_scm(), 100000, 4).column("A")), 0.0, 0.5); }

TEST(Sample, Deterministic) {
  const auto a = sample(german_scm(), 3000, 99);
  const auto b = sample(german_scm(), 3000, 99);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.noise, b.noise);
  EXPECT_NE(a.data, sample(german_scm(), 3000, 100).data);
}

TEST(Sample, IndependentOfThreadCount) {
  const auto one = sample(german_scm(), 5000, 7, {1, true});
  for (unsigned t : {2u, 3u, 8u}) {
    const auto many = sample(german_scm(), 5000, 7, {t, true});
    EXPECT_EQ(one.data, many.data) << t;
    EXPECT_EQ(one.noise, many.noise) << t;
  }
}

TEST(Sample, PrefixStableAcrossSizes) {
  const auto small = sample(german_scm(), 1500, 5);
  const auto big = sample(german_scm(), 4000, 5);
  for (std::size_t i = 0; i < small.data.size(); ++i) ASSERT_EQ(small.data[i], big.data[i]);
}

TEST(Sample, ProbabilityColumnIsSigmoidOfScore) {
  const auto scm = german_scm();
  const auto ds = sample(scm, 500, 8);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto p = predict(scm, ds.instance(r));
    EXPECT_EQ(ds.at(r, ds.column_index("Y_prob")), p.probability);
    const double label = ds.at(r, ds.column_index("Y_label"));
    EXPECT_TRUE(label == 0.0 || label == 1.0);
  }
}

TEST(Sample, LabelFrequencyTracksProbability) {
  const auto ds = sample(two_node_scm(), 200000, 12);
  EXPECT_NEAR(mean(ds.column("Y_label")), mean(ds.column("Y_prob")), 0.005);
}

TEST(Sample, AbductRecoversStoredNoise) {
  const auto scm = german_scm();
  const auto ds = sample(scm, 1000, 17);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto u = abduct(scm, ds.instance(r));
    for (std::size_t k = 0; k < ds.variable_count(); ++k) ASSERT_EQ(u.at(ds.columns[k]), ds.noise_at(r, k));
  }
}

TEST(Sample, CommonRandomNumbersUnderShift) {
  // Intercept-shifted SCM sampled with the same seed reuses every draw.
  const auto scm = german_scm();
  const auto a = sample(scm, 2000, 3);
  const auto b = sample(intervene(scm, Action{{{"E", 1.0}}}), 2000, 3);
  const auto ia = a.column_index("A");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    EXPECT_EQ(a.at(r, ia), b.at(r, ia));
    EXPECT_NEAR(a.noise_at(r, 2), b.noise_at(r, 2), 1e-12);
    EXPECT_NEAR(b.at(r, 2) - a.at(r, 2), 1.0, 1e-12);
  }
}

TEST(SampleProperty, ScoreShiftEqualsTotalEffect) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const auto scm = gen::random_scm(rng, {2 + static_cast<std::size_t>(trial % 6), 0.5});
    const std::size_t j = static_cast<std::size_t>(trial) % scm.size();
    const double delta = 0.75;
    const auto base = sample(scm, 2000, 100 + trial);
    const auto moved = sample(intervene(scm, Action{{{scm.variables()[j].name, delta}}}), 2000, 100 + trial);
    double sum = 0.0;
    for (std::size_t r = 0; r < base.rows(); ++r) {
      sum += predict(scm, moved.instance(r)).score - predict(scm, base.instance(r)).score;
    }
    const double expect = oracle::score_effect(scm, j) * delta;
    EXPECT_NEAR(sum / 2000.0, expect, 1e-8 * std::max(1.0, std::abs(expect)));
  }
}

TEST(SampleProperty, EmpiricalCovarianceMatchesAnalytic) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto scm = gen::random_scm(rng, {4, 0.6});
    const auto ds = sample(scm, 100000, 500 + trial);
    const auto v = variances(scm);
    for (const auto& var : scm.variables()) {
      const auto col = ds.column(var.name);
      const double m = mean(col);
      double s = 0.0;
      for (double x : col) s += (x - m) * (x - m);
      const double emp = s / static_cast<double>(col.size() - 1);
      EXPECT_NEAR(emp / v.at(var.name).marginal, 1.0, 0.05) << var.name;
    }
  }
}

TEST(Csv, DatasetHeaderAndPrecision) {
  const auto ds = sample(chain_scm(), 3, 1);
  std::ostringstream os;
  write_dataset_csv(os, ds, "seed=1");
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# seed=1");
  std::getline(in, line);
  EXPECT_EQ(line, "X,Y,Z,Y_prob,Y_label");
  std::getline(in, line);
  const double x = std::stod(line.substr(0, line.find(',')));
  EXPECT_EQ(x, ds.at(0, 0));
}

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}
