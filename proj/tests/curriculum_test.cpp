#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmgn/curriculum.hpp"
#include "cmgn/error.hpp"

using namespace cmgn;

namespace {
CosineBatch positives(std::vector<double> c) {
  CosineBatch b{Matrix(c.size(), 2), std::vector<std::size_t>(c.size(), 0)};
  for (std::size_t i = 0; i < c.size(); ++i) b.cosines(i, 0) = c[i];
  return b;
}
}  // namespace

TEST(BatchStatistic, Mean) {
  EXPECT_NEAR(batch_statistic(positives({0.2, 0.4, 0.6}), {}, StatisticKind::MeanPositiveCosine), 0.4, 1e-15);
}

TEST(BatchStatistic, ModeOfIdenticalSamples) {
  auto b = positives({0.35, 0.35, 0.35, 0.35});
  EXPECT_NEAR(batch_statistic(b, {}, StatisticKind::ModePositiveCosine), 0.355, 1e-12);
}

TEST(BatchStatistic, ModeTiesGoLow) {
  auto b = positives({0.105, 0.105, 0.505, 0.505, -0.2});
  EXPECT_NEAR(batch_statistic(b, {}, StatisticKind::ModePositiveCosine), 0.105, 1e-12);
}

TEST(BatchStatistic, ModeAtTheEdges) {
  EXPECT_NEAR(batch_statistic(positives({1.0 - 1e-7}), {}, StatisticKind::ModePositiveCosine), 0.995, 1e-12);
  EXPECT_NEAR(batch_statistic(positives({-1.0 + 1e-7}), {}, StatisticKind::ModePositiveCosine), -0.995, 1e-12);
}

TEST(BatchStatistic, MeanProbability) {
  std::vector<double> p{0.5, 0.5};
  EXPECT_EQ(batch_statistic(positives({0.1, 0.9}), p, StatisticKind::MeanGtProbability), 0.5);
}

TEST(BatchStatistic, EmptyBatch) {
  EXPECT_THROW(batch_statistic(positives({}), {}, StatisticKind::MeanPositiveCosine), ValidationError);
}

TEST(BatchStatistic, Names) {
  for (auto k : {StatisticKind::MeanPositiveCosine, StatisticKind::ModePositiveCosine,
                 StatisticKind::MeanGtProbability})
    EXPECT_EQ(parse_statistic_kind(to_string(k)), k);
  for (auto p : {MomentumPlacement::History, MomentumPlacement::OnStatistic})
    EXPECT_EQ(parse_momentum_placement(to_string(p)), p);
  EXPECT_THROW(parse_statistic_kind("median"), ValidationError);
}

TEST(UpdateT, FirstStep) {
  auto s = update_t(CurriculumState{}, 0.5);
  EXPECT_NEAR(s.t, 0.005, 1e-15);
  EXPECT_EQ(s.iteration_k, 1u);
}

TEST(UpdateT, StatisticPlacement) {
  CurriculumState st;
  st.placement = MomentumPlacement::OnStatistic;
  EXPECT_NEAR(update_t(st, 0.5).t, 0.495, 1e-15);
}

TEST(UpdateT, GeometricContraction) {
  CurriculumState s;
  for (int k = 1; k <= 10000; ++k) {
    s = update_t(s, 0.8);
    ASSERT_NEAR(std::abs(s.t - 0.8), 0.8 * std::pow(0.99, k), 1e-12) << k;
  }
}

TEST(UpdateT, ReplayIsBitExact) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.2, 0.9);
  std::vector<double> r(500), t(500);
  CurriculumState s;
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = u(rng);
    s = update_t(s, r[k]);
    t[k] = s.t;
  }
  double x = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    x = (1.0 - 0.99) * r[k] + 0.99 * x;
    EXPECT_EQ(x, t[k]);
  }
}

TEST(UpdateT, RejectsNonFinite) {
  EXPECT_THROW(update_t(CurriculumState{}, std::nan("")), NumericalError);
}

TEST(CurriculumState, Validate) {
  CurriculumState s;
  s.momentum = 1.5;
  EXPECT_THROW(s.validate(), ValidationError);
}
