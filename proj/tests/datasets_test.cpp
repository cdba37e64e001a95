#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cmgn/datasets.hpp"
#include "cmgn/error.hpp"

using namespace cmgn;

namespace {
std::filesystem::path tmp(const char* name) { return std::filesystem::temp_directory_path() / name; }
}  // namespace

TEST(Generate, NoiseFreeSamplesSitOnTheCenter) {
  SyntheticSpec s;
  s.noise_sigma = 0.0;
  auto ds = generate(s);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t first = ds.labels[i] * s.samples_per_class;
    for (std::size_t k = 0; k < s.input_dim; ++k) EXPECT_EQ(ds.inputs(i, k), ds.inputs(first, k));
    EXPECT_NEAR(norm2(ds.inputs.row(i)), 1.0, 1e-15);
  }
}

TEST(Generate, Deterministic) {
  SyntheticSpec s;
  EXPECT_EQ(generate(s), generate(s));
  auto t = s;
  t.seed = 2;
  EXPECT_NE(generate(s), generate(t));
}

TEST(Generate, SplitLayout) {
  SyntheticSpec s;
  s.samples_per_class = 10;
  s.holdout_fraction = 0.3;
  auto ds = generate(s);
  EXPECT_EQ(ds.size(), 100u);
  EXPECT_EQ(ds.indices(Split::Holdout).size(), 30u);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.labels[i], i / 10);
    EXPECT_EQ(ds.splits[i], (i % 10) >= 7 ? Split::Holdout : Split::Train);
  }
  EXPECT_NO_THROW(ds.validate(10));
}

TEST(Generate, NearestCenterSeparates) {
  SyntheticSpec s;
  s.noise_sigma = 0.1;
  auto ds = generate(s);
  auto clean = s;
  clean.noise_sigma = 0.0;
  auto centers = generate(clean);  // same seed, same centers
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < s.num_classes; ++c) {
      double d = 0.0;
      for (std::size_t k = 0; k < s.input_dim; ++k) {
        const double diff = ds.inputs(i, k) - centers.inputs(c * s.samples_per_class, k);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    correct += best == ds.labels[i];
  }
  EXPECT_GE(double(correct) / ds.size(), 0.99);
}

TEST(Generate, InvalidSpec) {
  SyntheticSpec s;
  s.num_classes = 1;
  EXPECT_THROW(generate(s), ValidationError);
  s = SyntheticSpec{};
  s.holdout_fraction = 1.0;
  EXPECT_THROW(generate(s), ValidationError);
}

TEST(MakePairs, MinimalCase) {
  LabeledDataset ds;
  ds.inputs = Matrix(4, 2, 1.0);
  ds.labels = {0, 0, 1, 1};
  ds.splits = {Split::Holdout, Split::Holdout, Split::Holdout, Split::Holdout};
  auto pairs = make_pairs(ds, 1, 3);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_TRUE(pairs[0].same);
  EXPECT_FALSE(pairs[1].same);
  EXPECT_EQ(ds.labels[pairs[0].a], ds.labels[pairs[0].b]);
  EXPECT_NE(ds.labels[pairs[1].a], ds.labels[pairs[1].b]);
}

TEST(MakePairs, UsesOnlyHoldoutAndIsDeterministic) {
  auto ds = generate(SyntheticSpec{});
  auto pairs = make_pairs(ds, 300, 9);
  EXPECT_EQ(pairs, make_pairs(ds, 300, 9));
  ASSERT_EQ(pairs.size(), 600u);
  for (const auto& p : pairs) {
    EXPECT_EQ(ds.splits[p.a], Split::Holdout);
    EXPECT_EQ(ds.splits[p.b], Split::Holdout);
    EXPECT_EQ(p.same, ds.labels[p.a] == ds.labels[p.b]);
  }
}

TEST(MakePairs, InsufficientHoldout) {
  LabeledDataset ds;
  ds.inputs = Matrix(3, 2, 1.0);
  ds.labels = {0, 1, 1};
  ds.splits = {Split::Train, Split::Holdout, Split::Train};
  EXPECT_THROW(make_pairs(ds, 1, 1), ValidationError);
}

TEST(Csv, RoundTrip) {
  SyntheticSpec s;
  s.samples_per_class = 30;
  auto ds = generate(s);
  const auto p = tmp("cmgn_ds_test.csv");
  save_csv(ds, p);
  EXPECT_EQ(load_csv(p), ds);
  std::filesystem::remove(p);
}

TEST(Csv, HeaderMismatch) {
  const auto p = tmp("cmgn_ds_bad_header.csv");
  std::ofstream(p) << "a,b,label,split\n0.1,0.2,0,train\n";
  EXPECT_THROW(load_csv(p), ParseError);
  std::filesystem::remove(p);
}

TEST(Csv, MalformedRowCarriesLineNumber) {
  const auto p = tmp("cmgn_ds_bad_row.csv");
  std::ofstream(p) << "x0,x1,label,split\n0.1,0.2,0,train\n0.3,oops,1,holdout\n";
  try {
    load_csv(p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 3u);
  }
  std::filesystem::remove(p);
}
