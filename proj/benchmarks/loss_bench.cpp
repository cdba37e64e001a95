#include <benchmark/benchmark.h>

#include <random>

#include "cmgn/margin_losses.hpp"
#include "cmgn/oracle/direct_loss.hpp"

namespace {

using namespace cmgn;

struct Problem {
  Matrix features;
  ClassifierMatrix classifier;
  CosineBatch batch;
};

Problem make_problem(std::size_t b, std::size_t d, std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Problem p;
  p.features = Matrix(b, d);
  for (double& x : p.features.data()) x = g(rng);
  l2_normalize_rows(p.features);
  Matrix w(d, n);
  for (double& x : w.data()) x = g(rng);
  p.classifier = ClassifierMatrix(w);
  std::vector<std::size_t> labels(b);
  for (std::size_t i = 0; i < b; ++i) labels[i] = i % n;
  p.batch = CosineBatch{cosine_batch(p.features, p.classifier), labels};
  return p;
}

LossVariant variant_for(int k) {
  switch (k) {
    case 0: return LossVariant::normalized_softmax(64);
    case 1: return LossVariant::cosface(0.35, 64);
    case 2: return LossVariant::arcface(0.5, 64);
    case 3: return LossVariant::mv_arc_softmax(0.5, 64, 1.2);
    default: return LossVariant::curricular_face(0.5, 64);
  }
}

void BM_Forward(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(1)), 16, 100);
  const auto v = variant_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(p.batch, v, 0.3).loss);
  state.SetLabel(std::string(to_string(v.kind)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->ArgsProduct({{0, 1, 2, 3, 4}, {64, 512}});

void BM_Backward(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 16, 100);
  const auto v = LossVariant::curricular_face(0.5, 64);
  for (auto _ : state) {
    auto g = backward(p.batch, v, 0.3, p.features, p.classifier);
    benchmark::DoNotOptimize(g.features.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(64)->Arg(512);

void BM_CosineBatch(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 64, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_batch(p.features, p.classifier).data().data());
}
BENCHMARK(BM_CosineBatch)->Arg(64)->Arg(256);

void BM_OracleDirectLoss(benchmark::State& state) {
  const auto p = make_problem(8, 16, 10);
  const auto v = LossVariant::curricular_face(0.5, 64);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::direct_loss(p.batch, v, 0.3));
}
BENCHMARK(BM_OracleDirectLoss);

}  // namespace
