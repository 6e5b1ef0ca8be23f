#include <benchmark/benchmark.h>

#include "rsvp/eval.hpp"
#include "rsvp/linalg.hpp"
#include "rsvp/preprocess.hpp"
#include "rsvp/rng.hpp"
#include "rsvp/spatial_filters.hpp"
#include "rsvp/synth.hpp"

namespace {

using namespace rsvp;

EpochSet bench_epochs(Eigen::Index n_ch, std::size_t n, Eigen::Index n_t) {
  Rng rng(1);
  EpochSet set;
  set.rate = static_cast<double>(n_t);
  set.window_start = 0;
  set.window_end = 1;
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(n_ch);
  topo[n_ch / 2] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd e(n_ch, n_t);
    for (Eigen::Index c = 0; c < n_ch; ++c) {
      for (Eigen::Index t = 0; t < n_t; ++t) e(c, t) = rng.normal();
    }
    if (i % 2 == 0) {
      for (Eigen::Index t = n_t / 3; t < n_t / 2; ++t) e.col(t) += 2.0 * topo;
    }
    set.epochs.push_back(std::move(e));
    set.labels.push_back(i % 2 == 0 ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }
  return set;
}

void BM_ShrunkCovariance(benchmark::State& state) {
  Rng rng(2);
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd data(dim, 4000);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index s = 0; s < 4000; ++s) data(c, s) = rng.normal();
  }
  for (auto _ : state) {
    auto shrunk = shrink_covariance(covariance(data, true), data.cols());
    benchmark::DoNotOptimize(shrunk);
  }
}
BENCHMARK(BM_ShrunkCovariance)->Arg(16)->Arg(32)->Arg(64);

void BM_GeneralizedEig(benchmark::State& state) {
  Rng rng(3);
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd ga = Eigen::MatrixXd::NullaryExpr(dim, 2 * dim,
                                                          [&]() { return rng.normal(); });
  const Eigen::MatrixXd gb = Eigen::MatrixXd::NullaryExpr(dim, 2 * dim,
                                                          [&]() { return rng.normal(); });
  const SymMatrix a(ga * ga.transpose() / (2.0 * dim) +
                    0.1 * Eigen::MatrixXd::Identity(dim, dim));
  const SymMatrix b(gb * gb.transpose() / (2.0 * dim) +
                    0.1 * Eigen::MatrixXd::Identity(dim, dim));
  for (auto _ : state) {
    auto dec = gen_eig(a, b);
    benchmark::DoNotOptimize(dec);
  }
}
BENCHMARK(BM_GeneralizedEig)->Arg(16)->Arg(32)->Arg(64);

void BM_FitMtwlb(benchmark::State& state) {
  const EpochSet set = bench_epochs(32, 200, 250);
  for (auto _ : state) {
    auto bank = fit_mtwlb(set, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(bank);
  }
}
BENCHMARK(BM_FitMtwlb)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FitXdawn(benchmark::State& state) {
  const EpochSet set = bench_epochs(32, 200, 250);
  for (auto _ : state) {
    auto bank = fit_xdawn(set, 5);
    benchmark::DoNotOptimize(bank);
  }
}
BENCHMARK(BM_FitXdawn)->Unit(benchmark::kMillisecond);

void BM_Bandpass(benchmark::State& state) {
  Rng rng(4);
  ContinuousRecording rec;
  rec.rate = 1000;
  rec.data.resize(32, 60000);
  for (Eigen::Index c = 0; c < 32; ++c) {
    rec.channels.push_back("ch" + std::to_string(c));
    for (Eigen::Index s = 0; s < 60000; ++s) rec.data(c, s) = rng.normal();
  }
  for (auto _ : state) {
    auto out = bandpass(rec, 0.1, 30.0);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_Bandpass)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Eigen::VectorXd scores(n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    scores[i] = rng.normal();
    labels[static_cast<std::size_t>(i)] = i % 19 == 0 ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(scores, labels));
  }
}
BENCHMARK(BM_Auc)->Arg(512)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
