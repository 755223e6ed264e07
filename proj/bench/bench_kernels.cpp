// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels against their serial twins. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cmath>

#include "rivest/embedding.hpp"
#include "rivest/kl_rom.hpp"
#include "rivest/pbi_estimator.hpp"
#include "rivest/synthetic_dataset.hpp"

using namespace rivest;

namespace
{

constexpr double kLength = 500.0;
constexpr double kVelocity = 0.4;

LogNormalPrior prior()
{
  LogNormalPrior p;
  p.mu_log = {std::log(200.0), std::log(0.5), std::log(4.0)};
  p.sigma_log = 0.25 * Eigen::Matrix3d::Identity();
  return p;
}

struct Setup
{
  SyntheticDataset dataset;
  KLModel kl;
  RowMatrix z;
  MeasuredCurve curve;
  EmbeddedCurve embedded;
};

const Setup& setup()
{
  static const Setup s = [] {
    Setup s;
    s.dataset = generate_dataset(prior(), 300, Formulation::SemiInfEquivInfinite, KernelFamily::FirstOrder, 1);
    s.kl = fit_kl(s.dataset, 20);
    s.z = project_all(s.kl, s.dataset.curves);
    const auto y = sample_prior(prior(), KernelFamily::FirstOrder, 1, 2)[0];
    std::vector<double> t;
    for (int i = 1; i <= 60; ++i)
      t.push_back(kLength / kVelocity * 0.07 * i);
    auto c = forward_dimensional(y, Formulation::SemiInfEquivInfinite, kVelocity, kLength, t);
    for (double& x : c)
      x = std::max(x, 0.0);
    s.curve = pad_with_zeros(make_curve(t, c, kLength));
    s.embedded = embed_over_velocities(s.curve, s.kl, VelocityGrid::for_curve(s.curve), 1e-4);
    return s;
  }();
  return s;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_batch_breakthrough(benchmark::State& state)
{
  const auto draws = sample_prior(prior(), KernelFamily::FirstOrder, 32, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_breakthrough(draws, Formulation::SemiInfEquivInfinite, TimeGrid::canonical(), {},
                                                mode(state)));
}

void BM_project_all(benchmark::State& state)
{
  const auto& s = setup();
  for (auto _ : state)
    benchmark::DoNotOptimize(project_all(s.kl, s.dataset.curves, mode(state)));
}

void BM_embed_over_velocities(benchmark::State& state)
{
  const auto& s = setup();
  const auto grid = VelocityGrid::for_curve(s.curve);
  for (auto _ : state)
    benchmark::DoNotOptimize(embed_over_velocities(s.curve, s.kl, grid, 1e-4, mode(state)));
}

void BM_estimate_nni(benchmark::State& state)
{
  const auto& s = setup();
  const Manifold m{&s.dataset, &s.z};
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_nni(s.embedded, m, mode(state)));
}

void BM_estimate_pbi(benchmark::State& state)
{
  const auto& s = setup();
  const Manifold m{&s.dataset, &s.z};
  PbiOptions o;
  o.execution = mode(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_pbi(s.embedded, m, o));
}

} // namespace

BENCHMARK(BM_batch_breakthrough)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_project_all)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_embed_over_velocities)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_estimate_nni)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_estimate_pbi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
