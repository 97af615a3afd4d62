// SPDX-License-Identifier: Apache-2.0
// Serial reference loops against their OpenMP counterparts. Arg 0 = serial, 1 = OpenMP.
#include <benchmark/benchmark.h>

#include "ttuq/als_cross.hpp"
#include "ttuq/baselines.hpp"
#include "ttuq/postproc.hpp"
#include "ttuq/stochastic.hpp"

using namespace ttuq;

namespace {

struct Setup {
  stochastic::KleSpec spec;
  fem::Mesh mesh = fem::Mesh::from_level(2);
  fem::FemOperator op{mesh};
  stochastic::ParamGrid grid;
  TtTensor coeff, rhs, qy;

  Setup() {
    const Index d = stochastic::truncation_dim(spec);
    grid = stochastic::ParamGrid::build(spec.dist, stochastic::anisotropic_sizes(7, spec, d));
    stochastic::LogCoeffOptions o;
    o.rel_tol = 1e-4;
    coeff = stochastic::coeff_log_tt(spec, mesh, grid, o).tt;
    rhs = als::lifted_rhs(op, coeff);
    const auto u = als::solve(op, coeff, rhs, {.rel_tol = 1e-4}).u;
    qy = post::spatial_qoi(u, fem::qoi_weights(mesh));
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_AlsSnapshots(benchmark::State& st) {
  const auto& s = setup();
  als::AlsOptions o;
  o.rel_tol = 1e-4;
  o.parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(als::solve(s.op, s.coeff, s.rhs, o).u.max_rank());
}
BENCHMARK(BM_AlsSnapshots)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Moments(benchmark::State& st) {
  const auto& s = setup();
  post::MomentOptions o;
  o.parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(post::moments(s.qy, s.grid, 6, o).values[0]);
}
BENCHMARK(BM_Moments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& st) {
  static const auto model = baselines::Model::build(setup().spec, 2);
  for (auto _ : st)
    benchmark::DoNotOptimize(baselines::mc_moments(model, 256, 2, {.seed = 1, .parallel = st.range(0) != 0}).moments.values[0]);
}
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
