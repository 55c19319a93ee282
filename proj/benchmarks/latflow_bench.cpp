// Copyright 2026 The latflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "latflow/contraction.hpp"
#include "latflow/diophantine.hpp"
#include "latflow/flows.hpp"
#include "latflow/heights.hpp"
#include "latflow/lattice.hpp"

namespace {

using namespace latflow;

std::vector<flows::XPrimePoint> points(std::size_t n, double tau_max) {
  Rng rng(5);
  flows::SampleSpec spec;
  spec.tau_max = tau_max;
  std::vector<flows::XPrimePoint> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(flows::sample_xprime(3, spec, rng));
  return out;
}

heights::CalibratedConstants fixed_constants() {
  heights::CalibratedConstants c;
  c.C = c.C_p99 = 0.2;
  c.C_ht = c.C_ht_p99 = 2.7;
  c.D_breakpoints = {{1, 1.5}};
  c.assemble_E101();
  return c;
}

void BM_ShortestVectorSlice(benchmark::State& state) {
  const auto pts = points(64, static_cast<double>(state.range(0)));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lattice::lambda1(flows::to_lattice(pts[k++ % pts.size()])));
  }
}
BENCHMARK(BM_ShortestVectorSlice)->Arg(3)->Arg(20)->Arg(40);

void BM_BqAlpha(benchmark::State& state) {
  const auto pts = points(64, 3.0);
  heights::HeightParams p;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heights::bq_alpha(flows::to_lattice(pts[k++ % pts.size()]), 0, p));
  }
}
BENCHMARK(BM_BqAlpha);

void BM_AlphaTilde(benchmark::State& state) {
  const auto pts = points(64, 3.0);
  const auto consts = fixed_constants();
  heights::HeightParams p;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heights::alpha_tilde(pts[k++ % pts.size()], 0, p, consts));
  }
}
BENCHMARK(BM_AlphaTilde);

void BM_SubharmonicQuadrature(benchmark::State& state) {
  const auto pts = points(16, 3.0);
  heights::HeightParams p;
  const auto f = contraction::height_integrand(contraction::HeightKind::kHt, 0, p, nullptr);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(contraction::quad_average_u(f, pts[k++ % pts.size()], 0, p.t,
                                                         static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_SubharmonicQuadrature)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LittlewoodMin(benchmark::State& state) {
  const auto xi = diophantine::parse_vector("phi,phi");
  for (auto _ : state) {
    benchmark::DoNotOptimize(diophantine::littlewood_min(xi, state.range(0)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LittlewoodMin)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_EscapeOfMass(benchmark::State& state) {
  const auto xi = diophantine::parse_vector("sqrt2-1,(sqrt2-1)/2");
  const diophantine::Gate gate{diophantine::GateKind::kShortVector, 0.05};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        diophantine::escape_of_mass(xi, static_cast<int>(state.range(0)), 1.0, gate));
  }
}
BENCHMARK(BM_EscapeOfMass)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
