// Copyright 2026 The privfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cstdint>
#include <numeric>
#include <vector>

#include "benchmark/benchmark.h"
#include "privfed/adapter_model.h"
#include "privfed/federation.h"
#include "privfed/harness/config.h"
#include "privfed/harness/dataset.h"
#include "privfed/harness/experiment.h"
#include "privfed/privacy.h"
#include "privfed/secagg.h"

namespace privfed {
namespace {

void BM_PerSampleGradient(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const model::ModelSpec spec{d, d / 2, 4, 1};
  const model::FrozenBackbone bb = model::FrozenBackbone::Build(spec);
  model::AdapterParams p = model::AdapterParams::Init(spec, 2);
  p.b.setConstant(0.1);
  p.head_w.setConstant(0.2);
  const auto data = harness::SynthDataset(64, d, 2.0, 1.0, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::PerSampleGradient(bb, p, data[i++ % data.size()]));
  }
}
BENCHMARK(BM_PerSampleGradient)->Arg(16)->Arg(64)->Arg(256);

void BM_AccountEpsilon(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(privacy::AccountEpsilon(18.0, 0.8, 1600, 1e-5));
  }
}
BENCHMARK(BM_AccountEpsilon);

void BM_CalibrateSigma(benchmark::State& state) {
  const privacy::PrivacySpec spec{static_cast<double>(state.range(0)), 1e-5, 1.0, 0.8, 1600};
  for (auto _ : state) benchmark::DoNotOptimize(privacy::CalibrateSigma(spec));
}
BENCHMARK(BM_CalibrateSigma)->Arg(1)->Arg(10);

void BM_MaskAndAggregate(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto length = static_cast<std::size_t>(state.range(1));
  std::vector<uint32_t> ids(k);
  std::iota(ids.begin(), ids.end(), 0u);
  const LayoutPtr layout = ParamLayout::FromSizes({{"u", length}});
  const secagg::QuantizationSpec quant;
  const secagg::PairwiseSeeds seeds = secagg::PairwiseSeeds::Provision(7, 0, ids);
  ParamVector v(layout);
  for (std::size_t c = 0; c < length; ++c) v[c] = 0.001 * static_cast<double>(c);
  const secagg::QuantizedVector q = secagg::Quantize(v, quant);
  for (auto _ : state) {
    std::vector<secagg::MaskedUpdate> masked;
    for (uint32_t id : ids) {
      masked.push_back(secagg::MaskUpdate(
          id, q.values, secagg::GenerateMask(0, id, ids, seeds, length), layout, quant));
    }
    benchmark::DoNotOptimize(secagg::AggregateMasked(masked, ids));
  }
}
BENCHMARK(BM_MaskAndAggregate)->Args({5, 57})->Args({40, 229})->Args({40, 1000});

void BM_FederatedRound(benchmark::State& state) {
  harness::ExperimentConfig cfg = harness::ParseConfig(
      "num_clients = 8\nrounds = 1\noptimizer = adaptive\nlearning_rate = 0.01\n"
      "n_total = 640\ntest_fraction = 0.5\ntarget_epsilon = 1\n");
  const auto mode = static_cast<federation::PrivacyMode>(state.range(0));
  cfg.federation.client_threads = static_cast<std::size_t>(state.range(1));
  const harness::PreparedSetup setup = harness::Prepare(cfg);
  const federation::Federation fed(cfg.ForMode(mode), setup.backbone, setup.shards,
                                   setup.test_set);
  const federation::FederationState initial{setup.initial, 0};
  for (auto _ : state) benchmark::DoNotOptimize(fed.RunRound(initial));
  state.SetLabel(std::string(harness::ArmName(mode)));
}
BENCHMARK(BM_FederatedRound)
    ->Args({static_cast<int>(federation::PrivacyMode::kNone), 1})
    ->Args({static_cast<int>(federation::PrivacyMode::kDpSa), 1})
    ->Args({static_cast<int>(federation::PrivacyMode::kDpSa), 4});

}  // namespace
}  // namespace privfed

BENCHMARK_MAIN();
