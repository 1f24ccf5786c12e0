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
#include "privfed/analysis.h"

#include <algorithm>
#include <cmath>

#include "privfed/errors.h"
#include "privfed/privacy.h"
#include "privfed/rng.h"

namespace privfed::analysis {

double BaseSnr(double mean_grad_norm, double sigma, double clip_norm) {
  const double scale = sigma * clip_norm;
  if (!(scale > 0)) throw DomainError("base SNR needs sigma * C > 0");
  return mean_grad_norm / scale;
}

void SnrInputs::Validate() const {
  if (!(mean_grad_norm > 0)) throw ConfigError("mean_grad_norm must be > 0");
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  if (!(clip_norm > 0)) throw ConfigError("clip must be > 0");
  if (!(n > 0)) throw ConfigError("n must be > 0");
  if (!(p_train > 0)) throw ConfigError("p_train must be > 0");
  if (!(p_total >= p_train)) throw ConfigError("p_total must be >= p_train");
  if (!(n_client > 0)) throw ConfigError("n_client must be > 0");
  if (!(n_min.lo > 0) || !(n_min.hi >= n_min.lo)) {
    throw ConfigError("n_min range must satisfy 0 < lo <= hi");
  }
}

double EffFactor(double p_train, double p_total, double n_client, double n_min) {
  return std::sqrt(p_train / p_total) * std::sqrt(n_client / n_min);
}

SnrReport EffectiveSnr(const SnrInputs& in) {
  in.Validate();
  SnrReport r;
  r.base_snr = BaseSnr(in.mean_grad_norm, in.sigma, in.clip_norm);
  r.eff_factor = {EffFactor(in.p_train, in.p_total, in.n_client, in.n_min.lo),
                  EffFactor(in.p_train, in.p_total, in.n_client, in.n_min.hi)};
  r.snr_eff = {r.base_snr * r.eff_factor.lo, r.base_snr * r.eff_factor.hi};
  r.amplification = {1.0 / r.eff_factor.lo, 1.0 / r.eff_factor.hi};
  return r;
}

Range AmplificationRange(const SnrInputs& in) {
  const SnrReport r = EffectiveSnr(in);
  return {std::min(r.amplification.lo, r.amplification.hi),
          std::max(r.amplification.lo, r.amplification.hi)};
}

EmpiricalSnr MeasureEmpiricalSnr(std::span<const federation::StepTrace> trace) {
  if (trace.empty()) throw InputError("empty training trace");
  EmpiricalSnr out;
  for (const auto& step : trace) {
    if (!(step.sigma > 0) || !(step.clip_norm > 0)) continue;
    out.series.push_back(BaseSnr(step.clipped_mean_norm, step.sigma, step.clip_norm));
  }
  if (out.series.empty()) throw InputError("trace has no noised steps");
  double sum = 0.0;
  for (double v : out.series) sum += v;
  out.mean = sum / static_cast<double>(out.series.size());
  return out;
}

std::vector<SampleSizeSnr> MeasureSnrVsSampleSize(
    const model::FrozenBackbone& backbone, const model::AdapterParams& params,
    std::span<const model::LabeledExample> pool,
    std::span<const std::size_t> sizes, double sigma, double clip_norm,
    std::size_t repetitions, uint64_t seed) {
  if (pool.empty()) throw InputError("example pool is empty");
  if (repetitions < 2) throw InputError("need at least two repetitions");
  if (!(sigma > 0) || !(clip_norm > 0)) {
    throw DomainError("SNR sweep needs sigma > 0 and C > 0");
  }
  std::vector<ParamVector> pool_grads;
  pool_grads.reserve(pool.size());
  for (const auto& ex : pool) {
    pool_grads.push_back(model::PerSampleGradient(backbone, params, ex));
  }
  const LayoutPtr layout = pool_grads.front().layout();

  std::vector<SampleSizeSnr> out;
  for (std::size_t n : sizes) {
    if (n == 0) throw InputError("sample size must be >= 1");
    RngStream rng(DeriveSeed(seed, "snr_sweep", n));
    std::vector<ParamVector> releases;
    double base_sum = 0.0;
    std::vector<ParamVector> batch;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      batch.clear();
      for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(pool_grads[rng.NextU64() % pool_grads.size()]);
      }
      ParamVector clipped_mean;
      releases.push_back(privacy::NoisyMeanGradient(
          batch, layout, clip_norm, sigma, static_cast<double>(n), rng, &clipped_mean));
      base_sum += BaseSnr(clipped_mean.Norm(), sigma, clip_norm);
    }
    ParamVector mean = PairwiseSum(releases);
    mean *= 1.0 / static_cast<double>(repetitions);
    double dev = 0.0;
    for (const ParamVector& r : releases) {
      const ParamVector d = r - mean;
      dev += d.Norm() * d.Norm();
    }
    const double rms = std::sqrt(dev / static_cast<double>(repetitions - 1));
    out.push_back({n, rms > 0 ? mean.Norm() / rms : 0.0,
                   base_sum / static_cast<double>(repetitions)});
  }
  return out;
}

}  // namespace privfed::analysis
