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
#ifndef PRIVFED_ANALYSIS_H_
#define PRIVFED_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "privfed/adapter_model.h"
#include "privfed/federation.h"

namespace privfed::analysis {

// Gradient-level signal to DP noise: ||E[g_bar]||_2 / (sigma * C). Throws
// DomainError when sigma * C is not positive.
double BaseSnr(double mean_grad_norm, double sigma, double clip_norm);

// Closed interval; lo == hi for a point value.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SnrInputs {
  double mean_grad_norm = 1.0;
  double sigma = 1.0;
  double clip_norm = 1.0;
  double n = 40;            // local dataset size
  double p_train = 0.035;   // trainable parameters (or fraction)
  double p_total = 1.0;     // total parameters (1 when p_train is a fraction)
  double n_client = 40;
  Range n_min{100, 200};

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

struct SnrReport {
  double base_snr = 0.0;
  // Each range is indexed by the N_min endpoint: .lo at n_min.lo, .hi at
  // n_min.hi. amplification = 1 / eff_factor.
  Range eff_factor;
  Range snr_eff;
  Range amplification;
};

// sqrt(p_train / p_total) * sqrt(n_client / n_min).
double EffFactor(double p_train, double p_total, double n_client, double n_min);

// Effective SNR at both ends of the N_min range.
SnrReport EffectiveSnr(const SnrInputs& inputs);

// [1/eff(n_min.lo), 1/eff(n_min.hi)] sorted ascending.
Range AmplificationRange(const SnrInputs& inputs);

struct EmpiricalSnr {
  std::vector<double> series;  // per-step base SNR, sigma == 0 steps dropped
  double mean = 0.0;
};

// Instruments the base SNR on a DP training trace. Throws InputError if the
// trace is empty or has no step with sigma > 0.
EmpiricalSnr MeasureEmpiricalSnr(std::span<const federation::StepTrace> trace);

struct SampleSizeSnr {
  std::size_t n = 0;
  // ||mean of released gradients|| / RMS deviation of the released gradient
  // around that mean, over Monte-Carlo repetitions. Captures both sampling
  // variance and DP noise on an n-example noisy mean.
  double snr = 0.0;
  // The definitional ratio ||clipped mean|| / (sigma C) averaged over
  // repetitions, for comparison.
  double base_snr = 0.0;
};

// For each n, repeatedly draws n examples (with replacement) from `pool`,
// releases NoisyBatchGradient at the fixed model state and measures the
// empirical SNR of the release.
std::vector<SampleSizeSnr> MeasureSnrVsSampleSize(
    const model::FrozenBackbone& backbone, const model::AdapterParams& params,
    std::span<const model::LabeledExample> pool,
    std::span<const std::size_t> sizes, double sigma, double clip_norm,
    std::size_t repetitions, uint64_t seed);

}  // namespace privfed::analysis

#endif  // PRIVFED_ANALYSIS_H_
