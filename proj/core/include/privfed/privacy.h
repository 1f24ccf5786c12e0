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
#ifndef PRIVFED_PRIVACY_H_
#define PRIVFED_PRIVACY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "privfed/param_vector.h"
#include "privfed/rng.h"

namespace privfed::privacy {

// Target (epsilon, delta) together with the mechanism parameters the
// accountant needs.
struct PrivacySpec {
  double target_epsilon = 0.0;
  double delta = 1e-5;
  double clip_norm = 1.0;
  double sampling_rate = 1.0;  // q
  uint64_t total_steps = 1;    // T

  // Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const PrivacySpec&) const = default;
};

// Renyi divergences rho(alpha) over a grid of orders alpha > 1.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;

  void Validate() const;
};

struct EpsilonResult {
  double epsilon = 0.0;
  double best_order = 0.0;
};

struct NoiseCalibration {
  double sigma = 0.0;
  double achieved_epsilon = 0.0;
  double best_order = 0.0;
};

// --- DP-SGD mechanics ------------------------------------------------------

// g * min(1, C / ||g||_2), norm taken over the whole flattened vector.
ParamVector ClipGradient(const ParamVector& g, double clip_norm);

// (1/|B|) * (sum_i clip(g_i, C) + z), z ~ N(0, sigma^2 C^2 I). Noise is added
// to the clipped sum before normalization. Throws InputError on an empty
// batch and ConfigError on mixed layouts.
ParamVector NoisyBatchGradient(std::span<const ParamVector> per_sample,
                               double clip_norm, double sigma,
                               RngStream& noise);

// Same mechanism with an explicit normalizer and layout, so that an empty
// Poisson-sampled batch is still a valid release. When clipped_mean is
// non-null it receives the noise-free (1/normalizer) * sum_i clip(g_i, C).
ParamVector NoisyMeanGradient(std::span<const ParamVector> per_sample,
                              const LayoutPtr& layout, double clip_norm,
                              double sigma, double normalizer,
                              RngStream& noise,
                              ParamVector* clipped_mean = nullptr);

// --- RDP accounting --------------------------------------------------------

// Integers 2..64 plus 128 and 256.
const std::vector<double>& DefaultOrders();

// RDP of the Poisson-subsampled Gaussian mechanism at order alpha. For q = 1
// this is alpha / (2 sigma^2); for q < 1 alpha must be an integer and the
// exact binomial expansion
//   1/(alpha-1) log sum_j C(alpha,j) (1-q)^(alpha-j) q^j exp(j(j-1)/(2 sigma^2))
// is evaluated in log space. Throws DomainError for alpha <= 1, non-integer
// alpha with q < 1, sigma <= 0 or q outside (0, 1].
double RdpSubsampledGaussian(double sigma, double q, double alpha);

RdpCurve ComputeRdp(double sigma, double q,
                    const std::vector<double>& orders = DefaultOrders());

// RDP composes additively: every value is multiplied by steps.
RdpCurve Compose(const RdpCurve& curve, uint64_t steps);

// epsilon = min_alpha rho(alpha) + log(1/delta) / (alpha - 1).
EpsilonResult RdpToEpsilon(const RdpCurve& curve, double delta);

// Convenience: epsilon after `steps` compositions of the sampled Gaussian.
EpsilonResult AccountEpsilon(double sigma, double q, uint64_t steps,
                             double delta,
                             const std::vector<double>& orders = DefaultOrders());

inline constexpr double kMaxSigma = 1e6;

// Smallest noise multiplier (to a relative resolution of 1e-5) whose
// accounted epsilon does not exceed spec.target_epsilon. The result
// satisfies eps(sigma) <= target < eps(sigma * (1 - 1e-3)). Throws
// CalibrationError if sigma = kMaxSigma is still insufficient.
NoiseCalibration CalibrateSigma(
    const PrivacySpec& spec,
    const std::vector<double>& orders = DefaultOrders());

}  // namespace privfed::privacy

#endif  // PRIVFED_PRIVACY_H_
