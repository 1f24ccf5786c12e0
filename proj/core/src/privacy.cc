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
#include "privfed/privacy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "privfed/errors.h"

namespace privfed::privacy {
namespace {

double LogAddExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

void PrivacySpec::Validate() const {
  if (!(target_epsilon > 0)) throw ConfigError("target_epsilon must be > 0");
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0, 1)");
  if (!(clip_norm > 0)) throw ConfigError("clip_norm must be > 0");
  if (!(sampling_rate > 0 && sampling_rate <= 1)) {
    throw ConfigError("sampling_rate must lie in (0, 1]");
  }
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
}

void RdpCurve::Validate() const {
  if (orders.empty() || orders.size() != values.size()) {
    throw ConfigError("RDP curve must be nonempty with one value per order");
  }
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (!(orders[i] > 1)) throw DomainError("RDP orders must exceed 1");
    if (i > 0 && !(orders[i] > orders[i - 1])) {
      throw ConfigError("RDP orders must be strictly increasing");
    }
    if (!(values[i] >= 0) || !std::isfinite(values[i])) {
      throw DomainError("RDP values must be finite and nonnegative");
    }
  }
}

ParamVector ClipGradient(const ParamVector& g, double clip_norm) {
  if (!(clip_norm > 0)) throw DomainError("clip norm must be > 0");
  if (!g.AllFinite()) throw InputError("gradient contains non-finite values");
  const double norm = g.Norm();
  if (norm <= clip_norm) return g;
  // Shrink the factor by ulps until the rounded result lies inside the ball,
  // so the output norm is <= C and clipping is exactly idempotent.
  double factor = clip_norm / norm;
  ParamVector out = g * factor;
  while (out.Norm() > clip_norm) {
    factor = std::nextafter(factor, 0.0);
    out = g * factor;
  }
  return out;
}

ParamVector NoisyMeanGradient(std::span<const ParamVector> per_sample,
                              const LayoutPtr& layout, double clip_norm,
                              double sigma, double normalizer,
                              RngStream& noise, ParamVector* clipped_mean) {
  if (!(sigma >= 0)) throw DomainError("noise multiplier must be >= 0");
  if (!(normalizer > 0)) throw DomainError("normalizer must be > 0");
  ParamVector sum(layout);
  for (const ParamVector& g : per_sample) sum += ClipGradient(g, clip_norm);
  if (clipped_mean != nullptr) *clipped_mean = sum * (1.0 / normalizer);
  const double stddev = sigma * clip_norm;
  for (double& v : sum.values()) v += stddev * noise.Gaussian();
  sum *= 1.0 / normalizer;
  return sum;
}

ParamVector NoisyBatchGradient(std::span<const ParamVector> per_sample,
                               double clip_norm, double sigma,
                               RngStream& noise) {
  if (per_sample.empty()) throw InputError("batch must be nonempty");
  return NoisyMeanGradient(per_sample, per_sample.front().layout(), clip_norm,
                           sigma, static_cast<double>(per_sample.size()),
                           noise);
}

const std::vector<double>& DefaultOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o;
    for (int a = 2; a <= 64; ++a) o.push_back(a);
    o.push_back(128);
    o.push_back(256);
    return o;
  }();
  return orders;
}

double RdpSubsampledGaussian(double sigma, double q, double alpha) {
  if (!(alpha > 1)) throw DomainError("RDP order must exceed 1");
  if (!(sigma > 0)) throw DomainError("noise multiplier must be > 0");
  if (!(q > 0 && q <= 1)) throw DomainError("sampling rate must lie in (0, 1]");
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  if (alpha != std::floor(alpha)) {
    throw DomainError("subsampled RDP requires an integer order");
  }
  const int n = static_cast<int>(alpha);
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_a = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    const double term = LogBinomial(n, j) + (n - j) * log_1mq + j * log_q +
                        (static_cast<double>(j) * (j - 1)) / (2.0 * sigma * sigma);
    log_a = LogAddExp(log_a, term);
  }
  // The sum is >= 1 mathematically; clamp rounding noise around zero.
  return std::max(0.0, log_a / (alpha - 1.0));
}

RdpCurve ComputeRdp(double sigma, double q, const std::vector<double>& orders) {
  RdpCurve curve;
  curve.orders = orders;
  curve.values.reserve(orders.size());
  for (double a : orders) curve.values.push_back(RdpSubsampledGaussian(sigma, q, a));
  return curve;
}

RdpCurve Compose(const RdpCurve& curve, uint64_t steps) {
  RdpCurve out = curve;
  for (double& v : out.values) v *= static_cast<double>(steps);
  return out;
}

EpsilonResult RdpToEpsilon(const RdpCurve& curve, double delta) {
  if (!(delta > 0 && delta < 1)) throw DomainError("delta must lie in (0, 1)");
  if (curve.orders.empty() || curve.orders.size() != curve.values.size()) {
    throw ConfigError("RDP curve must be nonempty with one value per order");
  }
  const double log_inv_delta = -std::log(delta);
  EpsilonResult best{std::numeric_limits<double>::infinity(), curve.orders.front()};
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double eps =
        curve.values[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (eps < best.epsilon) best = {eps, curve.orders[i]};
  }
  return best;
}

EpsilonResult AccountEpsilon(double sigma, double q, uint64_t steps,
                             double delta, const std::vector<double>& orders) {
  return RdpToEpsilon(Compose(ComputeRdp(sigma, q, orders), steps), delta);
}

NoiseCalibration CalibrateSigma(const PrivacySpec& spec,
                                const std::vector<double>& orders) {
  spec.Validate();
  auto eps = [&](double sigma) {
    return AccountEpsilon(sigma, spec.sampling_rate, spec.total_steps,
                          spec.delta, orders);
  };
  const double target = spec.target_epsilon;

  if (eps(kMaxSigma).epsilon > target) {
    std::ostringstream msg;
    msg << "target epsilon " << target << " is unreachable with sigma <= 1e6";
    throw CalibrationError(msg.str());
  }
  // Bracket: eps(hi) <= target < eps(lo).
  double hi = 1.0;
  while (eps(hi).epsilon > target) hi = std::min(hi * 2.0, kMaxSigma);
  double lo = hi / 2.0;
  while (eps(lo).epsilon <= target) {
    hi = lo;
    lo /= 2.0;
    if (lo < 1e-12) {
      throw CalibrationError("noise multiplier bracket collapsed below 1e-12");
    }
  }
  while (hi / lo > 1.0 + 1e-5) {
    const double mid = std::sqrt(lo * hi);
    if (eps(mid).epsilon <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const EpsilonResult achieved = eps(hi);
  return {hi, achieved.epsilon, achieved.best_order};
}

}  // namespace privfed::privacy
