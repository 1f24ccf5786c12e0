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
#ifndef PRIVFED_ADAPTER_MODEL_H_
#define PRIVFED_ADAPTER_MODEL_H_

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "privfed/param_vector.h"

namespace privfed::model {

inline constexpr char kLoraA[] = "lora_A";
inline constexpr char kLoraB[] = "lora_B";
inline constexpr char kHeadW[] = "head_w";
inline constexpr char kHeadB[] = "head_b";

struct ModelSpec {
  std::size_t input_dim = 16;   // d
  std::size_t feature_dim = 8;  // k
  std::size_t lora_rank = 4;    // r
  uint64_t seed = 0;

  // Throws ConfigError unless d >= 1, k >= 1 and 1 <= r <= min(d, k).
  void Validate() const;

  bool operator==(const ModelSpec&) const = default;
};

// Frozen k x d feature extractor. Immutable once built.
class FrozenBackbone {
 public:
  // Entries are i.i.d. N(0, 1/d), deterministic in spec.seed.
  static FrozenBackbone Build(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& weights() const { return w0_; }

 private:
  FrozenBackbone(ModelSpec spec, Eigen::MatrixXd w0)
      : spec_(spec), w0_(std::move(w0)) {}

  ModelSpec spec_;
  Eigen::MatrixXd w0_;
};

// The trainable state: LoRA factors plus the logistic head.
struct AdapterParams {
  Eigen::MatrixXd a;       // r x d
  Eigen::MatrixXd b;       // k x r
  Eigen::VectorXd head_w;  // k
  double head_b = 0.0;

  static AdapterParams Zero(const ModelSpec& spec);
  // Standard LoRA start: A ~ N(0, 1/d), B = 0, zero head. The effective
  // weight therefore starts at W0.
  static AdapterParams Init(const ModelSpec& spec, uint64_t seed);

  // Row-major flattening in segment order lora_A, lora_B, head_w, head_b.
  ParamVector Flatten() const;
  static AdapterParams Unflatten(const ParamVector& v, const ModelSpec& spec);

  bool operator==(const AdapterParams& other) const;
};

// Shared layout object for a spec; identical specs get equal layouts.
LayoutPtr AdapterLayout(const ModelSpec& spec);

struct LabeledExample {
  Eigen::VectorXd x;
  int label = 0;  // 0 or 1
};

// W0 + B * A.
Eigen::MatrixXd EffectiveWeight(const FrozenBackbone& backbone,
                                const AdapterParams& adapters);

double Logistic(double z);

// Logit head_w . (W x) + head_b. Throws InputError on non-finite x.
double Logit(const FrozenBackbone& backbone, const AdapterParams& adapters,
             const Eigen::VectorXd& x);

// Probability of the positive class.
double Forward(const FrozenBackbone& backbone, const AdapterParams& adapters,
               const Eigen::VectorXd& x);

// Binary cross-entropy, computed from the logit for numerical stability.
double Loss(const FrozenBackbone& backbone, const AdapterParams& adapters,
            const LabeledExample& ex);

// Closed-form gradient of Loss with respect to the trainable segments. With
// residual e = p - y and h = A x:
//   d head_b = e,  d head_w = e * W x,
//   d A = e * (B^T head_w) x^T,  d B = e * head_w h^T.
ParamVector PerSampleGradient(const FrozenBackbone& backbone,
                              const AdapterParams& adapters,
                              const LabeledExample& ex);

struct ParamCounts {
  double trainable = 0;
  double total = 0;
  double fraction = 0;
};

// trainable = r(d + k) + k + 1, total = k d + trainable.
ParamCounts CountParams(const ModelSpec& spec);
// Reporting mode for externally supplied counts (e.g. a large backbone).
ParamCounts CountParams(double trainable, double total);

}  // namespace privfed::model

#endif  // PRIVFED_ADAPTER_MODEL_H_
