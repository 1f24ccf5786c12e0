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
#ifndef PRIVFED_FEDERATION_H_
#define PRIVFED_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "privfed/adapter_model.h"
#include "privfed/param_vector.h"
#include "privfed/privacy.h"
#include "privfed/secagg.h"

namespace privfed::federation {

enum class OptimizerKind { kSgd, kAdaptive };
// The four ablation arms: plain FedAvg, secure aggregation only, DP-SGD
// only, and DP-SGD followed by secure aggregation.
enum class PrivacyMode { kNone, kDp, kSa, kDpSa };
// kAuto picks Poisson sampling under DP and per-epoch shuffling otherwise.
enum class BatchSampling { kAuto, kShuffle, kPoisson };
// What clients upload: their updated parameters or the change from global.
enum class TransmitMode { kParams, kDelta };

std::string_view ToString(OptimizerKind v);
std::string_view ToString(PrivacyMode v);
std::string_view ToString(BatchSampling v);
std::string_view ToString(TransmitMode v);
// Parsers throw ConfigError on unknown names.
OptimizerKind ParseOptimizerKind(std::string_view s);
PrivacyMode ParsePrivacyMode(std::string_view s);
BatchSampling ParseBatchSampling(std::string_view s);
TransmitMode ParseTransmitMode(std::string_view s);

struct FederationConfig {
  std::size_t num_clients = 40;
  std::size_t rounds = 200;
  std::size_t local_epochs = 4;
  std::size_t batch_size = 32;
  double learning_rate = 2e-4;
  double weight_decay = 0.01;
  OptimizerKind optimizer = OptimizerKind::kAdaptive;
  PrivacyMode privacy_mode = PrivacyMode::kNone;
  // Target epsilon, delta and clip norm. Sampling rate and step count are
  // derived from the shard size (see ResolvePrivacySpec).
  std::optional<privacy::PrivacySpec> privacy;
  // Skips calibration when set.
  std::optional<double> noise_multiplier;
  secagg::QuantizationSpec quant;
  uint64_t master_seed = 0;
  BatchSampling batch_sampling = BatchSampling::kAuto;
  TransmitMode transmit = TransmitMode::kParams;
  // Worker threads for local training. Never changes results.
  std::size_t client_threads = 1;

  bool UsesDp() const {
    return privacy_mode == PrivacyMode::kDp || privacy_mode == PrivacyMode::kDpSa;
  }
  bool UsesSecAgg() const {
    return privacy_mode == PrivacyMode::kSa || privacy_mode == PrivacyMode::kDpSa;
  }
  bool UsesPoisson() const {
    return batch_sampling == BatchSampling::kPoisson ||
           (batch_sampling == BatchSampling::kAuto && UsesDp());
  }
  // ceil(n / |B|) optimizer steps per local epoch.
  std::size_t StepsPerEpoch(std::size_t shard_size) const;
  std::size_t StepsPerRound(std::size_t shard_size) const {
    return local_epochs * StepsPerEpoch(shard_size);
  }

  // Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const FederationConfig&) const = default;
};

// Fills in q = |B|/n and T = R * E * ceil(n/|B|) for a DP config.
privacy::PrivacySpec ResolvePrivacySpec(const FederationConfig& cfg,
                                        std::size_t shard_size);

struct ClientDataset {
  uint32_t client_id = 0;
  std::vector<model::LabeledExample> examples;
};

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  double global_train_loss = 0.0;
  double test_accuracy = 0.0;
  double test_f1 = 0.0;
  double epsilon_spent = 0.0;  // cumulative; 0 without DP
  uint64_t bytes_up_per_client = 0;
  uint64_t bytes_down_per_client = 0;

  bool operator==(const RoundMetrics&) const = default;
};

// Per-step record of the DP signal: the norm of the noise-free clipped mean
// gradient alongside the mechanism parameters.
struct StepTrace {
  uint32_t client_id = 0;
  std::size_t round = 0;
  std::size_t step = 0;
  double clipped_mean_norm = 0.0;
  double sigma = 0.0;
  double clip_norm = 0.0;
};

// Deterministic shuffle followed by K equal contiguous shards. Throws
// ConfigError if the dataset size is not divisible by K.
std::vector<ClientDataset> Partition(std::vector<model::LabeledExample> data,
                                     std::size_t num_clients, uint64_t seed);

// E epochs of mini-batch training on one shard, starting from `global`.
// Under DP every step releases NoisyMeanGradient with normalizer |B|;
// otherwise the plain mean gradient of the batch is used. All randomness
// comes from stream_seed (batch selection and per-step noise use separate
// derived streams), so the result is a pure function of the arguments.
model::AdapterParams LocalTrain(const model::FrozenBackbone& backbone,
                                const model::AdapterParams& global,
                                const ClientDataset& data,
                                const FederationConfig& cfg, double sigma,
                                uint64_t stream_seed,
                                std::vector<StepTrace>* trace = nullptr);

// Unweighted mean with pairwise summation.
ParamVector FedAvg(std::span<const ParamVector> updates);
model::AdapterParams FedAvg(std::span<const model::AdapterParams> updates);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class = 1, predicted when p >= 0.5
};

Evaluation Evaluate(const model::FrozenBackbone& backbone,
                    const model::AdapterParams& params,
                    std::span<const model::LabeledExample> examples);

struct FederationState {
  model::AdapterParams global;
  std::size_t rounds_completed = 0;
};

struct RoundOutput {
  FederationState state;
  RoundMetrics metrics;
  // Server-side average of what clients transmitted (params or deltas).
  ParamVector aggregate;
  std::vector<StepTrace> trace;
  std::size_t clamped = 0;  // quantization clamps across clients
};

// The server plus the simulated clients. Immutable after construction;
// RunRound is a pure function of the incoming state.
class Federation {
 public:
  // Validates the config, checks equal shard sizes and calibrates sigma for
  // DP modes unless cfg.noise_multiplier is set.
  Federation(FederationConfig cfg, model::FrozenBackbone backbone,
             std::vector<ClientDataset> clients,
             std::vector<model::LabeledExample> test_set);

  const FederationConfig& config() const { return cfg_; }
  const model::FrozenBackbone& backbone() const { return backbone_; }
  const std::vector<ClientDataset>& clients() const { return clients_; }
  std::size_t shard_size() const { return shard_size_; }
  std::size_t steps_per_round() const { return cfg_.StepsPerRound(shard_size_); }
  double sigma() const { return sigma_; }
  const std::optional<privacy::PrivacySpec>& privacy_spec() const {
    return privacy_spec_;
  }

  // Cumulative epsilon after r rounds (0 without DP).
  double EpsilonAfterRounds(std::size_t rounds) const;

  uint64_t BytesUpPerClient() const;
  uint64_t BytesDownPerClient() const;

  RoundOutput RunRound(const FederationState& state) const;

  std::vector<RoundMetrics> Run(
      const model::AdapterParams& initial,
      const std::function<void(const RoundOutput&)>& on_round = {}) const;

 private:
  std::vector<model::AdapterParams> TrainClients(
      const FederationState& state, std::vector<std::vector<StepTrace>>& traces) const;

  FederationConfig cfg_;
  model::FrozenBackbone backbone_;
  std::vector<ClientDataset> clients_;
  std::vector<model::LabeledExample> test_set_;
  std::vector<model::LabeledExample> train_union_;
  std::vector<uint32_t> participants_;
  std::size_t shard_size_ = 0;
  double sigma_ = 0.0;
  std::optional<privacy::PrivacySpec> privacy_spec_;
  std::optional<privacy::RdpCurve> step_curve_;
};

struct CommCost {
  double bytes_peft = 0;
  double bytes_full = 0;
  double reduction = 0;  // total / trainable
};

// Throws ConfigError unless 0 < trainable <= total.
CommCost ComputeCommCost(double trainable, double total,
                         double bytes_per_param = 4.0);

}  // namespace privfed::federation

#endif  // PRIVFED_FEDERATION_H_
