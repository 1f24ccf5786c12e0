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
#include "privfed/federation.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "privfed/errors.h"
#include "privfed/rng.h"

namespace privfed::federation {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Enum, std::size_t N>
Enum ParseEnum(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N],
               std::string_view field) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw ConfigError(std::string(field) + ": unknown value '" + std::string(s) + "'");
}

constexpr std::pair<OptimizerKind, std::string_view> kOptimizers[] = {
    {OptimizerKind::kSgd, "sgd"}, {OptimizerKind::kAdaptive, "adaptive"}};
constexpr std::pair<PrivacyMode, std::string_view> kModes[] = {
    {PrivacyMode::kNone, "none"},
    {PrivacyMode::kDp, "dp"},
    {PrivacyMode::kSa, "sa"},
    {PrivacyMode::kDpSa, "dp_sa"}};
constexpr std::pair<BatchSampling, std::string_view> kSamplings[] = {
    {BatchSampling::kAuto, "auto"},
    {BatchSampling::kShuffle, "shuffle"},
    {BatchSampling::kPoisson, "poisson"}};
constexpr std::pair<TransmitMode, std::string_view> kTransmits[] = {
    {TransmitMode::kParams, "params"}, {TransmitMode::kDelta, "delta"}};

template <typename Enum, std::size_t N>
std::string_view EnumName(Enum v, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

model::ModelSpec SpecOf(const model::AdapterParams& p) {
  return {static_cast<std::size_t>(p.a.cols()), static_cast<std::size_t>(p.b.rows()),
          static_cast<std::size_t>(p.a.rows()), 0};
}

// Optimizer state over the flattened trainable vector.
class LocalOptimizer {
 public:
  LocalOptimizer(const FederationConfig& cfg, std::size_t size)
      : kind_(cfg.optimizer),
        lr_(cfg.learning_rate),
        wd_(cfg.weight_decay),
        m_(size, 0.0),
        v_(size, 0.0) {}

  void Step(std::span<double> theta, std::span<const double> grad) {
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] -= lr_ * (grad[i] + wd_ * theta[i]);
      }
      return;
    }
    // AdamW: decoupled weight decay, bias-corrected moments.
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      theta[i] -= lr_ * (m_hat / (std::sqrt(v_hat) + kAdamEps) + wd_ * theta[i]);
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  double wd_;
  std::vector<double> m_;
  std::vector<double> v_;
  uint64_t t_ = 0;
};

}  // namespace

std::string_view ToString(OptimizerKind v) { return EnumName(v, kOptimizers); }
std::string_view ToString(PrivacyMode v) { return EnumName(v, kModes); }
std::string_view ToString(BatchSampling v) { return EnumName(v, kSamplings); }
std::string_view ToString(TransmitMode v) { return EnumName(v, kTransmits); }
OptimizerKind ParseOptimizerKind(std::string_view s) {
  return ParseEnum(s, kOptimizers, "optimizer");
}
PrivacyMode ParsePrivacyMode(std::string_view s) {
  return ParseEnum(s, kModes, "privacy_mode");
}
BatchSampling ParseBatchSampling(std::string_view s) {
  return ParseEnum(s, kSamplings, "batch_sampling");
}
TransmitMode ParseTransmitMode(std::string_view s) {
  return ParseEnum(s, kTransmits, "transmit");
}

std::size_t FederationConfig::StepsPerEpoch(std::size_t shard_size) const {
  return (shard_size + batch_size - 1) / batch_size;
}

void FederationConfig::Validate() const {
  if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be finite and >= 0");
  }
  if (UsesDp() && !privacy) {
    throw ConfigError("target_epsilon is required when privacy_mode is " +
                      std::string(ToString(privacy_mode)));
  }
  if (!UsesDp() && privacy) {
    throw ConfigError("target_epsilon must be unset when privacy_mode is " +
                      std::string(ToString(privacy_mode)));
  }
  if (privacy) {
    if (!(privacy->target_epsilon > 0)) throw ConfigError("target_epsilon must be > 0");
    if (!(privacy->delta > 0 && privacy->delta < 1)) {
      throw ConfigError("delta must lie in (0, 1)");
    }
    if (!(privacy->clip_norm > 0)) throw ConfigError("clip_norm must be > 0");
  }
  if (noise_multiplier && !(*noise_multiplier >= 0)) {
    throw ConfigError("noise_multiplier must be >= 0");
  }
  quant.Validate(num_clients);
  if (client_threads < 1) throw ConfigError("client_threads must be >= 1");
}

privacy::PrivacySpec ResolvePrivacySpec(const FederationConfig& cfg,
                                        std::size_t shard_size) {
  if (!cfg.privacy) throw ConfigError("target_epsilon is not set");
  privacy::PrivacySpec spec = *cfg.privacy;
  spec.sampling_rate = std::min(
      1.0, static_cast<double>(cfg.batch_size) / static_cast<double>(shard_size));
  spec.total_steps = cfg.rounds * cfg.StepsPerRound(shard_size);
  return spec;
}

std::vector<ClientDataset> Partition(std::vector<model::LabeledExample> data,
                                     std::size_t num_clients, uint64_t seed) {
  if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (data.empty() || data.size() % num_clients != 0) {
    throw ConfigError("dataset of " + std::to_string(data.size()) +
                      " examples cannot be split evenly across " +
                      std::to_string(num_clients) + " clients");
  }
  std::mt19937_64 rng(DeriveSeed(seed, "partition"));
  std::shuffle(data.begin(), data.end(), rng);
  const std::size_t per_client = data.size() / num_clients;
  std::vector<ClientDataset> shards(num_clients);
  for (std::size_t c = 0; c < num_clients; ++c) {
    shards[c].client_id = static_cast<uint32_t>(c);
    auto first = data.begin() + static_cast<std::ptrdiff_t>(c * per_client);
    shards[c].examples.assign(std::make_move_iterator(first),
                              std::make_move_iterator(first + static_cast<std::ptrdiff_t>(per_client)));
  }
  return shards;
}

model::AdapterParams LocalTrain(const model::FrozenBackbone& backbone,
                                const model::AdapterParams& global,
                                const ClientDataset& data,
                                const FederationConfig& cfg, double sigma,
                                uint64_t stream_seed,
                                std::vector<StepTrace>* trace) {
  if (data.examples.empty()) throw InputError("client shard is empty");
  const bool dp = cfg.UsesDp();
  if (dp && !cfg.privacy) throw ConfigError("DP training requires a privacy spec");
  const double clip = dp ? cfg.privacy->clip_norm : 0.0;
  const std::size_t n = data.examples.size();
  const std::size_t steps_per_epoch = cfg.StepsPerEpoch(n);
  const double q = std::min(1.0, static_cast<double>(cfg.batch_size) / static_cast<double>(n));
  const model::ModelSpec spec = backbone.spec();
  const LayoutPtr layout = model::AdapterLayout(spec);

  ParamVector theta = global.Flatten();
  LocalOptimizer optimizer(cfg, theta.size());
  RngStream batch_rng(DeriveSeed(stream_seed, "batches"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch;
  std::vector<ParamVector> grads;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    if (!cfg.UsesPoisson()) std::shuffle(order.begin(), order.end(), batch_rng.engine());
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      batch.clear();
      if (cfg.UsesPoisson()) {
        for (std::size_t i = 0; i < n; ++i) {
          if (batch_rng.Bernoulli(q)) batch.push_back(i);
        }
      } else {
        const std::size_t begin = s * cfg.batch_size;
        const std::size_t end = std::min(n, begin + cfg.batch_size);
        batch.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
      }

      const model::AdapterParams current = model::AdapterParams::Unflatten(theta, spec);
      grads.clear();
      for (std::size_t i : batch) {
        grads.push_back(model::PerSampleGradient(backbone, current, data.examples[i]));
      }

      ParamVector update(layout);
      if (dp) {
        // Poisson batches are normalized by the expected size q*n = |B|.
        const double normalizer = cfg.UsesPoisson()
                                      ? q * static_cast<double>(n)
                                      : static_cast<double>(batch.size());
        RngStream noise(DeriveSeed(stream_seed, "noise", step));
        ParamVector clipped_mean;
        update = privacy::NoisyMeanGradient(grads, layout, clip, sigma,
                                            normalizer, noise, &clipped_mean);
        if (trace != nullptr) {
          trace->push_back({data.client_id, 0, step, clipped_mean.Norm(), sigma, clip});
        }
      } else {
        if (batch.empty()) continue;
        for (const ParamVector& g : grads) update += g;
        update *= 1.0 / static_cast<double>(batch.size());
      }
      optimizer.Step(theta.values(), update.values());
    }
  }
  return model::AdapterParams::Unflatten(theta, spec);
}

ParamVector FedAvg(std::span<const ParamVector> updates) {
  if (updates.empty()) throw InputError("FedAvg needs at least one update");
  ParamVector sum = PairwiseSum(updates);
  sum *= 1.0 / static_cast<double>(updates.size());
  return sum;
}

model::AdapterParams FedAvg(std::span<const model::AdapterParams> updates) {
  if (updates.empty()) throw InputError("FedAvg needs at least one update");
  std::vector<ParamVector> flat;
  flat.reserve(updates.size());
  for (const auto& u : updates) flat.push_back(u.Flatten());
  return model::AdapterParams::Unflatten(FedAvg(flat), SpecOf(updates.front()));
}

Evaluation Evaluate(const model::FrozenBackbone& backbone,
                    const model::AdapterParams& params,
                    std::span<const model::LabeledExample> examples) {
  Evaluation ev;
  if (examples.empty()) return ev;
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  double loss = 0.0;
  for (const auto& ex : examples) {
    loss += model::Loss(backbone, params, ex);
    const int predicted = model::Forward(backbone, params, ex.x) >= 0.5 ? 1 : 0;
    if (predicted == ex.label) ++correct;
    if (predicted == 1 && ex.label == 1) ++tp;
    if (predicted == 1 && ex.label == 0) ++fp;
    if (predicted == 0 && ex.label == 1) ++fn;
  }
  const double count = static_cast<double>(examples.size());
  ev.loss = loss / count;
  ev.accuracy = static_cast<double>(correct) / count;
  const std::size_t denom = 2 * tp + fp + fn;
  ev.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return ev;
}

Federation::Federation(FederationConfig cfg, model::FrozenBackbone backbone,
                       std::vector<ClientDataset> clients,
                       std::vector<model::LabeledExample> test_set)
    : cfg_(std::move(cfg)),
      backbone_(std::move(backbone)),
      clients_(std::move(clients)),
      test_set_(std::move(test_set)) {
  cfg_.Validate();
  if (clients_.size() != cfg_.num_clients) {
    throw ConfigError("expected " + std::to_string(cfg_.num_clients) +
                      " client shards, got " + std::to_string(clients_.size()));
  }
  shard_size_ = clients_.front().examples.size();
  for (const auto& c : clients_) {
    if (c.examples.size() != shard_size_ || shard_size_ == 0) {
      throw ConfigError("client shards must be nonempty and of equal size");
    }
    participants_.push_back(c.client_id);
    train_union_.insert(train_union_.end(), c.examples.begin(), c.examples.end());
  }
  if (cfg_.UsesDp()) {
    privacy_spec_ = ResolvePrivacySpec(cfg_, shard_size_);
    if (cfg_.noise_multiplier) {
      sigma_ = *cfg_.noise_multiplier;
    } else {
      sigma_ = privacy::CalibrateSigma(*privacy_spec_).sigma;
    }
    if (sigma_ > 0) {
      step_curve_ = privacy::ComputeRdp(sigma_, privacy_spec_->sampling_rate);
    }
  }
}

double Federation::EpsilonAfterRounds(std::size_t rounds) const {
  if (!cfg_.UsesDp() || rounds == 0) return 0.0;
  if (!step_curve_) return std::numeric_limits<double>::infinity();
  return privacy::RdpToEpsilon(privacy::Compose(*step_curve_, rounds * steps_per_round()),
                               privacy_spec_->delta)
      .epsilon;
}

uint64_t Federation::BytesUpPerClient() const {
  const auto params = static_cast<uint64_t>(model::CountParams(backbone_.spec()).trainable);
  // Masked payloads are 64-bit ring elements; plain uploads are float32.
  return params * (cfg_.UsesSecAgg() ? 8 : 4);
}

uint64_t Federation::BytesDownPerClient() const {
  return static_cast<uint64_t>(model::CountParams(backbone_.spec()).trainable) * 4;
}

std::vector<model::AdapterParams> Federation::TrainClients(
    const FederationState& state, std::vector<std::vector<StepTrace>>& traces) const {
  const std::size_t k = clients_.size();
  std::vector<model::AdapterParams> local(k);
  traces.assign(k, {});
  const bool want_trace = cfg_.UsesDp();
  auto train_one = [&](std::size_t c) {
    const uint64_t stream =
        DeriveSeed(cfg_.master_seed, "client", clients_[c].client_id, state.rounds_completed);
    local[c] = LocalTrain(backbone_, state.global, clients_[c], cfg_, sigma_, stream,
                          want_trace ? &traces[c] : nullptr);
    for (StepTrace& t : traces[c]) t.round = state.rounds_completed + 1;
  };

  const std::size_t workers = std::min(cfg_.client_threads, k);
  if (workers <= 1) {
    for (std::size_t c = 0; c < k; ++c) train_one(c);
    return local;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < k; c += workers) train_one(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return local;
}

RoundOutput Federation::RunRound(const FederationState& state) const {
  RoundOutput out;
  std::vector<std::vector<StepTrace>> traces;
  const std::vector<model::AdapterParams> local = TrainClients(state, traces);
  for (auto& t : traces) out.trace.insert(out.trace.end(), t.begin(), t.end());

  const ParamVector global_flat = state.global.Flatten();
  std::vector<ParamVector> sent;
  sent.reserve(local.size());
  for (const auto& p : local) {
    ParamVector v = p.Flatten();
    if (cfg_.transmit == TransmitMode::kDelta) v -= global_flat;
    sent.push_back(std::move(v));
  }

  if (cfg_.UsesSecAgg()) {
    const uint64_t round_id = state.rounds_completed;
    const secagg::PairwiseSeeds seeds = secagg::PairwiseSeeds::Provision(
        DeriveSeed(cfg_.master_seed, "secagg"), round_id, participants_);
    std::vector<secagg::MaskedUpdate> masked;
    masked.reserve(sent.size());
    for (std::size_t c = 0; c < sent.size(); ++c) {
      const secagg::QuantizedVector q = secagg::Quantize(sent[c], cfg_.quant);
      out.clamped += q.clamped;
      const std::vector<uint64_t> mask = secagg::GenerateMask(
          round_id, clients_[c].client_id, participants_, seeds, sent[c].size());
      masked.push_back(secagg::MaskUpdate(clients_[c].client_id, q.values, mask,
                                          sent[c].layout(), cfg_.quant));
    }
    out.aggregate = secagg::AggregateMasked(masked, participants_);
  } else {
    out.aggregate = FedAvg(sent);
  }

  ParamVector next = out.aggregate;
  if (cfg_.transmit == TransmitMode::kDelta) next += global_flat;
  out.state.global = model::AdapterParams::Unflatten(next, backbone_.spec());
  out.state.rounds_completed = state.rounds_completed + 1;

  const Evaluation train = Evaluate(backbone_, out.state.global, train_union_);
  const Evaluation test = Evaluate(backbone_, out.state.global, test_set_);
  out.metrics.round = out.state.rounds_completed;
  out.metrics.global_train_loss = train.loss;
  out.metrics.test_accuracy = test.accuracy;
  out.metrics.test_f1 = test.f1;
  out.metrics.epsilon_spent = EpsilonAfterRounds(out.state.rounds_completed);
  out.metrics.bytes_up_per_client = BytesUpPerClient();
  out.metrics.bytes_down_per_client = BytesDownPerClient();
  return out;
}

std::vector<RoundMetrics> Federation::Run(
    const model::AdapterParams& initial,
    const std::function<void(const RoundOutput&)>& on_round) const {
  std::vector<RoundMetrics> rows;
  rows.reserve(cfg_.rounds);
  FederationState state{initial, 0};
  for (std::size_t r = 0; r < cfg_.rounds; ++r) {
    RoundOutput out = RunRound(state);
    if (on_round) on_round(out);
    rows.push_back(out.metrics);
    state = std::move(out.state);
  }
  return rows;
}

CommCost ComputeCommCost(double trainable, double total, double bytes_per_param) {
  if (!(trainable > 0) || !(total >= trainable)) {
    throw ConfigError("comm cost requires 0 < trainable <= total");
  }
  if (!(bytes_per_param > 0)) throw ConfigError("bytes_per_param must be > 0");
  return {trainable * bytes_per_param, total * bytes_per_param, total / trainable};
}

}  // namespace privfed::federation
