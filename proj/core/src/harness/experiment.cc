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
#include "privfed/harness/experiment.h"

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>

#include "privfed/errors.h"
#include "privfed/harness/dataset.h"
#include "privfed/harness/metrics_csv.h"
#include "privfed/rng.h"

namespace privfed::harness {
namespace {

using federation::PrivacyMode;

class Fingerprint {
 public:
  void Add(double v) { Add(std::bit_cast<uint64_t>(v)); }
  void Add(uint64_t v) { h_ = Mix64(h_ ^ Mix64(v)); }
  template <typename Derived>
  void Add(const Eigen::MatrixBase<Derived>& m) {
    Add(static_cast<uint64_t>(m.rows()));
    Add(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) Add(static_cast<double>(m(i, j)));
    }
  }
  void Add(const model::LabeledExample& ex) {
    Add(ex.x);
    Add(static_cast<uint64_t>(ex.label));
  }
  uint64_t value() const { return h_; }

 private:
  uint64_t h_ = 0x7072697666656400ULL;
};

template <typename Fn>
auto WithArm(std::string_view arm, Fn&& fn) {
  const std::string prefix = "arm " + std::string(arm) + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(prefix + e.what());
  } catch (const CalibrationError& e) {
    throw CalibrationError(prefix + e.what());
  }
}

}  // namespace

PreparedSetup Prepare(const ExperimentConfig& cfg) {
  cfg.Validate();
  const uint64_t master = cfg.federation.master_seed;
  std::vector<model::LabeledExample> data =
      SynthDataset(cfg.dataset.n_total, cfg.model.input_dim, cfg.dataset.class_margin,
                   cfg.dataset.noise_level, DeriveSeed(master, "data"));
  std::mt19937_64 split_rng(DeriveSeed(master, "split"));
  std::shuffle(data.begin(), data.end(), split_rng);
  const auto n_test = static_cast<std::ptrdiff_t>(cfg.test_size());
  std::vector<model::LabeledExample> test(data.begin(), data.begin() + n_test);
  data.erase(data.begin(), data.begin() + n_test);

  model::ModelSpec spec = cfg.model;
  spec.seed = DeriveSeed(master, "backbone");
  PreparedSetup setup{
      model::FrozenBackbone::Build(spec),
      federation::Partition(std::move(data), cfg.federation.num_clients,
                            DeriveSeed(master, "partition")),
      std::move(test),
      model::AdapterParams::Init(spec, DeriveSeed(master, "init")),
      0};

  Fingerprint fp;
  fp.Add(setup.backbone.weights());
  for (const auto& shard : setup.shards) {
    fp.Add(static_cast<uint64_t>(shard.client_id));
    for (const auto& ex : shard.examples) fp.Add(ex);
  }
  for (const auto& ex : setup.test_set) fp.Add(ex);
  const ParamVector initial_flat = setup.initial.Flatten();
  for (double v : initial_flat.values()) fp.Add(v);
  setup.fingerprint = fp.value();
  return setup;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg) {
  return RunExperiment(cfg, cfg.federation.privacy_mode);
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, PrivacyMode mode) {
  PreparedSetup setup = Prepare(cfg);
  ExperimentResult result;
  result.arm = std::string(ArmName(mode));
  result.setup_fingerprint = setup.fingerprint;
  const federation::Federation fed(cfg.ForMode(mode), setup.backbone,
                                   std::move(setup.shards), std::move(setup.test_set));
  result.sigma = fed.sigma();
  model::AdapterParams last = setup.initial;
  result.metrics = fed.Run(setup.initial, [&](const federation::RoundOutput& out) {
    last = out.state.global;
    result.trace.insert(result.trace.end(), out.trace.begin(), out.trace.end());
  });
  result.final_params = std::move(last);
  return result;
}

AblationResult RunAblation(const ExperimentConfig& cfg) {
  cfg.Validate();
  AblationResult result;
  for (PrivacyMode mode : cfg.ablation_arms) {
    const std::string_view arm = ArmName(mode);
    result.arms.push_back(WithArm(arm, [&] { return RunExperiment(cfg, mode); }));
    if (result.arms.back().setup_fingerprint != result.arms.front().setup_fingerprint) {
      throw Error("arm " + std::string(arm) +
                  ": data or initial parameters differ from arm " + result.arms.front().arm);
    }
  }
  return result;
}

std::string FormatAblationSummary(const AblationResult& result) {
  std::ostringstream out;
  out << "arm,final_test_accuracy,final_test_f1,epsilon_spent,sigma\n";
  for (const auto& arm : result.arms) {
    const federation::RoundMetrics last =
        arm.metrics.empty() ? federation::RoundMetrics{} : arm.metrics.back();
    out << arm.arm << ',' << FormatReal(last.test_accuracy) << ','
        << FormatReal(last.test_f1) << ',' << FormatReal(last.epsilon_spent) << ','
        << FormatReal(arm.sigma) << '\n';
  }
  return out.str();
}

void WriteAblation(const AblationResult& result, const std::filesystem::path& dir) {
  for (const auto& arm : result.arms) {
    WriteFileAtomic(dir / (arm.arm + ".csv"), FormatMetricsCsv(arm.metrics));
  }
  WriteFileAtomic(dir / "summary.csv", FormatAblationSummary(result));
}

}  // namespace privfed::harness
