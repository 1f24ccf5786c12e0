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
#ifndef PRIVFED_HARNESS_EXPERIMENT_H_
#define PRIVFED_HARNESS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "privfed/adapter_model.h"
#include "privfed/federation.h"
#include "privfed/harness/config.h"

namespace privfed::harness {

// Data, backbone and initial adapters for an experiment. Depends only on
// the dataset/model fields and master_seed, never on the privacy mode.
struct PreparedSetup {
  model::FrozenBackbone backbone;
  std::vector<federation::ClientDataset> shards;
  std::vector<model::LabeledExample> test_set;
  model::AdapterParams initial;
  // Hash over shard contents, test set, backbone and initial parameters.
  uint64_t fingerprint = 0;
};

PreparedSetup Prepare(const ExperimentConfig& cfg);

struct ExperimentResult {
  std::string arm;
  std::vector<federation::RoundMetrics> metrics;
  model::AdapterParams final_params;
  double sigma = 0.0;
  uint64_t setup_fingerprint = 0;
  std::vector<federation::StepTrace> trace;  // DP modes only
};

// Runs cfg.federation.privacy_mode, or `mode` when given.
ExperimentResult RunExperiment(const ExperimentConfig& cfg);
ExperimentResult RunExperiment(const ExperimentConfig& cfg,
                               federation::PrivacyMode mode);

struct AblationResult {
  std::vector<ExperimentResult> arms;
};

// Runs every arm in cfg.ablation_arms on the same seed, data and initial
// parameters (verified via the setup fingerprint). Errors are rethrown with
// the arm name prefixed.
AblationResult RunAblation(const ExperimentConfig& cfg);

// arm,final_test_accuracy,final_test_f1,epsilon_spent,sigma
std::string FormatAblationSummary(const AblationResult& result);

// <dir>/<arm>.csv for every arm plus <dir>/summary.csv.
void WriteAblation(const AblationResult& result, const std::filesystem::path& dir);

}  // namespace privfed::harness

#endif  // PRIVFED_HARNESS_EXPERIMENT_H_
