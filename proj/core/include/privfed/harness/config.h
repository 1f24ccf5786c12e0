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
#ifndef PRIVFED_HARNESS_CONFIG_H_
#define PRIVFED_HARNESS_CONFIG_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privfed/adapter_model.h"
#include "privfed/federation.h"

namespace privfed::harness {

struct DatasetConfig {
  std::size_t n_total = 2000;
  double class_margin = 2.0;
  double noise_level = 1.0;
  double test_fraction = 0.2;

  bool operator==(const DatasetConfig&) const = default;
};

// Everything needed to run one experiment or an ablation. The dataset,
// backbone, partition and adapter-initialization seeds are all derived from
// federation.master_seed with fixed role tags, so arms that share a master
// seed share data and initial parameters.
struct ExperimentConfig {
  // federation.privacy is always empty here; it is built per arm from the
  // flat privacy fields below.
  federation::FederationConfig federation;
  std::optional<double> target_epsilon;
  double delta = 1e-5;
  double clip_norm = 1.0;
  DatasetConfig dataset;
  // Only the dimensions are read; the model seed is derived.
  model::ModelSpec model;
  std::string output_dir = "out";
  std::vector<federation::PrivacyMode> ablation_arms = {
      federation::PrivacyMode::kNone, federation::PrivacyMode::kSa,
      federation::PrivacyMode::kDp, federation::PrivacyMode::kDpSa};

  // Throws ConfigError naming the offending field.
  void Validate() const;

  std::size_t train_size() const;
  std::size_t test_size() const { return dataset.n_total - train_size(); }

  // Federation settings for one arm, with privacy attached in DP modes.
  federation::FederationConfig ForMode(federation::PrivacyMode mode) const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Flat "key = value" text, one entry per line, '#' starts a comment.
// Unknown or repeated keys and malformed values raise ConfigError with the
// line number; missing keys keep their defaults. The result is validated.
ExperimentConfig ParseConfig(std::string_view text);

// Throws ConfigError naming the path if it cannot be read.
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Inverse of ParseConfig: every key, reals at round-trip precision.
std::string SerializeConfig(const ExperimentConfig& cfg);

// Shortest decimal form that parses back to the same double.
std::string FormatReal(double v);

std::string_view ArmName(federation::PrivacyMode mode);

}  // namespace privfed::harness

#endif  // PRIVFED_HARNESS_CONFIG_H_
