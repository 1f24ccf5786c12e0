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
#include "privfed/harness/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "privfed/errors.h"

namespace privfed::harness {
namespace {

using federation::PrivacyMode;

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class LineError {
 public:
  LineError(std::size_t line, std::string_view key) : line_(line), key_(key) {}
  [[noreturn]] void Fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + key_ + ": " + what);
  }

 private:
  std::size_t line_;
  std::string key_;
};

double ParseReal(std::string_view v, const LineError& where) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    where.Fail("expected a real number, got '" + std::string(v) + "'");
  }
  return out;
}

long long ParseInt(std::string_view v, const LineError& where) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    where.Fail("expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t ParseCount(std::string_view key, std::string_view v,
                       const LineError& where, long long min_value) {
  const long long n = ParseInt(v, where);
  if (n < min_value) {
    throw ConfigError(std::string(key) + " must be >= " + std::to_string(min_value) +
                      " (got " + std::string(v) + ")");
  }
  return static_cast<std::size_t>(n);
}

uint64_t ParseU64(std::string_view v, const LineError& where) {
  uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    where.Fail("expected an unsigned 64-bit integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<PrivacyMode> ParseArms(std::string_view v, const LineError& where) {
  std::vector<PrivacyMode> arms;
  std::set<PrivacyMode> seen;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = Trim(v.substr(0, comma));
    PrivacyMode mode;
    if (item == "baseline") {
      mode = PrivacyMode::kNone;
    } else if (item == "sa_only") {
      mode = PrivacyMode::kSa;
    } else if (item == "dp_only") {
      mode = PrivacyMode::kDp;
    } else if (item == "dp_sa") {
      mode = PrivacyMode::kDpSa;
    } else {
      where.Fail("unknown arm '" + std::string(item) + "'");
    }
    if (!seen.insert(mode).second) where.Fail("repeated arm '" + std::string(item) + "'");
    arms.push_back(mode);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (arms.empty()) where.Fail("at least one arm is required");
  return arms;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, const LineError&)>;

const std::map<std::string, Setter, std::less<>>& Setters() {
  static const auto* table = new std::map<std::string, Setter, std::less<>>{
      {"num_clients", [](auto& c, auto v, auto& w) { c.federation.num_clients = ParseCount("num_clients", v, w, 1); }},
      {"rounds", [](auto& c, auto v, auto& w) { c.federation.rounds = ParseCount("rounds", v, w, 1); }},
      {"local_epochs", [](auto& c, auto v, auto& w) { c.federation.local_epochs = ParseCount("local_epochs", v, w, 1); }},
      {"batch_size", [](auto& c, auto v, auto& w) { c.federation.batch_size = ParseCount("batch_size", v, w, 1); }},
      {"learning_rate", [](auto& c, auto v, auto& w) { c.federation.learning_rate = ParseReal(v, w); }},
      {"weight_decay", [](auto& c, auto v, auto& w) { c.federation.weight_decay = ParseReal(v, w); }},
      {"optimizer", [](auto& c, auto v, auto&) { c.federation.optimizer = federation::ParseOptimizerKind(v); }},
      {"privacy_mode", [](auto& c, auto v, auto&) { c.federation.privacy_mode = federation::ParsePrivacyMode(v); }},
      {"target_epsilon", [](auto& c, auto v, auto& w) { c.target_epsilon = ParseReal(v, w); }},
      {"delta", [](auto& c, auto v, auto& w) { c.delta = ParseReal(v, w); }},
      {"clip_norm", [](auto& c, auto v, auto& w) { c.clip_norm = ParseReal(v, w); }},
      {"noise_multiplier", [](auto& c, auto v, auto& w) { c.federation.noise_multiplier = ParseReal(v, w); }},
      {"quant_scale", [](auto& c, auto v, auto& w) { c.federation.quant.scale = ParseReal(v, w); }},
      {"quant_clamp", [](auto& c, auto v, auto& w) { c.federation.quant.clamp_bound = ParseReal(v, w); }},
      {"master_seed", [](auto& c, auto v, auto& w) { c.federation.master_seed = ParseU64(v, w); }},
      {"batch_sampling", [](auto& c, auto v, auto&) { c.federation.batch_sampling = federation::ParseBatchSampling(v); }},
      {"transmit", [](auto& c, auto v, auto&) { c.federation.transmit = federation::ParseTransmitMode(v); }},
      {"client_threads", [](auto& c, auto v, auto& w) { c.federation.client_threads = ParseCount("client_threads", v, w, 1); }},
      {"n_total", [](auto& c, auto v, auto& w) { c.dataset.n_total = ParseCount("n_total", v, w, 1); }},
      {"class_margin", [](auto& c, auto v, auto& w) { c.dataset.class_margin = ParseReal(v, w); }},
      {"noise_level", [](auto& c, auto v, auto& w) { c.dataset.noise_level = ParseReal(v, w); }},
      {"test_fraction", [](auto& c, auto v, auto& w) { c.dataset.test_fraction = ParseReal(v, w); }},
      {"input_dim", [](auto& c, auto v, auto& w) { c.model.input_dim = ParseCount("input_dim", v, w, 1); }},
      {"feature_dim", [](auto& c, auto v, auto& w) { c.model.feature_dim = ParseCount("feature_dim", v, w, 1); }},
      {"lora_rank", [](auto& c, auto v, auto& w) { c.model.lora_rank = ParseCount("lora_rank", v, w, 1); }},
      {"output_dir", [](auto& c, auto v, auto& w) {
         if (v.empty()) w.Fail("must be nonempty");
         c.output_dir = std::string(v);
       }},
      {"ablation_arms", [](auto& c, auto v, auto& w) { c.ablation_arms = ParseArms(v, w); }},
  };
  return *table;
}

}  // namespace

std::string FormatReal(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string_view ArmName(federation::PrivacyMode mode) {
  switch (mode) {
    case PrivacyMode::kNone: return "baseline";
    case PrivacyMode::kSa: return "sa_only";
    case PrivacyMode::kDp: return "dp_only";
    case PrivacyMode::kDpSa: return "dp_sa";
  }
  return "?";
}

std::size_t ExperimentConfig::train_size() const {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(dataset.n_total) * (1.0 - dataset.test_fraction)));
}

void ExperimentConfig::Validate() const {
  federation::FederationConfig fed = federation;
  fed.privacy.reset();
  fed.privacy_mode = PrivacyMode::kNone;
  fed.Validate();
  if (federation.privacy.has_value()) {
    throw ConfigError("federation.privacy must be empty; use target_epsilon");
  }
  const bool dp = federation.UsesDp();
  if (dp && !target_epsilon) {
    throw ConfigError("target_epsilon must be set when privacy_mode is " +
                      std::string(federation::ToString(federation.privacy_mode)));
  }
  if (target_epsilon && !(*target_epsilon > 0)) {
    throw ConfigError("target_epsilon must be > 0");
  }
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0, 1)");
  if (!(clip_norm > 0)) throw ConfigError("clip_norm must be > 0");
  model.Validate();
  if (model.input_dim < 2) throw ConfigError("input_dim must be >= 2");
  if (dataset.n_total % 2 != 0) throw ConfigError("n_total must be even");
  if (!(dataset.class_margin >= 0)) throw ConfigError("class_margin must be >= 0");
  if (!(dataset.noise_level >= 0)) throw ConfigError("noise_level must be >= 0");
  if (!(dataset.test_fraction > 0 && dataset.test_fraction <= 0.5)) {
    throw ConfigError("test_fraction must lie in (0, 0.5]");
  }
  const double exact = static_cast<double>(dataset.n_total) * (1.0 - dataset.test_fraction);
  if (std::abs(exact - std::round(exact)) > 1e-9 || train_size() == 0 ||
      train_size() % federation.num_clients != 0) {
    throw ConfigError("test_fraction: n_total * (1 - test_fraction) must be a whole "
                      "multiple of num_clients");
  }
  if (test_size() == 0) throw ConfigError("test_fraction leaves an empty test set");
  if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
  if (ablation_arms.empty()) throw ConfigError("ablation_arms must be nonempty");
}

federation::FederationConfig ExperimentConfig::ForMode(PrivacyMode mode) const {
  federation::FederationConfig fed = federation;
  fed.privacy_mode = mode;
  fed.privacy.reset();
  if (fed.UsesDp()) {
    if (!target_epsilon) {
      throw ConfigError("target_epsilon must be set for arm " + std::string(ArmName(mode)));
    }
    privacy::PrivacySpec spec;
    spec.target_epsilon = *target_epsilon;
    spec.delta = delta;
    spec.clip_norm = clip_norm;
    fed.privacy = spec;
  }
  return fed;
}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const LineError where(line_no, key);
    const auto it = Setters().find(key);
    if (it == Setters().end()) where.Fail("unknown key");
    if (!seen.insert(std::string(key)).second) where.Fail("repeated key");
    if (value.empty()) where.Fail("missing value");
    try {
      it->second(cfg, value, where);
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      if (what.starts_with("line ")) throw;
      throw ConfigError("line " + std::to_string(line_no) + ": " + what);
    }
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseConfig(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& f = c.federation;
  out << "num_clients = " << f.num_clients << '\n'
      << "rounds = " << f.rounds << '\n'
      << "local_epochs = " << f.local_epochs << '\n'
      << "batch_size = " << f.batch_size << '\n'
      << "learning_rate = " << FormatReal(f.learning_rate) << '\n'
      << "weight_decay = " << FormatReal(f.weight_decay) << '\n'
      << "optimizer = " << federation::ToString(f.optimizer) << '\n'
      << "privacy_mode = " << federation::ToString(f.privacy_mode) << '\n';
  if (c.target_epsilon) out << "target_epsilon = " << FormatReal(*c.target_epsilon) << '\n';
  out << "delta = " << FormatReal(c.delta) << '\n'
      << "clip_norm = " << FormatReal(c.clip_norm) << '\n';
  if (f.noise_multiplier) out << "noise_multiplier = " << FormatReal(*f.noise_multiplier) << '\n';
  out << "quant_scale = " << FormatReal(f.quant.scale) << '\n'
      << "quant_clamp = " << FormatReal(f.quant.clamp_bound) << '\n'
      << "master_seed = " << f.master_seed << '\n'
      << "batch_sampling = " << federation::ToString(f.batch_sampling) << '\n'
      << "transmit = " << federation::ToString(f.transmit) << '\n'
      << "client_threads = " << f.client_threads << '\n'
      << "n_total = " << c.dataset.n_total << '\n'
      << "class_margin = " << FormatReal(c.dataset.class_margin) << '\n'
      << "noise_level = " << FormatReal(c.dataset.noise_level) << '\n'
      << "test_fraction = " << FormatReal(c.dataset.test_fraction) << '\n'
      << "input_dim = " << c.model.input_dim << '\n'
      << "feature_dim = " << c.model.feature_dim << '\n'
      << "lora_rank = " << c.model.lora_rank << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "ablation_arms = ";
  for (std::size_t i = 0; i < c.ablation_arms.size(); ++i) {
    out << (i ? "," : "") << ArmName(c.ablation_arms[i]);
  }
  out << '\n';
  return out.str();
}

}  // namespace privfed::harness
