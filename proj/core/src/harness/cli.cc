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
#include "privfed/harness/cli.h"

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "privfed/analysis.h"
#include "privfed/errors.h"
#include "privfed/federation.h"
#include "privfed/harness/config.h"
#include "privfed/harness/experiment.h"
#include "privfed/harness/metrics_csv.h"
#include "privfed/privacy.h"
#include "privfed/secagg.h"

namespace privfed::harness {
namespace {

struct ExperimentArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
};

void AddExperimentOptions(CLI::App* cmd, ExperimentArgs& args) {
  cmd->add_option("--config", args.config_path, "Key-value config file (defaults if omitted)");
  cmd->add_option("--seed", args.seed, "Override master_seed");
  cmd->add_option("--out", args.out_dir, "Override output_dir");
  cmd->add_option("--threads", args.threads, "Override client_threads")
      ->check(CLI::PositiveNumber);
}

ExperimentConfig ResolveConfig(const ExperimentArgs& args) {
  ExperimentConfig cfg =
      args.config_path.empty() ? ParseConfig("") : LoadConfig(args.config_path);
  if (args.seed) cfg.federation.master_seed = *args.seed;
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  if (args.threads) cfg.federation.client_threads = *args.threads;
  cfg.Validate();
  return cfg;
}

void KeyValue(std::ostream& out, std::string_view key, double v) {
  out << key << '=' << FormatReal(v) << '\n';
}

int CmdRun(const ExperimentArgs& args, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(args);
  const ExperimentResult result = RunExperiment(cfg);
  const std::filesystem::path dir = cfg.output_dir;
  WriteFileAtomic(dir / "metrics.csv", FormatMetricsCsv(result.metrics));
  WriteFileAtomic(dir / "config.txt", SerializeConfig(cfg));
  out << "arm=" << result.arm << '\n';
  out << "rounds=" << result.metrics.size() << '\n';
  const auto& last = result.metrics.back();
  KeyValue(out, "final_test_accuracy", last.test_accuracy);
  KeyValue(out, "final_test_f1", last.test_f1);
  KeyValue(out, "epsilon_spent", last.epsilon_spent);
  KeyValue(out, "sigma", result.sigma);
  if (!result.trace.empty()) {
    WriteFileAtomic(dir / "snr_trace.csv", FormatTraceCsv(result.trace));
    if (result.sigma > 0) {
      KeyValue(out, "empirical_snr_mean", analysis::MeasureEmpiricalSnr(result.trace).mean);
    }
  }
  out << "metrics=" << (dir / "metrics.csv").string() << '\n';
  return kExitOk;
}

int CmdAblate(const ExperimentArgs& args, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(args);
  const AblationResult result = RunAblation(cfg);
  WriteAblation(result, cfg.output_dir);
  out << FormatAblationSummary(result);
  return kExitOk;
}

struct CalibrateArgs {
  double epsilon = 0;
  double delta = 1e-5;
  double q = 0.8;
  uint64_t steps = 1600;
};

int CmdCalibrate(const CalibrateArgs& a, std::ostream& out) {
  privacy::PrivacySpec spec;
  spec.target_epsilon = a.epsilon;
  spec.delta = a.delta;
  spec.sampling_rate = a.q;
  spec.total_steps = a.steps;
  const privacy::NoiseCalibration cal = privacy::CalibrateSigma(spec);
  KeyValue(out, "sigma", cal.sigma);
  KeyValue(out, "achieved_epsilon", cal.achieved_epsilon);
  KeyValue(out, "best_order", cal.best_order);
  return kExitOk;
}

struct SnrArgs {
  analysis::SnrInputs inputs;
  double n_min = 100;
  std::optional<double> n_min_hi;
  std::string sweep_csv;
};

int CmdSnr(SnrArgs a, std::ostream& out) {
  a.inputs.n_min = {a.n_min, a.n_min_hi.value_or(a.n_min)};
  const analysis::SnrReport r = analysis::EffectiveSnr(a.inputs);
  KeyValue(out, "base_snr", r.base_snr);
  if (!a.n_min_hi) {
    KeyValue(out, "eff_factor", r.eff_factor.lo);
    KeyValue(out, "snr_eff", r.snr_eff.lo);
    KeyValue(out, "amplification", r.amplification.lo);
  } else {
    KeyValue(out, "eff_factor_lo", r.eff_factor.lo);
    KeyValue(out, "eff_factor_hi", r.eff_factor.hi);
    KeyValue(out, "snr_eff_lo", r.snr_eff.lo);
    KeyValue(out, "snr_eff_hi", r.snr_eff.hi);
    const analysis::Range amp = analysis::AmplificationRange(a.inputs);
    KeyValue(out, "amplification_min", amp.lo);
    KeyValue(out, "amplification_max", amp.hi);
  }
  if (!a.sweep_csv.empty()) {
    std::ostringstream csv;
    csv << "n_min,eff_factor,snr_eff,amplification\n";
    const double lo = a.inputs.n_min.lo;
    const double hi = a.inputs.n_min.hi;
    const auto steps = static_cast<long long>(std::floor(hi - lo));
    for (long long i = 0; i <= steps; ++i) {
      const double n_min = lo + static_cast<double>(i);
      const double f = analysis::EffFactor(a.inputs.p_train, a.inputs.p_total,
                                           a.inputs.n_client, n_min);
      csv << FormatReal(n_min) << ',' << FormatReal(f) << ','
          << FormatReal(r.base_snr * f) << ',' << FormatReal(1.0 / f) << '\n';
    }
    WriteFileAtomic(a.sweep_csv, csv.str());
    out << "sweep_csv=" << a.sweep_csv << '\n';
  }
  return kExitOk;
}

struct SecAggArgs {
  std::size_t clients = 5;
  std::size_t length = 57;
  std::size_t trials = 100;
  uint64_t seed = 0;
  secagg::QuantizationSpec quant;
};

int CmdSecAggCheck(const SecAggArgs& a, std::ostream& out) {
  const secagg::CheckReport r =
      secagg::RunPipelineCheck(a.clients, a.length, a.trials, a.seed, a.quant);
  out << "result=" << (r.passed() ? "pass" : "fail") << '\n';
  out << "trials=" << r.trials << '\n';
  out << "failures=" << r.failures << '\n';
  KeyValue(out, "max_deviation", r.max_deviation);
  KeyValue(out, "deviation_bound", 0.5 / a.quant.scale);
  return r.passed() ? kExitOk : kExitRuntime;
}

struct CommCostArgs {
  double trainable = 0;
  double total = 0;
  double bytes_per_param = 4;
};

int CmdCommCost(const CommCostArgs& a, std::ostream& out) {
  const federation::CommCost c =
      federation::ComputeCommCost(a.trainable, a.total, a.bytes_per_param);
  const model::ParamCounts counts = model::CountParams(a.trainable, a.total);
  out << "reduction=" << FormatOneDecimal(c.reduction) << '\n';
  KeyValue(out, "reduction_exact", c.reduction);
  out << "fraction_percent=" << FormatOneDecimal(100.0 * counts.fraction) << '\n';
  KeyValue(out, "fraction", counts.fraction);
  out << "bytes_peft=" << static_cast<uint64_t>(std::llround(c.bytes_peft)) << '\n';
  out << "bytes_full=" << static_cast<uint64_t>(std::llround(c.bytes_full)) << '\n';
  KeyValue(out, "mb_peft", c.bytes_peft / 1e6);
  KeyValue(out, "mb_full", c.bytes_full / 1e6);
  return kExitOk;
}

}  // namespace

std::string FormatOneDecimal(double x) {
  const double truncated = std::floor(x * 10.0 + 1e-9) / 10.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", truncated);
  return buf;
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"privfed: federated DP / secure-aggregation simulator"};
  app.require_subcommand(1);

  ExperimentArgs run_args;
  auto* run = app.add_subcommand("run", "Run one experiment and write metrics.csv");
  AddExperimentOptions(run, run_args);

  ExperimentArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Run the baseline/SA/DP/DP+SA ablation");
  AddExperimentOptions(ablate, ablate_args);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the DP noise multiplier");
  calibrate->add_option("--epsilon", cal.epsilon, "Target epsilon")->required();
  calibrate->add_option("--delta", cal.delta, "Target delta")->capture_default_str();
  calibrate->add_option("--q", cal.q, "Sampling rate")->capture_default_str();
  calibrate->add_option("--steps", cal.steps, "Number of DP-SGD steps")->capture_default_str();

  SnrArgs snr_args;
  auto* snr = app.add_subcommand("snr", "Effective SNR arithmetic");
  snr->add_option("--mean-grad-norm", snr_args.inputs.mean_grad_norm, "||E[g]||")->capture_default_str();
  snr->add_option("--sigma", snr_args.inputs.sigma, "Noise multiplier")->capture_default_str();
  snr->add_option("--clip", snr_args.inputs.clip_norm, "Clip norm C")->capture_default_str();
  snr->add_option("--n", snr_args.inputs.n, "Local dataset size")->capture_default_str();
  snr->add_option("--p-train", snr_args.inputs.p_train, "Trainable parameters or fraction")->capture_default_str();
  snr->add_option("--p-total", snr_args.inputs.p_total, "Total parameters (1 for a fraction)")->capture_default_str();
  snr->add_option("--n-client", snr_args.inputs.n_client, "Participating clients")->capture_default_str();
  snr->add_option("--n-min", snr_args.n_min, "N_min, or lower end of its range")->capture_default_str();
  snr->add_option("--n-min-hi", snr_args.n_min_hi, "Upper end of the N_min range");
  snr->add_option("--sweep-csv", snr_args.sweep_csv, "Write a sweep over N_min to this CSV");

  SecAggArgs sa;
  auto* secagg_check = app.add_subcommand("secagg-check", "Masked vs unmasked aggregation check");
  secagg_check->add_option("--clients", sa.clients, "Clients K")->capture_default_str()->check(CLI::PositiveNumber);
  secagg_check->add_option("--length", sa.length, "Vector length")->capture_default_str()->check(CLI::PositiveNumber);
  secagg_check->add_option("--trials", sa.trials, "Random trials")->capture_default_str();
  secagg_check->add_option("--seed", sa.seed, "Seed")->capture_default_str();
  secagg_check->add_option("--scale", sa.quant.scale, "Quantization scale")->capture_default_str();
  secagg_check->add_option("--clamp", sa.quant.clamp_bound, "Quantization clamp bound")->capture_default_str();

  CommCostArgs cc;
  auto* comm_cost = app.add_subcommand("comm-cost", "Per-round communication of PEFT vs full FL");
  comm_cost->add_option("--trainable", cc.trainable, "Trainable parameters")->required();
  comm_cost->add_option("--total", cc.total, "Total parameters")->required();
  comm_cost->add_option("--bytes-per-param", cc.bytes_per_param, "Bytes per parameter")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*run) return CmdRun(run_args, out);
    if (*ablate) return CmdAblate(ablate_args, out);
    if (*calibrate) return CmdCalibrate(cal, out);
    if (*snr) return CmdSnr(snr_args, out);
    if (*secagg_check) return CmdSecAggCheck(sa, out);
    if (*comm_cost) return CmdCommCost(cc, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace privfed::harness
