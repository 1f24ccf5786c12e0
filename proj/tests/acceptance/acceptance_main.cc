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
// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "privfed/adapter_model.h"
#include "privfed/analysis.h"
#include "privfed/federation.h"
#include "privfed/harness/cli.h"
#include "privfed/harness/config.h"
#include "privfed/harness/dataset.h"
#include "privfed/harness/experiment.h"
#include "privfed/privacy.h"
#include "privfed/secagg.h"

namespace privfed {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::map<std::string, std::string> RunCliValues(std::vector<std::string> args, int* code) {
  args.insert(args.begin(), "privfed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  *code = harness::RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  std::map<std::string, std::string> values;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) values[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return values;
}

// --- AC1 -----------------------------------------------------------------
Outcome CommunicationAccounting() {
  const federation::CommCost cost = federation::ComputeCommCost(5.5e6, 156e6);
  const double fraction = model::CountParams(5.5e6, 156e6).fraction;
  int code = 0;
  auto v = RunCliValues({"comm-cost", "--trainable", "5500000", "--total", "156000000"}, &code);
  const std::string reduction = v["reduction"];
  const std::string percent = v["fraction_percent"];
  const bool pass = code == 0 && reduction == "28.3" && percent == "3.5" &&
                    std::abs(cost.reduction - 28.3) <= 0.1 &&
                    std::abs(100 * fraction - 3.5) <= 0.1;
  return {pass, Fmt("reduction=%.4f reported=%s fraction=%.4f%% reported=%s%%",
                    cost.reduction, reduction.c_str(), 100 * fraction, percent.c_str())};
}

// --- AC2 -----------------------------------------------------------------
Outcome SnrArithmetic() {
  const double factor = analysis::EffFactor(0.035, 1.0, 40, 100);
  analysis::SnrInputs in;
  in.p_train = 0.035;
  in.p_total = 1.0;
  in.n_client = 40;
  in.n_min = {100, 200};
  const analysis::Range amp = analysis::AmplificationRange(in);
  const bool pass = factor >= 0.117 && factor <= 0.119 && amp.lo >= 8.0 && amp.hi <= 13.0;
  return {pass, Fmt("eff_factor=%.5f amplification=[%.3f, %.3f]", factor, amp.lo, amp.hi)};
}

// --- AC3 -----------------------------------------------------------------
Outcome AccountantCorrectness() {
  const std::vector<double>& orders = privacy::DefaultOrders();
  double worst = 0.0;
  bool pass = true;
  std::string detail;
  for (double sigma : {0.5, 1.0, 2.0, 10.0}) {
    const double eps = privacy::AccountEpsilon(sigma, 1.0, 1, 1e-5).epsilon;
    privacy::RdpCurve analytic{orders, {}};
    privacy::RdpCurve numeric{orders, {}};
    for (double a : orders) {
      analytic.values.push_back(a / (2 * sigma * sigma));
      numeric.values.push_back(testing::NumericalGaussianRenyi(a, sigma));
    }
    const double e_analytic = privacy::RdpToEpsilon(analytic, 1e-5).epsilon;
    const double e_numeric = privacy::RdpToEpsilon(numeric, 1e-5).epsilon;
    const double err = std::max(std::abs(eps - e_analytic) / e_analytic,
                                std::abs(eps - e_numeric) / e_numeric);
    worst = std::max(worst, err);
    pass = pass && err <= 0.01;
  }
  // Continuous-order optimum for the large-sigma case.
  double dense = std::numeric_limits<double>::infinity();
  for (double a = 1.001; a <= 1000.0; a += 0.001) {
    dense = std::min(dense, a / 200.0 + std::log(1e5) / (a - 1));
  }
  const double eps10 = privacy::AccountEpsilon(10.0, 1.0, 1, 1e-5).epsilon;
  const double dense_err = std::abs(eps10 - dense) / dense;
  pass = pass && dense_err <= 0.01;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_sigma(std::log(0.5), std::log(50.0));
  std::uniform_real_distribution<double> log_q(std::log(1e-3), 0.0);
  std::uniform_int_distribution<uint64_t> steps(1, 5000);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double s = std::exp(log_sigma(rng));
    const double q = std::exp(log_q(rng));
    const uint64_t t = steps(rng);
    const double e = privacy::AccountEpsilon(s, q, t, 1e-5).epsilon;
    if (!(e <= privacy::AccountEpsilon(s, q, 2 * t, 1e-5).epsilon)) ++violations;
    if (!(e <= privacy::AccountEpsilon(s, std::min(1.0, 1.5 * q), t, 1e-5).epsilon)) ++violations;
    if (!(e >= privacy::AccountEpsilon(1.5 * s, q, t, 1e-5).epsilon)) ++violations;
  }
  pass = pass && violations == 0;
  return {pass, Fmt("max rel err vs analytic/integrated=%.2e, sigma=10 dense-grid rel err=%.2e, "
                    "monotonicity violations=%d/150",
                    worst, dense_err, violations)};
}

// --- AC4 -----------------------------------------------------------------
Outcome CalibrationInverse() {
  bool pass = true;
  std::string detail;
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {1.0, 5.0, 10.0}) {
    const privacy::NoiseCalibration cal =
        privacy::CalibrateSigma({eps, 1e-5, 1.0, 0.8, 1600});
    const double back = privacy::RdpToEpsilon(
        privacy::Compose(privacy::ComputeRdp(cal.sigma, 0.8), 1600), 1e-5).epsilon;
    pass = pass && back >= 0.99 * eps && back <= eps && cal.sigma < previous;
    previous = cal.sigma;
    detail += Fmt("eps=%g: sigma=%.4f achieved=%.6f; ", eps, cal.sigma, back);
  }
  return {pass, detail + "sigma strictly decreasing"};
}

// --- AC5 -----------------------------------------------------------------
Outcome SecureAggregationExactness() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  const secagg::QuantizationSpec quant;
  std::size_t trials = 0, mismatches = 0, nonzero_masks = 0;
  for (std::size_t k : {2u, 5u, 40u}) {
    std::vector<uint32_t> ids(k);
    for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<uint32_t>(i);
    for (std::size_t length : {10u, 57u, 1000u}) {
      const LayoutPtr layout = ParamLayout::FromSizes({{"u", length}});
      for (int t = 0; t < 100; ++t, ++trials) {
        secagg::PairwiseSeeds seeds(static_cast<uint64_t>(t));
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = a + 1; b < k; ++b) seeds.Set(ids[a], ids[b], rng());
        }
        std::vector<secagg::MaskedUpdate> masked;
        std::vector<int64_t> plain(length, 0);
        std::vector<uint64_t> mask_sum(length, 0);
        for (uint32_t id : ids) {
          ParamVector v(layout);
          for (double& x : v.values()) x = normal(rng);
          const secagg::QuantizedVector q = secagg::Quantize(v, quant);
          const auto mask = secagg::GenerateMask(static_cast<uint64_t>(t), id, ids, seeds, length);
          for (std::size_t c = 0; c < length; ++c) {
            plain[c] += q.values[c];
            mask_sum[c] += mask[c];
          }
          masked.push_back(secagg::MaskUpdate(id, q.values, mask, layout, quant));
        }
        std::shuffle(masked.begin(), masked.end(), rng);
        if (secagg::SumMasked(masked, ids) != plain) ++mismatches;
        for (uint64_t m : mask_sum) nonzero_masks += m != 0;
      }
    }
  }
  return {mismatches == 0 && nonzero_masks == 0,
          Fmt("trials=%zu aggregate mismatches=%zu nonzero mask-sum coordinates=%zu", trials,
              mismatches, nonzero_masks)};
}

// --- AC6 -----------------------------------------------------------------
Outcome FedAvgEquivalence() {
  const model::ModelSpec spec{16, 8, 4, 61};
  const model::FrozenBackbone bb = model::FrozenBackbone::Build(spec);
  model::AdapterParams init = model::AdapterParams::Init(spec, 62);
  init.b.setConstant(0.1);
  init.head_w.setConstant(0.2);
  const auto data = harness::SynthDataset(160, 16, 2.0, 1.0, 63);
  federation::FederationConfig cfg;
  cfg.num_clients = 4;
  cfg.local_epochs = 1;
  cfg.batch_size = 40;
  cfg.learning_rate = 0.5;
  cfg.weight_decay = 0.01;
  cfg.optimizer = federation::OptimizerKind::kSgd;
  const auto shards = federation::Partition(data, 4, 64);
  std::vector<model::AdapterParams> local;
  for (const auto& s : shards) {
    local.push_back(federation::LocalTrain(bb, init, s, cfg, 0.0, s.client_id));
  }
  const ParamVector fed = federation::FedAvg(std::span<const model::AdapterParams>(local)).Flatten();

  // Centralized oracle: one full-batch SGD step over the union.
  const ParamVector theta = init.Flatten();
  ParamVector grad(theta.layout());
  for (const auto& ex : data) grad += model::PerSampleGradient(bb, init, ex);
  grad *= 1.0 / static_cast<double>(data.size());
  ParamVector central = theta;
  central.AddScaled(grad, -cfg.learning_rate);
  central.AddScaled(theta, -cfg.learning_rate * cfg.weight_decay);
  const double rel = (fed - central).Norm() / central.Norm();
  const double rel_update = (fed - central).Norm() / (central - theta).Norm();
  return {rel <= 1e-9 && rel_update <= 1e-9,
          Fmt("relative error=%.2e (on the update: %.2e)", rel, rel_update)};
}

// --- AC7 -----------------------------------------------------------------
Outcome GradientFidelity() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 0.5);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t d = 2 + rng() % 10;
    const std::size_t k = 1 + rng() % 8;
    const std::size_t r = 1 + rng() % std::min(d, k);
    const model::FrozenBackbone bb = model::FrozenBackbone::Build({d, k, r, rng()});
    model::AdapterParams p = model::AdapterParams::Zero(bb.spec());
    for (Eigen::Index i = 0; i < p.a.size(); ++i) p.a.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < p.head_w.size(); ++i) p.head_w(i) = normal(rng);
    p.head_b = normal(rng);
    model::LabeledExample ex{Eigen::VectorXd(static_cast<Eigen::Index>(d)),
                             static_cast<int>(rng() % 2)};
    for (Eigen::Index i = 0; i < ex.x.size(); ++i) ex.x(i) = 2 * normal(rng);
    const ParamVector g = model::PerSampleGradient(bb, p, ex);
    const std::vector<double> fd = testing::FiniteDifferenceGradient(bb, p, ex);
    for (const Segment& s : g.layout()->segments()) {
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
        diff += (g[i] - fd[i]) * (g[i] - fd[i]);
        norm += g[i] * g[i];
      }
      worst = std::max(worst, norm > 0 ? std::sqrt(diff / norm) : std::sqrt(diff));
    }
  }
  return {worst <= 1e-5, Fmt("max per-segment relative error over 100 draws=%.2e", worst)};
}

// --- AC8 -----------------------------------------------------------------
Outcome DpMechanismStatistics() {
  const model::ModelSpec spec{2, 2, 1, 0};
  const LayoutPtr layout = model::AdapterLayout(spec);
  constexpr double kSigma = 1.5;
  constexpr double kClip = 1.0;
  constexpr std::size_t kBatch = 4;
  constexpr int kDraws = 10000;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ParamVector> batch(kBatch, ParamVector(layout));
  for (auto& g : batch) {
    for (double& x : g.values()) x = normal(rng);
  }
  ParamVector clipped_mean(layout);
  for (const auto& g : batch) clipped_mean += privacy::ClipGradient(g, kClip);
  clipped_mean *= 1.0 / kBatch;

  const std::size_t dim = layout->size();
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  RngStream stream(DeriveSeed(8, "ac8"));
  for (int n = 0; n < kDraws; ++n) {
    const ParamVector out = privacy::NoisyBatchGradient(batch, kClip, kSigma, stream);
    for (std::size_t c = 0; c < dim; ++c) {
      const double dev = out[c] - clipped_mean[c];
      sum[c] += dev;
      sum_sq[c] += dev * dev;
    }
  }
  const double sd = kSigma * kClip / kBatch;
  const double mean_bound = 3 * sd / std::sqrt(double{kDraws});
  double worst_mean = 0.0, worst_var = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double mean = sum[c] / kDraws;
    const double var = sum_sq[c] / kDraws - mean * mean;
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var / (sd * sd) - 1));
  }
  return {worst_mean <= mean_bound && worst_var <= 0.05,
          Fmt("%zu coords: max |mean dev|=%.2e (bound %.2e), max rel var err=%.2f%%", dim,
              worst_mean, mean_bound, 100 * worst_var)};
}

// --- AC9 -----------------------------------------------------------------
Outcome EndToEndOrdering() {
  const harness::ExperimentConfig cfg = testing::DeskConfig();
  const harness::AblationResult result = harness::RunAblation(cfg);
  std::map<std::string, double> acc;
  for (const auto& arm : result.arms) acc[arm.arm] = arm.metrics.back().test_accuracy;
  const double base = acc["baseline"], sa = acc["sa_only"], dp = acc["dp_only"],
               dp_sa = acc["dp_sa"];
  const bool a = base >= 0.90;
  const bool b = dp < base;
  const bool c = std::abs(sa - base) <= 0.01;
  const bool d = std::abs(dp_sa - dp) <= 0.02;
  return {a && b && c && d,
          Fmt("baseline=%.4f sa_only=%.4f dp_only=%.4f dp_sa=%.4f (sigma=%.3f at eps=1) "
              "[a:%s b:%s c:%s d:%s]",
              base, sa, dp, dp_sa, result.arms[2].sigma, a ? "ok" : "no", b ? "ok" : "no",
              c ? "ok" : "no", d ? "ok" : "no")};
}

// --- AC10 ----------------------------------------------------------------
std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome RunDeterminism() {
  const auto dir = std::filesystem::temp_directory_path() / "privfed_acceptance_ac10";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  harness::ExperimentConfig cfg = testing::DeskConfig();
  cfg.federation.privacy_mode = federation::PrivacyMode::kDpSa;
  std::ofstream(dir / "cfg.txt") << harness::SerializeConfig(cfg);
  const std::string config = (dir / "cfg.txt").string();
  std::vector<std::string> csvs;
  int codes = 0;
  for (const char* threads : {"1", "1", "4"}) {
    const std::string out = (dir / ("out" + std::to_string(csvs.size()))).string();
    int code = 0;
    RunCliValues({"run", "--config", config, "--seed", "7", "--out", out, "--threads", threads},
                 &code);
    codes |= code;
    csvs.push_back(ReadFile(std::filesystem::path(out) / "metrics.csv"));
  }
  const bool same = !csvs[0].empty() && csvs[0] == csvs[1] && csvs[0] == csvs[2];
  std::filesystem::remove_all(dir);
  return {codes == 0 && same,
          Fmt("3 runs (threads 1,1,4), %zu-byte metrics.csv, byte-identical=%s",
              csvs[0].size(), same ? "yes" : "no")};
}

// --- AC11 ----------------------------------------------------------------
Outcome CumulativeEpsilon() {
  harness::ExperimentConfig cfg = testing::DeskConfig();
  const harness::ExperimentResult result = harness::RunExperiment(cfg, federation::PrivacyMode::kDp);
  const std::size_t n = cfg.train_size() / cfg.federation.num_clients;
  const std::size_t b = cfg.federation.batch_size;
  const std::size_t per_round = cfg.federation.local_epochs * ((n + b - 1) / b);
  const double q = std::min(1.0, static_cast<double>(b) / static_cast<double>(n));
  // Independent accountant: per-order RDP in 50-digit arithmetic.
  std::vector<double> per_step;
  for (double a : privacy::DefaultOrders()) {
    per_step.push_back(testing::HighPrecisionSampledGaussianRdp(result.sigma, q, static_cast<int>(a)));
  }
  double worst = 0.0;
  for (const auto& m : result.metrics) {
    const double steps = static_cast<double>(m.round * per_round);
    double eps = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < per_step.size(); ++i) {
      const double a = privacy::DefaultOrders()[i];
      eps = std::min(eps, steps * per_step[i] + std::log(1 / cfg.delta) / (a - 1));
    }
    worst = std::max(worst, std::abs(m.epsilon_spent - eps));
  }
  return {worst <= 1e-9 && !result.metrics.empty(),
          Fmt("%zu rounds, T/round=%zu, q=%.2f, final eps=%.6f, max |diff|=%.2e",
              result.metrics.size(), per_round, q, result.metrics.back().epsilon_spent, worst)};
}

}  // namespace
}  // namespace privfed

int main() {
  using privfed::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1  communication accounting", privfed::CommunicationAccounting},
      {"AC2  SNR arithmetic", privfed::SnrArithmetic},
      {"AC3  accountant correctness", privfed::AccountantCorrectness},
      {"AC4  calibration inverse-consistency", privfed::CalibrationInverse},
      {"AC5  secure aggregation exactness", privfed::SecureAggregationExactness},
      {"AC6  FedAvg/centralized equivalence", privfed::FedAvgEquivalence},
      {"AC7  gradient fidelity", privfed::GradientFidelity},
      {"AC8  DP mechanism statistics", privfed::DpMechanismStatistics},
      {"AC9  end-to-end ordering", privfed::EndToEndOrdering},
      {"AC10 run determinism", privfed::RunDeterminism},
      {"AC11 cumulative epsilon reporting", privfed::CumulativeEpsilon},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %s: %s (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
