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
#include "privfed/secagg.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "privfed/errors.h"
#include "privfed/rng.h"

namespace privfed::secagg {

void QuantizationSpec::Validate(std::size_t max_clients) const {
  if (!(scale > 0)) throw ConfigError("quant_scale must be > 0");
  if (!(clamp_bound > 0)) throw ConfigError("quant_clamp must be > 0");
  // 2^63 as a double is exact.
  if (clamp_bound * scale * static_cast<double>(std::max<std::size_t>(1, max_clients)) >=
      9223372036854775808.0) {
    throw ConfigError("quant_clamp * quant_scale * num_clients must stay below 2^63");
  }
}

QuantizedVector Quantize(const ParamVector& v, const QuantizationSpec& quant) {
  QuantizedVector out;
  out.values.reserve(v.size());
  for (double x : v.values()) {
    if (!std::isfinite(x)) throw InputError("cannot quantize a non-finite value");
    if (x > quant.clamp_bound || x < -quant.clamp_bound) {
      x = std::clamp(x, -quant.clamp_bound, quant.clamp_bound);
      ++out.clamped;
    }
    out.values.push_back(std::llround(x * quant.scale));
  }
  return out;
}

ParamVector Dequantize(std::span<const int64_t> sum, const LayoutPtr& layout,
                       const QuantizationSpec& quant, std::size_t num_clients) {
  if (num_clients == 0) throw InputError("cannot average over zero clients");
  const double denom = quant.scale * static_cast<double>(num_clients);
  std::vector<double> values(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    values[i] = static_cast<double>(sum[i]) / denom;
  }
  return ParamVector(layout, std::move(values));
}

PairwiseSeeds PairwiseSeeds::Provision(uint64_t master_seed, uint64_t round_id,
                                       std::span<const uint32_t> participants) {
  PairwiseSeeds seeds(round_id);
  for (std::size_t a = 0; a < participants.size(); ++a) {
    for (std::size_t b = a + 1; b < participants.size(); ++b) {
      const auto [lo, hi] = Key(participants[a], participants[b]);
      seeds.Set(lo, hi, DeriveSeed(master_seed, "pair", lo, hi));
    }
  }
  return seeds;
}

void PairwiseSeeds::Set(uint32_t i, uint32_t j, uint64_t seed) {
  if (i == j) throw ProtocolError("a client cannot share a pair seed with itself");
  seeds_[Key(i, j)] = seed;
}

std::optional<uint64_t> PairwiseSeeds::Get(uint32_t i, uint32_t j) const {
  auto it = seeds_.find(Key(i, j));
  if (it == seeds_.end()) return std::nullopt;
  return it->second;
}

void PairwiseSeeds::Erase(uint32_t i, uint32_t j) { seeds_.erase(Key(i, j)); }

std::vector<uint64_t> ExpandSeed(uint64_t seed, uint64_t round_id,
                                 std::size_t length) {
  const uint64_t key = Mix64(seed ^ Mix64(round_id ^ 0x5ec5a66ULL));
  std::vector<uint64_t> out(length);
  for (std::size_t c = 0; c < length; ++c) {
    out[c] = Mix64(key + 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(c) + 1));
  }
  return out;
}

std::vector<uint64_t> GenerateMask(uint64_t round_id, uint32_t client_id,
                                   std::span<const uint32_t> participants,
                                   const PairwiseSeeds& seeds,
                                   std::size_t length) {
  if (std::find(participants.begin(), participants.end(), client_id) ==
      participants.end()) {
    throw ProtocolError("client " + std::to_string(client_id) +
                        " is not a participant");
  }
  std::vector<uint64_t> mask(length, 0);
  for (uint32_t other : participants) {
    if (other == client_id) continue;
    const auto seed = seeds.Get(client_id, other);
    if (!seed) {
      throw ProtocolError("missing pair seed for clients " +
                          std::to_string(client_id) + " and " +
                          std::to_string(other));
    }
    const std::vector<uint64_t> stream = ExpandSeed(*seed, round_id, length);
    if (other > client_id) {
      for (std::size_t c = 0; c < length; ++c) mask[c] += stream[c];
    } else {
      for (std::size_t c = 0; c < length; ++c) mask[c] -= stream[c];
    }
  }
  return mask;
}

MaskedUpdate MaskUpdate(uint32_t client_id, std::span<const int64_t> quantized,
                        std::span<const uint64_t> mask, LayoutPtr layout,
                        const QuantizationSpec& quant) {
  if (quantized.size() != mask.size()) {
    throw ProtocolError("mask length does not match update length");
  }
  if (layout && layout->size() != quantized.size()) {
    throw ProtocolError("update length does not match layout");
  }
  MaskedUpdate out{client_id, std::vector<uint64_t>(quantized.size()),
                   std::move(layout), quant};
  for (std::size_t c = 0; c < quantized.size(); ++c) {
    out.payload[c] = std::bit_cast<uint64_t>(quantized[c]) + mask[c];
  }
  return out;
}

std::vector<int64_t> SumMasked(std::span<const MaskedUpdate> updates,
                               std::span<const uint32_t> participants) {
  if (updates.empty()) throw ProtocolError("no updates to aggregate");
  if (updates.size() != participants.size()) {
    throw ProtocolError("expected " + std::to_string(participants.size()) +
                        " updates, received " + std::to_string(updates.size()));
  }
  for (uint32_t id : participants) {
    const auto n = std::count_if(updates.begin(), updates.end(),
                                 [id](const MaskedUpdate& u) { return u.client_id == id; });
    if (n != 1) {
      throw ProtocolError("missing or duplicate update from client " +
                          std::to_string(id));
    }
  }
  const MaskedUpdate& first = updates.front();
  std::vector<uint64_t> acc(first.payload.size(), 0);
  for (const MaskedUpdate& u : updates) {
    if (u.payload.size() != acc.size() || !SameLayout(u.layout, first.layout) ||
        !(u.quant == first.quant)) {
      throw ProtocolError("updates disagree on layout or quantization");
    }
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += u.payload[c];
  }
  std::vector<int64_t> out(acc.size());
  for (std::size_t c = 0; c < acc.size(); ++c) out[c] = std::bit_cast<int64_t>(acc[c]);
  return out;
}

std::vector<int64_t> SumPlain(std::span<const std::vector<int64_t>> quantized) {
  if (quantized.empty()) throw InputError("no updates to aggregate");
  std::vector<int64_t> out(quantized.front().size(), 0);
  for (const auto& q : quantized) {
    if (q.size() != out.size()) throw ConfigError("update lengths differ");
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += q[c];
  }
  return out;
}

ParamVector AggregateMasked(std::span<const MaskedUpdate> updates,
                            std::span<const uint32_t> participants) {
  const std::vector<int64_t> sum = SumMasked(updates, participants);
  const MaskedUpdate& first = updates.front();
  return Dequantize(sum, first.layout, first.quant, updates.size());
}

CheckReport RunPipelineCheck(std::size_t num_clients, std::size_t length,
                             std::size_t trials, uint64_t seed,
                             const QuantizationSpec& quant) {
  if (num_clients < 1 || length < 1) {
    throw ConfigError("secagg check needs at least one client and coordinate");
  }
  quant.Validate(num_clients);
  const LayoutPtr layout = ParamLayout::FromSizes({{"update", length}});
  std::vector<uint32_t> participants(num_clients);
  std::iota(participants.begin(), participants.end(), 0u);

  CheckReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(DeriveSeed(seed, "secagg_check", t));
    const PairwiseSeeds seeds =
        PairwiseSeeds::Provision(DeriveSeed(seed, "pairs", t), t, participants);

    std::vector<ParamVector> raw;
    std::vector<std::vector<int64_t>> quantized;
    std::vector<MaskedUpdate> masked;
    std::vector<uint64_t> mask_sum(length, 0);
    for (uint32_t id : participants) {
      ParamVector v(layout);
      for (double& x : v.values()) x = 4.0 * rng.Gaussian();
      QuantizedVector q = Quantize(v, quant);
      const std::vector<uint64_t> mask =
          GenerateMask(t, id, participants, seeds, length);
      for (std::size_t c = 0; c < length; ++c) mask_sum[c] += mask[c];
      masked.push_back(MaskUpdate(id, q.values, mask, layout, quant));
      quantized.push_back(std::move(q.values));
      raw.push_back(std::move(v));
    }

    bool ok = std::all_of(mask_sum.begin(), mask_sum.end(),
                          [](uint64_t m) { return m == 0; });
    ok = ok && SumMasked(masked, participants) == SumPlain(quantized);

    const ParamVector secure = AggregateMasked(masked, participants);
    ParamVector exact = PairwiseSum(raw);
    exact *= 1.0 / static_cast<double>(num_clients);
    for (std::size_t c = 0; c < length; ++c) {
      report.max_deviation =
          std::max(report.max_deviation, std::abs(secure[c] - exact[c]));
    }
    ++report.trials;
    if (!ok) ++report.failures;
  }
  return report;
}

}  // namespace privfed::secagg
