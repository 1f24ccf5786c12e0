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
#ifndef PRIVFED_SECAGG_H_
#define PRIVFED_SECAGG_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "privfed/param_vector.h"

namespace privfed::secagg {

// Fixed-point encoding used before masking. The true K-client sum must not
// wrap: clamp_bound * scale * K < 2^63.
struct QuantizationSpec {
  double scale = 65536.0;
  double clamp_bound = 1000.0;

  void Validate(std::size_t max_clients) const;
  bool operator==(const QuantizationSpec&) const = default;
};

struct QuantizedVector {
  std::vector<int64_t> values;
  std::size_t clamped = 0;  // coordinates that hit +-clamp_bound
};

// round(clamp(v_i) * scale).
QuantizedVector Quantize(const ParamVector& v, const QuantizationSpec& quant);

// sum_i / (scale * num_clients).
ParamVector Dequantize(std::span<const int64_t> sum, const LayoutPtr& layout,
                       const QuantizationSpec& quant, std::size_t num_clients);

// Shared pairwise seeds, keyed by the unordered pair {i, j}.
class PairwiseSeeds {
 public:
  explicit PairwiseSeeds(uint64_t round_id = 0) : round_id_(round_id) {}

  // Out-of-band provisioning: seed{i,j} = DeriveSeed(master, "pair", min, max).
  static PairwiseSeeds Provision(uint64_t master_seed, uint64_t round_id,
                                 std::span<const uint32_t> participants);

  void Set(uint32_t i, uint32_t j, uint64_t seed);
  std::optional<uint64_t> Get(uint32_t i, uint32_t j) const;
  void Erase(uint32_t i, uint32_t j);

  uint64_t round_id() const { return round_id_; }

 private:
  static std::pair<uint32_t, uint32_t> Key(uint32_t i, uint32_t j) {
    return i < j ? std::pair{i, j} : std::pair{j, i};
  }

  uint64_t round_id_;
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> seeds_;
};

// Counter-mode expansion of a pair seed for one round.
std::vector<uint64_t> ExpandSeed(uint64_t seed, uint64_t round_id,
                                 std::size_t length);

// mask_i = sum_{j>i} PRG(seed{i,j}) - sum_{j<i} PRG(seed{i,j})  (mod 2^64),
// so the masks of all participants sum to zero. Throws ProtocolError if
// client_id is not a participant or a pair seed is missing.
std::vector<uint64_t> GenerateMask(uint64_t round_id, uint32_t client_id,
                                   std::span<const uint32_t> participants,
                                   const PairwiseSeeds& seeds,
                                   std::size_t length);

struct MaskedUpdate {
  uint32_t client_id = 0;
  std::vector<uint64_t> payload;
  LayoutPtr layout;
  QuantizationSpec quant;
};

// payload_i = (uint64_t)quantized_i + mask_i  (mod 2^64).
MaskedUpdate MaskUpdate(uint32_t client_id, std::span<const int64_t> quantized,
                        std::span<const uint64_t> mask, LayoutPtr layout,
                        const QuantizationSpec& quant);

// Modular sum of the payloads reinterpreted as signed integers. Requires
// exactly one update per participant (ProtocolError otherwise) and matching
// layouts and quantization.
std::vector<int64_t> SumMasked(std::span<const MaskedUpdate> updates,
                               std::span<const uint32_t> participants);

// The same integer aggregate computed without masks.
std::vector<int64_t> SumPlain(std::span<const std::vector<int64_t>> quantized);

// Average update recovered by the server: SumMasked / (scale * K).
ParamVector AggregateMasked(std::span<const MaskedUpdate> updates,
                            std::span<const uint32_t> participants);

struct CheckReport {
  std::size_t trials = 0;
  std::size_t failures = 0;
  // Largest |secure average - exact real average| over all coordinates.
  double max_deviation = 0.0;
  bool passed() const { return failures == 0; }
};

// Randomized end-to-end check: for each trial, quantize random updates,
// run the masked and unmasked pipelines side by side and compare the
// integer aggregates bitwise; also checks that masks sum to zero.
CheckReport RunPipelineCheck(std::size_t num_clients, std::size_t length,
                             std::size_t trials, uint64_t seed,
                             const QuantizationSpec& quant = {});

}  // namespace privfed::secagg

#endif  // PRIVFED_SECAGG_H_
