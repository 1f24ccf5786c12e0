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
#ifndef PRIVFED_HARNESS_METRICS_CSV_H_
#define PRIVFED_HARNESS_METRICS_CSV_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privfed/federation.h"

namespace privfed::harness {

inline constexpr std::string_view kMetricsHeader =
    "round,global_train_loss,test_accuracy,test_f1,epsilon_spent,"
    "bytes_up_per_client,bytes_down_per_client";

// Header plus one LF-terminated row per round. Reals use the shortest
// representation that round-trips.
std::string FormatMetricsCsv(std::span<const federation::RoundMetrics> rows);

// Throws InputError on a wrong header or malformed row.
std::vector<federation::RoundMetrics> ParseMetricsCsv(std::string_view text);

// Per-step empirical SNR trace of a DP run.
std::string FormatTraceCsv(std::span<const federation::StepTrace> trace);

// Writes to a sibling temporary file and renames it into place. Creates the
// parent directory if needed.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

}  // namespace privfed::harness

#endif  // PRIVFED_HARNESS_METRICS_CSV_H_
