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
#include "privfed/harness/metrics_csv.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "privfed/errors.h"
#include "privfed/harness/config.h"

namespace privfed::harness {
namespace {

template <typename T>
T ParseField(std::string_view field, std::size_t row) {
  T out{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw InputError("metrics row " + std::to_string(row) + ": bad field '" +
                     std::string(field) + "'");
  }
  return out;
}

}  // namespace

std::string FormatMetricsCsv(std::span<const federation::RoundMetrics> rows) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const auto& m : rows) {
    out << m.round << ',' << FormatReal(m.global_train_loss) << ','
        << FormatReal(m.test_accuracy) << ',' << FormatReal(m.test_f1) << ','
        << FormatReal(m.epsilon_spent) << ',' << m.bytes_up_per_client << ','
        << m.bytes_down_per_client << '\n';
  }
  return out.str();
}

std::vector<federation::RoundMetrics> ParseMetricsCsv(std::string_view text) {
  std::vector<federation::RoundMetrics> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line_no++ == 0) {
      if (line != kMetricsHeader) throw InputError("unexpected metrics header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 7) {
      throw InputError("metrics row " + std::to_string(line_no) + ": expected 7 fields");
    }
    federation::RoundMetrics m;
    m.round = ParseField<std::size_t>(f[0], line_no);
    m.global_train_loss = ParseField<double>(f[1], line_no);
    m.test_accuracy = ParseField<double>(f[2], line_no);
    m.test_f1 = ParseField<double>(f[3], line_no);
    m.epsilon_spent = ParseField<double>(f[4], line_no);
    m.bytes_up_per_client = ParseField<uint64_t>(f[5], line_no);
    m.bytes_down_per_client = ParseField<uint64_t>(f[6], line_no);
    rows.push_back(m);
  }
  if (line_no == 0) throw InputError("empty metrics file");
  return rows;
}

std::string FormatTraceCsv(std::span<const federation::StepTrace> trace) {
  std::ostringstream out;
  out << "round,client_id,step,clipped_mean_norm,sigma,clip_norm,base_snr\n";
  for (const auto& t : trace) {
    const double snr = t.sigma > 0 && t.clip_norm > 0
                           ? t.clipped_mean_norm / (t.sigma * t.clip_norm)
                           : 0.0;
    out << t.round << ',' << t.client_id << ',' << t.step << ','
        << FormatReal(t.clipped_mean_norm) << ',' << FormatReal(t.sigma) << ','
        << FormatReal(t.clip_norm) << ',' << FormatReal(snr) << '\n';
  }
  return out.str();
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace privfed::harness
