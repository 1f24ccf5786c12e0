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
#ifndef PRIVFED_HARNESS_CLI_H_
#define PRIVFED_HARNESS_CLI_H_

#include <ostream>
#include <string>

namespace privfed::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // bad arguments, config or input
inline constexpr int kExitRuntime = 2;     // protocol, calibration, I/O

// Entry point of the privfed tool. Subcommands: run, ablate, calibrate, snr,
// secagg-check, comm-cost. Reports are key=value lines on `out`; errors and
// usage go to `err`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// x truncated (not rounded) to one decimal place, e.g. 28.36 -> "28.3".
std::string FormatOneDecimal(double x);

}  // namespace privfed::harness

#endif  // PRIVFED_HARNESS_CLI_H_
