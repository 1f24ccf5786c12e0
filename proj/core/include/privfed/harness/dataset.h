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
#ifndef PRIVFED_HARNESS_DATASET_H_
#define PRIVFED_HARNESS_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "privfed/adapter_model.h"

namespace privfed::harness {

// Unit vector along which the two synthetic classes are separated.
Eigen::VectorXd SynthDirection(std::size_t dim, uint64_t seed);

// Balanced two-class Gaussian blobs: x = (2y - 1) * margin * u + noise * z
// with u = SynthDirection(dim, seed) and z ~ N(0, I). Labels alternate
// 0, 1, 0, 1, ... so each class has exactly n/2 members. Requires n even,
// dim >= 2, margin >= 0 and noise >= 0 (ConfigError otherwise).
std::vector<model::LabeledExample> SynthDataset(std::size_t n, std::size_t dim,
                                                double class_margin,
                                                double noise_level,
                                                uint64_t seed);

}  // namespace privfed::harness

#endif  // PRIVFED_HARNESS_DATASET_H_
