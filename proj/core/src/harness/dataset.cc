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
#include "privfed/harness/dataset.h"

#include "privfed/errors.h"
#include "privfed/rng.h"

namespace privfed::harness {

Eigen::VectorXd SynthDirection(std::size_t dim, uint64_t seed) {
  if (dim < 1) throw ConfigError("input_dim must be >= 1");
  RngStream rng(DeriveSeed(seed, "direction"));
  Eigen::VectorXd u(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.Gaussian();
  } while (u.norm() == 0.0);
  return u / u.norm();
}

std::vector<model::LabeledExample> SynthDataset(std::size_t n, std::size_t dim,
                                                double class_margin,
                                                double noise_level,
                                                uint64_t seed) {
  if (n % 2 != 0) throw ConfigError("n_total must be even");
  if (dim < 2) throw ConfigError("input_dim must be >= 2");
  if (!(class_margin >= 0)) throw ConfigError("class_margin must be >= 0");
  if (!(noise_level >= 0)) throw ConfigError("noise_level must be >= 0");

  const Eigen::VectorXd u = SynthDirection(dim, seed);
  RngStream rng(DeriveSeed(seed, "samples"));
  std::vector<model::LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    Eigen::VectorXd x = (2.0 * label - 1.0) * class_margin * u;
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += noise_level * rng.Gaussian();
    out.push_back({std::move(x), label});
  }
  return out;
}

}  // namespace privfed::harness
