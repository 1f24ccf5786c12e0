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
#include "privfed/adapter_model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "privfed/errors.h"
#include "privfed/rng.h"

namespace privfed::model {
namespace {

void CheckShapes(const FrozenBackbone& backbone, const AdapterParams& p) {
  const ModelSpec& s = backbone.spec();
  const auto d = static_cast<Eigen::Index>(s.input_dim);
  const auto k = static_cast<Eigen::Index>(s.feature_dim);
  const auto r = static_cast<Eigen::Index>(s.lora_rank);
  if (p.a.rows() != r || p.a.cols() != d || p.b.rows() != k ||
      p.b.cols() != r || p.head_w.size() != k) {
    throw ConfigError("adapter shapes do not match the model spec");
  }
}

void CheckInput(const FrozenBackbone& backbone, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(backbone.spec().input_dim)) {
    throw ConfigError("input length " + std::to_string(x.size()) +
                      " does not match input_dim " +
                      std::to_string(backbone.spec().input_dim));
  }
  if (!x.allFinite()) throw InputError("input contains non-finite values");
}

Eigen::MatrixXd GaussianMatrix(Eigen::Index rows, Eigen::Index cols,
                               double scale, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.Gaussian();
  }
  return m;
}

}  // namespace

void ModelSpec::Validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (lora_rank < 1 || lora_rank > std::min(input_dim, feature_dim)) {
    throw ConfigError("lora_rank must lie in [1, min(input_dim, feature_dim)]");
  }
}

FrozenBackbone FrozenBackbone::Build(const ModelSpec& spec) {
  spec.Validate();
  RngStream rng(DeriveSeed(spec.seed, "backbone"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  return FrozenBackbone(
      spec, GaussianMatrix(static_cast<Eigen::Index>(spec.feature_dim),
                           static_cast<Eigen::Index>(spec.input_dim), scale,
                           rng));
}

AdapterParams AdapterParams::Zero(const ModelSpec& spec) {
  spec.Validate();
  const auto d = static_cast<Eigen::Index>(spec.input_dim);
  const auto k = static_cast<Eigen::Index>(spec.feature_dim);
  const auto r = static_cast<Eigen::Index>(spec.lora_rank);
  return AdapterParams{Eigen::MatrixXd::Zero(r, d), Eigen::MatrixXd::Zero(k, r),
                       Eigen::VectorXd::Zero(k), 0.0};
}

AdapterParams AdapterParams::Init(const ModelSpec& spec, uint64_t seed) {
  AdapterParams p = Zero(spec);
  RngStream rng(DeriveSeed(seed, "adapter_init"));
  p.a = GaussianMatrix(p.a.rows(), p.a.cols(),
                       1.0 / std::sqrt(static_cast<double>(spec.input_dim)),
                       rng);
  return p;
}

LayoutPtr AdapterLayout(const ModelSpec& spec) {
  const std::size_t d = spec.input_dim;
  const std::size_t k = spec.feature_dim;
  const std::size_t r = spec.lora_rank;
  return ParamLayout::FromSizes(
      {{kLoraA, r * d}, {kLoraB, k * r}, {kHeadW, k}, {kHeadB, 1}});
}

ParamVector AdapterParams::Flatten() const {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(a.size() + b.size() + head_w.size() + 1));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) values.push_back(a(i, j));
  }
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) values.push_back(b(i, j));
  }
  for (Eigen::Index i = 0; i < head_w.size(); ++i) values.push_back(head_w(i));
  values.push_back(head_b);
  const ModelSpec spec{static_cast<std::size_t>(a.cols()),
                       static_cast<std::size_t>(b.rows()),
                       static_cast<std::size_t>(a.rows()), 0};
  return ParamVector(AdapterLayout(spec), std::move(values));
}

AdapterParams AdapterParams::Unflatten(const ParamVector& v,
                                       const ModelSpec& spec) {
  if (!SameLayout(v.layout(), AdapterLayout(spec))) {
    throw ConfigError("parameter vector layout does not match the model spec");
  }
  AdapterParams p = Zero(spec);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.a.cols(); ++j) p.a(i, j) = v[pos++];
  }
  for (Eigen::Index i = 0; i < p.b.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.b.cols(); ++j) p.b(i, j) = v[pos++];
  }
  for (Eigen::Index i = 0; i < p.head_w.size(); ++i) p.head_w(i) = v[pos++];
  p.head_b = v[pos];
  return p;
}

bool AdapterParams::operator==(const AdapterParams& other) const {
  return a.rows() == other.a.rows() && a.cols() == other.a.cols() &&
         b.rows() == other.b.rows() && b.cols() == other.b.cols() &&
         head_w.size() == other.head_w.size() && a == other.a &&
         b == other.b && head_w == other.head_w && head_b == other.head_b;
}

Eigen::MatrixXd EffectiveWeight(const FrozenBackbone& backbone,
                                const AdapterParams& adapters) {
  CheckShapes(backbone, adapters);
  return backbone.weights() + adapters.b * adapters.a;
}

double Logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Logit(const FrozenBackbone& backbone, const AdapterParams& adapters,
             const Eigen::VectorXd& x) {
  CheckShapes(backbone, adapters);
  CheckInput(backbone, x);
  const Eigen::VectorXd h = adapters.a * x;
  const Eigen::VectorXd f = backbone.weights() * x + adapters.b * h;
  return adapters.head_w.dot(f) + adapters.head_b;
}

double Forward(const FrozenBackbone& backbone, const AdapterParams& adapters,
               const Eigen::VectorXd& x) {
  return Logistic(Logit(backbone, adapters, x));
}

double Loss(const FrozenBackbone& backbone, const AdapterParams& adapters,
            const LabeledExample& ex) {
  const double z = Logit(backbone, adapters, ex.x);
  // softplus(z) - y z
  const double softplus =
      z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - static_cast<double>(ex.label) * z;
}

ParamVector PerSampleGradient(const FrozenBackbone& backbone,
                              const AdapterParams& adapters,
                              const LabeledExample& ex) {
  CheckShapes(backbone, adapters);
  CheckInput(backbone, ex.x);
  const Eigen::VectorXd h = adapters.a * ex.x;
  const Eigen::VectorXd f = backbone.weights() * ex.x + adapters.b * h;
  const double p = Logistic(adapters.head_w.dot(f) + adapters.head_b);
  const double e = p - static_cast<double>(ex.label);

  const ModelSpec& spec = backbone.spec();
  ParamVector g(AdapterLayout(spec));
  std::span<double> out = g.values();
  std::size_t pos = 0;
  const Eigen::VectorXd btw = adapters.b.transpose() * adapters.head_w;
  for (Eigen::Index i = 0; i < adapters.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < adapters.a.cols(); ++j) {
      out[pos++] = e * btw(i) * ex.x(j);
    }
  }
  for (Eigen::Index i = 0; i < adapters.b.rows(); ++i) {
    for (Eigen::Index j = 0; j < adapters.b.cols(); ++j) {
      out[pos++] = e * adapters.head_w(i) * h(j);
    }
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) out[pos++] = e * f(i);
  out[pos] = e;
  return g;
}

ParamCounts CountParams(const ModelSpec& spec) {
  spec.Validate();
  const double d = static_cast<double>(spec.input_dim);
  const double k = static_cast<double>(spec.feature_dim);
  const double r = static_cast<double>(spec.lora_rank);
  const double trainable = r * (d + k) + k + 1;
  return CountParams(trainable, k * d + trainable);
}

ParamCounts CountParams(double trainable, double total) {
  return {trainable, total, total > 0 ? trainable / total : 0.0};
}

}  // namespace privfed::model
