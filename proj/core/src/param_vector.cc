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
#include "privfed/param_vector.h"

#include <cmath>
#include <set>

#include "privfed/errors.h"

namespace privfed {

std::shared_ptr<const ParamLayout> ParamLayout::FromSizes(
    const std::vector<std::pair<std::string, std::size_t>>& sizes) {
  auto layout = std::shared_ptr<ParamLayout>(new ParamLayout());
  std::set<std::string, std::less<>> seen;
  for (const auto& [name, length] : sizes) {
    if (name.empty()) throw ConfigError("segment name must be nonempty");
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate segment name: " + name);
    }
    layout->segments_.push_back({name, layout->size_, length});
    layout->size_ += length;
  }
  return layout;
}

const Segment& ParamLayout::Find(std::string_view name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown segment: " + std::string(name));
}

bool SameLayout(const LayoutPtr& a, const LayoutPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

ParamVector::ParamVector(LayoutPtr layout)
    : layout_(std::move(layout)), values_(layout_ ? layout_->size() : 0, 0.0) {}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (!layout_ || layout_->size() != values_.size()) {
    throw ConfigError("value count does not match layout size");
  }
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout_->Find(name);
  return std::span<double>(values_).subspan(s.offset, s.length);
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout_->Find(name);
  return std::span<const double>(values_).subspan(s.offset, s.length);
}

double ParamVector::Norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

bool ParamVector::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ParamVector::CheckLayout(const ParamVector& other) const {
  if (!SameLayout(layout_, other.layout_)) {
    throw ConfigError("parameter layouts differ");
  }
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  CheckLayout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  CheckLayout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ParamVector& ParamVector::AddScaled(const ParamVector& other, double s) {
  CheckLayout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += s * other.values_[i];
  }
  return *this;
}

bool ParamVector::operator==(const ParamVector& other) const {
  return SameLayout(layout_, other.layout_) && values_ == other.values_;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(ParamVector a, double s) { return a *= s; }

ParamVector PairwiseSum(std::span<const ParamVector> vectors) {
  if (vectors.empty()) throw InputError("cannot sum an empty set of vectors");
  if (vectors.size() == 1) return vectors.front();
  const std::size_t half = vectors.size() / 2;
  ParamVector left = PairwiseSum(vectors.first(half));
  left += PairwiseSum(vectors.subspan(half));
  return left;
}

}  // namespace privfed
