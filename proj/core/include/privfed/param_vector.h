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

#ifndef PRIVFED_PARAM_VECTOR_H_
#define PRIVFED_PARAM_VECTOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace privfed {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

// Ordered named segments covering a flat vector without gaps.
class ParamLayout {
 public:
  // Throws ConfigError on duplicate or empty names.
  static std::shared_ptr<const ParamLayout> FromSizes(
      const std::vector<std::pair<std::string, std::size_t>>& sizes);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return size_; }
  const Segment& Find(std::string_view name) const;

  bool operator==(const ParamLayout& other) const {
    return segments_ == other.segments_;
  }

 private:
  ParamLayout() = default;
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

bool SameLayout(const LayoutPtr& a, const LayoutPtr& b);

// Flat real-valued parameter or gradient vector with a segment layout. The
// canonical form of the trainable state for clipping, noising, masking and
// averaging.
class ParamVector {
 public:
  ParamVector() = default;
  // Zero-initialized.
  explicit ParamVector(LayoutPtr layout);
  ParamVector(LayoutPtr layout, std::vector<double> values);

  const LayoutPtr& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  double Norm() const;
  bool AllFinite() const;

  // Elementwise arithmetic; layouts must match (ConfigError otherwise).
  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double s);
  // this += s * other
  ParamVector& AddScaled(const ParamVector& other, double s);

  // Bitwise equality of values plus layout equality.
  bool operator==(const ParamVector& other) const;

 private:
  void CheckLayout(const ParamVector& other) const;

  LayoutPtr layout_;
  std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(ParamVector a, double s);

// Pairwise (cascade) summation of equal-layout vectors. Requires a nonempty
// span.
ParamVector PairwiseSum(std::span<const ParamVector> vectors);

}  // namespace privfed

#endif  // PRIVFED_PARAM_VECTOR_H_
