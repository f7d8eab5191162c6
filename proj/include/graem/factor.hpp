// Copyright 2026 The GRAEM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace graem {

/// Dense n x d latent-feature matrix, row-major (row i is entity i).
class FactorMatrix {
 public:
  FactorMatrix() = default;
  FactorMatrix(std::size_t n, std::size_t d, double fill = 0.0)
      : n_(n), d_(d), values_(n * d, fill) {}
  FactorMatrix(std::size_t n, std::size_t d, std::vector<double> values);

  /// Entries i.i.d. N(0, stddev^2).
  static FactorMatrix random_normal(std::size_t n, std::size_t d, double stddev,
                                    std::mt19937_64& rng);

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return d_; }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * d_, d_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * d_, d_};
  }
  double& operator()(std::size_t i, std::size_t k) noexcept { return values_[i * d_ + k]; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return values_[i * d_ + k]; }

  std::span<double> data() noexcept { return values_; }
  std::span<const double> data() const noexcept { return values_; }
  std::vector<double> column(std::size_t k) const;

  bool all_finite() const noexcept;

  friend bool operator==(const FactorMatrix&, const FactorMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace graem
