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
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "graem/factor.hpp"
#include "graem/sparse.hpp"

namespace graem {

/// Per-column posterior precision under the column-wise independence
/// approximation: w * L+ + alpha * diag(C_d), diag(C_d)_i = sum_j Omega_ij V_jd^2.
struct ColumnPosteriorPrecision {
  std::size_t d = 0;
  SparseMatrix matrix;
};

ColumnPosteriorPrecision column_precision(const GraphSI& graph, const FactorMatrix& fixed,
                                          const SparseMatrix& obs_row_view, double alpha,
                                          double weight, std::size_t d);

enum class Ordering { kAmd, kNatural };

/// Sparse Cholesky factor P M P^T = L L^T of a symmetric positive-definite
/// CSR matrix. L is stored by columns with the diagonal first in each column.
class SparseCholesky {
 public:
  /// Throws NumericalError naming the (original) node index on a
  /// non-positive pivot.
  explicit SparseCholesky(const SparseMatrix& m, Ordering ordering = Ordering::kAmd);

  std::size_t size() const noexcept { return n_; }
  std::size_t factor_nnz() const noexcept { return values_.size(); }
  /// perm[k] is the original index placed at position k.
  std::span<const std::size_t> permutation() const noexcept { return perm_; }

  /// Solves L^T y = z in place (z in permuted coordinates).
  void solve_upper(std::span<double> z) const;
  /// Maps z ~ N(0, I) to x = P^T L^{-T} z, so cov(x) = M^{-1}.
  void precision_sample(std::span<const double> z, std::span<double> x) const;
  /// Solves M x = b.
  std::vector<double> solve(std::span<const double> b) const;

  /// Dense row-major L (testing and diagnostics).
  std::vector<double> dense_factor() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> col_offsets_;
  std::vector<std::size_t> row_indices_;
  std::vector<double> values_;
};

/// Draws one sample x ~ N(0, M^{-1}) using `scratch` (length n) for the
/// standard-normal draw.
void draw_precision_sample(const SparseCholesky& chol, std::mt19937_64& rng,
                           std::span<double> scratch, std::span<double> x);

/// K samples x_k ~ N(0, M^{-1}).
std::vector<std::vector<double>> sample_column(const SparseCholesky& chol,
                                               std::mt19937_64& rng, std::size_t k);

/// Expected sample covariance E[S^D] evaluated only on the support of the
/// original graph (plus the diagonal, kept for diagnostics).
struct ConstrainedScm {
  std::size_t n = 0;
  std::vector<Edge> support;  // canonical i < j, sorted
  std::vector<double> values;
  std::vector<double> diag;

  /// Value on a support pair in either orientation. Throws InputError off-support.
  double value(std::size_t i, std::size_t j) const;
};

/// Accumulates second moments over a fixed edge support.
class ScmAccumulator {
 public:
  ScmAccumulator(std::size_t n, std::vector<Edge> support);

  /// Adds weight * x x^T restricted to the support and diagonal.
  void add_outer(std::span<const double> x, double weight);
  void add(const ScmAccumulator& other);
  ConstrainedScm finish(double scale) const;

 private:
  std::size_t n_;
  std::vector<Edge> support_;
  std::vector<double> values_;
  std::vector<double> diag_;
};

/// Samples for one latent column: K vectors of length n. Empty means the
/// covariance term is dropped (mean-only mode).
using ColumnSamples = std::vector<std::vector<double>>;

/// value(i,j) = (1/D) sum_d [ (1/K) sum_k x_k[i] x_k[j] + mu_id mu_jd ].
ConstrainedScm constrained_scm(const FactorMatrix& u_mean,
                               std::span<const ColumnSamples> column_samples,
                               std::span<const Edge> support);

enum class EdgeDecision { kKept, kContested };

struct EdgeRecord {
  std::size_t i;
  std::size_t j;
  double scm_value;
  EdgeDecision decision;
};

struct EdgeUpdateReport {
  std::size_t kept = 0;
  std::size_t removed_contested = 0;
  double threshold = 0.0;
  std::vector<EdgeRecord> records;
};

struct ThresholdResult {
  SparseMatrix adjacency;
  EdgeUpdateReport report;
};

/// Keeps an edge of a0 iff scm(i,j) >= tau; pairs absent from a0 stay absent.
ThresholdResult threshold_edges(const ConstrainedScm& scm, const SparseMatrix& a0, double tau);

struct EdgeClassification {
  double frac_ce_removed = 0.0;
  double frac_te_removed = 0.0;
  std::size_t corrupted = 0;
  std::size_t true_edges = 0;
};

/// Corrupted edges are those of a0 missing from a_true. Throws InputError
/// when new_adj is not contained in a0 or shapes differ.
EdgeClassification classify_edges(const SparseMatrix& new_adj, const SparseMatrix& a0,
                                  const SparseMatrix& a_true);

/// CSV with header `i,j,scm_value,decision`; decision is `kept` or `CE`.
void write_report_csv(std::ostream& out, const EdgeUpdateReport& report);

struct MStepSettings {
  double alpha = 1.0;
  double graph_weight = 1.0;
  /// 0 selects mean-only mode.
  std::size_t k_samples = 100;
  double tau = 0.0;
  std::uint64_t seed = 0;
  Ordering ordering = Ordering::kAmd;
};

struct MStepTimings {
  double precision = 0.0;
  double cholesky = 0.0;
  double sampling = 0.0;
  double scm = 0.0;
  double threshold = 0.0;
  double total() const { return precision + cholesky + sampling + scm + threshold; }
};

struct MStepResult {
  SparseMatrix adjacency;
  EdgeUpdateReport report;
  ConstrainedScm scm;
  MStepTimings timings;
};

/// Contested-edge removal for one side. `current` supplies the prior
/// precision of the posterior covariance; `a0` is the structural constraint
/// and defines the SCM support.
MStepResult m_step(const GraphSI& current, const SparseMatrix& a0, const FactorMatrix& u_mean,
                   const FactorMatrix& v_fixed, const SparseMatrix& obs_row_view,
                   const MStepSettings& settings);

/// Deterministic per-stream generator derived from a base seed and tags.
std::mt19937_64 derived_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace graem
