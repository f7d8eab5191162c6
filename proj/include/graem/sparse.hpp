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
#include <span>
#include <vector>

namespace graem {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Undirected edge. Canonical form has i < j.
struct Edge {
  std::size_t i;
  std::size_t j;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class Duplicates { kSum, kReject };

/// Compressed sparse row matrix.
///
/// Invariants: row_offsets has n_rows + 1 non-decreasing entries ending at
/// nnz; column indices are strictly increasing within each row and below
/// n_cols; no stored zeros after construction. The one exception is a
/// matrix built with `drop_zeros = false`, which observation views use so a
/// rating of exactly 0 stays observed.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Empty (all-zero) matrix.
  SparseMatrix(std::size_t n_rows, std::size_t n_cols);
  /// Takes ownership of raw CSR arrays; validates the invariants and drops
  /// explicit zeros.
  SparseMatrix(std::size_t n_rows, std::size_t n_cols,
               std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices,
               std::vector<double> values);

  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::span<const Triplet> triplets,
                                    Duplicates policy = Duplicates::kSum,
                                    bool drop_zeros = true);
  static SparseMatrix identity(std::size_t n, double scale = 1.0);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t r) const noexcept {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const noexcept {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  /// Stored value at (r, c), zero when absent. Binary search within the row.
  double at(std::size_t r, std::size_t c) const;

  SparseMatrix transpose() const;
  /// a * this + b * I (square matrices only).
  SparseMatrix scaled_plus_identity(double a, double b) const;
  /// Adds a diagonal vector (square only). Missing diagonal slots are created.
  SparseMatrix plus_diagonal(std::span<const double> diag) const;
  bool is_symmetric(double tol = 0.0) const;

  std::vector<double> to_dense_row_major() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  void drop_explicit_zeros();
  void validate() const;

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

/// y = m x. Rows are accumulated left to right.
std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x);
void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y);

/// Symmetric 0/1 adjacency from an edge list. Reversed and repeated edges
/// collapse; self-loops and out-of-range indices are input errors.
SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n_nodes);

/// D - A + gamma I.
SparseMatrix build_regularized_laplacian(const SparseMatrix& adjacency, double gamma);

/// Upper-triangle edges (i < j) of a symmetric adjacency, sorted.
std::vector<Edge> adjacency_edges(const SparseMatrix& adjacency);

/// Undirected simple graph together with its regularized Laplacian.
class GraphSI {
 public:
  GraphSI() = default;
  GraphSI(SparseMatrix adjacency, double gamma);
  static GraphSI from_edges(std::size_t n_nodes, std::span<const Edge> edges, double gamma);

  std::size_t n_nodes() const noexcept { return adjacency_.n_rows(); }
  std::size_t num_edges() const noexcept { return adjacency_.nnz() / 2; }
  double gamma() const noexcept { return gamma_; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  const SparseMatrix& laplacian_reg() const noexcept { return laplacian_reg_; }
  std::vector<Edge> edges() const { return adjacency_edges(adjacency_); }
  bool has_edge(std::size_t i, std::size_t j) const { return adjacency_.at(i, j) != 0.0; }

 private:
  SparseMatrix adjacency_;
  SparseMatrix laplacian_reg_;
  double gamma_ = 1.0;
};

/// Observed entries of the data matrix with row-major and column-major views.
class ObservationSet {
 public:
  ObservationSet() = default;
  /// Rejects duplicate (row, col) pairs with a DataError and out-of-range
  /// indices with an InputError.
  ObservationSet(std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> entries);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// Entries in input order.
  std::span<const Triplet> entries() const noexcept { return entries_; }
  /// n_rows x n_cols.
  const SparseMatrix& row_view() const noexcept { return row_view_; }
  /// n_cols x n_rows (transpose).
  const SparseMatrix& col_view() const noexcept { return col_view_; }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<Triplet> entries_;
  SparseMatrix row_view_;
  SparseMatrix col_view_;
};

}  // namespace graem
