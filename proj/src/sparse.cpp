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

#include "graem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "graem/errors.hpp"

namespace graem {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), row_offsets_(n_rows + 1, 0) {}

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices,
                           std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  validate();
  drop_explicit_zeros();
}

void SparseMatrix::validate() const {
  if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0) {
    throw InputError("CSR row_offsets must have n_rows + 1 entries starting at 0");
  }
  if (col_indices_.size() != values_.size() || row_offsets_.back() != values_.size()) {
    throw InputError("CSR arrays disagree on the number of stored values");
  }
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) {
      throw InputError("CSR row_offsets must be non-decreasing");
    }
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      if (col_indices_[p] >= n_cols_) throw InputError("CSR column index out of range");
      if (p > row_offsets_[r] && col_indices_[p] <= col_indices_[p - 1]) {
        throw InputError("CSR column indices must be strictly increasing within a row");
      }
    }
  }
}

void SparseMatrix::drop_explicit_zeros() {
  std::size_t out = 0;
  std::size_t start = 0;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    const std::size_t end = row_offsets_[r + 1];
    for (std::size_t p = start; p < end; ++p) {
      if (values_[p] != 0.0) {
        col_indices_[out] = col_indices_[p];
        values_[out] = values_[p];
        ++out;
      }
    }
    start = end;
    row_offsets_[r + 1] = out;
  }
  col_indices_.resize(out);
  values_.resize(out);
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::span<const Triplet> triplets,
                                         Duplicates policy, bool drop_zeros) {
  std::vector<std::size_t> counts(n_rows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw InputError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                       ") outside a " + std::to_string(n_rows) + "x" +
                       std::to_string(n_cols) + " matrix");
    }
    ++counts[t.row + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  // Bucket by row, then sort each row by column.
  std::vector<std::size_t> order(triplets.size());
  {
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (std::size_t k = 0; k < triplets.size(); ++k) order[cursor[triplets[k].row]++] = k;
  }
  SparseMatrix m(n_rows, n_cols);
  m.col_indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(counts[r]);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(counts[r + 1]);
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return triplets[a].col < triplets[b].col;
    });
    for (auto it = first; it != last; ++it) {
      const Triplet& t = triplets[*it];
      if (!m.col_indices_.empty() && m.col_indices_.size() > m.row_offsets_[r] &&
          m.col_indices_.back() == t.col) {
        if (policy == Duplicates::kReject) {
          throw DataError("duplicate entry (" + std::to_string(t.row) + ", " +
                          std::to_string(t.col) + ")");
        }
        m.values_.back() += t.value;
      } else {
        m.col_indices_.push_back(t.col);
        m.values_.push_back(t.value);
      }
    }
    m.row_offsets_[r + 1] = m.values_.size();
  }
  if (drop_zeros) m.drop_explicit_zeros();
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n, double scale) {
  SparseMatrix m(n, n);
  if (scale == 0.0) return m;
  m.col_indices_.resize(n);
  m.values_.assign(n, scale);
  std::iota(m.col_indices_.begin(), m.col_indices_.end(), std::size_t{0});
  std::iota(m.row_offsets_.begin(), m.row_offsets_.end(), std::size_t{0});
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= n_rows_ || c >= n_cols_) throw InputError("matrix index out of range");
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(n_cols_, n_rows_);
  for (std::size_t c : col_indices_) ++t.row_offsets_[c + 1];
  std::partial_sum(t.row_offsets_.begin(), t.row_offsets_.end(), t.row_offsets_.begin());
  t.col_indices_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> cursor(t.row_offsets_.begin(), t.row_offsets_.end() - 1);
  // Visiting rows in order keeps the transposed rows sorted.
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      const std::size_t q = cursor[col_indices_[p]]++;
      t.col_indices_[q] = r;
      t.values_[q] = values_[p];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::scaled_plus_identity(double a, double b) const {
  std::vector<double> diag(n_rows_, b);
  SparseMatrix scaled = *this;
  for (double& v : scaled.values_) v *= a;
  return scaled.plus_diagonal(diag);
}

SparseMatrix SparseMatrix::plus_diagonal(std::span<const double> diag) const {
  if (n_rows_ != n_cols_) throw InputError("plus_diagonal needs a square matrix");
  if (diag.size() != n_rows_) throw InputError("diagonal length mismatch");
  SparseMatrix out(n_rows_, n_cols_);
  out.col_indices_.reserve(nnz() + n_rows_);
  out.values_.reserve(nnz() + n_rows_);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    bool placed = false;
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      const std::size_t c = col_indices_[p];
      if (!placed && c >= r) {
        if (c == r) {
          out.col_indices_.push_back(r);
          out.values_.push_back(values_[p] + diag[r]);
          placed = true;
          continue;
        }
        out.col_indices_.push_back(r);
        out.values_.push_back(diag[r]);
        placed = true;
      }
      out.col_indices_.push_back(c);
      out.values_.push_back(values_[p]);
    }
    if (!placed) {
      out.col_indices_.push_back(r);
      out.values_.push_back(diag[r]);
    }
    out.row_offsets_[r + 1] = out.values_.size();
  }
  out.drop_explicit_zeros();
  return out;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (n_rows_ != n_cols_) return false;
  const SparseMatrix t = transpose();
  if (t.row_offsets_ != row_offsets_ || t.col_indices_ != col_indices_) return false;
  for (std::size_t p = 0; p < values_.size(); ++p) {
    if (std::abs(values_[p] - t.values_[p]) > tol) return false;
  }
  return true;
}

std::vector<double> SparseMatrix::to_dense_row_major() const {
  std::vector<double> dense(n_rows_ * n_cols_, 0.0);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      dense[r * n_cols_ + col_indices_[p]] = values_[p];
    }
  }
  return dense;
}

void spmv(const SparseMatrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.n_cols() || y.size() != m.n_rows()) {
    throw InputError("spmv dimension mismatch: matrix is " + std::to_string(m.n_rows()) + "x" +
                     std::to_string(m.n_cols()) + ", x has " + std::to_string(x.size()));
  }
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    double acc = 0.0;
    for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) acc += vals[p] * x[cols[p]];
    y[r] = acc;
  }
}

std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x) {
  std::vector<double> y(m.n_rows());
  spmv(m, x, y);
  return y;
}

SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n_nodes) {
  std::vector<Triplet> triplets;
  triplets.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    if (e.i >= n_nodes || e.j >= n_nodes) {
      throw InputError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                       ") out of range for " + std::to_string(n_nodes) + " nodes");
    }
    if (e.i == e.j) throw InputError("self-loop on node " + std::to_string(e.i));
    triplets.push_back({e.i, e.j, 1.0});
    triplets.push_back({e.j, e.i, 1.0});
  }
  SparseMatrix summed = SparseMatrix::from_triplets(n_nodes, n_nodes, triplets);
  // Collapse multiplicities to 0/1.
  std::vector<double> ones(summed.nnz(), 1.0);
  return SparseMatrix(n_nodes, n_nodes,
                      {summed.row_offsets().begin(), summed.row_offsets().end()},
                      {summed.col_indices().begin(), summed.col_indices().end()},
                      std::move(ones));
}

SparseMatrix build_regularized_laplacian(const SparseMatrix& adjacency, double gamma) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (adjacency.n_rows() != adjacency.n_cols()) throw InputError("adjacency must be square");
  const std::size_t n = adjacency.n_rows();
  std::vector<double> diag(n);
  for (std::size_t r = 0; r < n; ++r) {
    double degree = 0.0;
    for (double v : adjacency.row_values(r)) degree += v;
    if (adjacency.at(r, r) != 0.0) throw InputError("adjacency has a non-zero diagonal");
    diag[r] = degree + gamma;
  }
  return adjacency.scaled_plus_identity(-1.0, 0.0).plus_diagonal(diag);
}

std::vector<Edge> adjacency_edges(const SparseMatrix& adjacency) {
  std::vector<Edge> edges;
  edges.reserve(adjacency.nnz() / 2);
  for (std::size_t r = 0; r < adjacency.n_rows(); ++r) {
    for (std::size_t c : adjacency.row_cols(r)) {
      if (c > r) edges.push_back({r, c});
    }
  }
  return edges;
}

GraphSI::GraphSI(SparseMatrix adjacency, double gamma) : gamma_(gamma) {
  if (adjacency.n_rows() != adjacency.n_cols()) throw InputError("adjacency must be square");
  if (!adjacency.is_symmetric()) throw InputError("adjacency must be symmetric");
  for (double v : adjacency.values()) {
    if (v != 1.0) throw InputError("adjacency must be unweighted (0/1)");
  }
  laplacian_reg_ = build_regularized_laplacian(adjacency, gamma);
  adjacency_ = std::move(adjacency);
}

GraphSI GraphSI::from_edges(std::size_t n_nodes, std::span<const Edge> edges, double gamma) {
  return GraphSI(build_adjacency(edges, n_nodes), gamma);
}

ObservationSet::ObservationSet(std::size_t n_rows, std::size_t n_cols,
                               std::vector<Triplet> entries)
    : n_rows_(n_rows), n_cols_(n_cols), entries_(std::move(entries)) {
  for (const Triplet& t : entries_) {
    if (!std::isfinite(t.value)) {
      throw DataError("non-finite observation at (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ")");
    }
  }
  row_view_ = SparseMatrix::from_triplets(n_rows, n_cols, entries_, Duplicates::kReject,
                                          /*drop_zeros=*/false);
  col_view_ = row_view_.transpose();
}

}  // namespace graem
