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

#include "graem/edge_prune.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "graem/errors.hpp"

namespace graem {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Upper triangle of P M P^T stored by columns (rows unsorted).
struct UpperCsc {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> rows;
  std::vector<double> values;
};

UpperCsc permuted_upper(const SparseMatrix& m, std::span<const std::size_t> perm,
                        std::span<const std::size_t> pinv) {
  const std::size_t n = m.n_rows();
  UpperCsc c;
  c.offsets.assign(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t old = perm[k];
    const auto cols = m.row_cols(old);
    const auto vals = m.row_values(old);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const std::size_t i = pinv[cols[p]];
      if (i <= k) {
        c.rows.push_back(i);
        c.values.push_back(vals[p]);
      }
    }
    c.offsets[k + 1] = c.rows.size();
  }
  return c;
}

std::vector<std::size_t> elimination_tree(const UpperCsc& c, std::size_t n) {
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::size_t> ancestor(n, kNone);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = c.offsets[k]; p < c.offsets[k + 1]; ++p) {
      std::size_t i = c.rows[p];
      while (i != kNone && i < k) {
        const std::size_t next = ancestor[i];
        ancestor[i] = k;
        if (next == kNone) parent[i] = k;
        i = next;
      }
    }
  }
  return parent;
}

// Nonzero pattern of row k of L (excluding the diagonal) in topological
// order, written to stack[top..n). Returns top.
std::size_t row_pattern(const UpperCsc& c, std::size_t k, std::span<const std::size_t> parent,
                        std::span<std::size_t> stack, std::span<std::size_t> mark) {
  const std::size_t n = parent.size();
  std::size_t top = n;
  mark[k] = k;
  for (std::size_t p = c.offsets[k]; p < c.offsets[k + 1]; ++p) {
    std::size_t i = c.rows[p];
    if (i > k) continue;
    std::size_t len = 0;
    for (; mark[i] != k; i = parent[i]) {
      stack[len++] = i;
      mark[i] = k;
    }
    while (len > 0) stack[--top] = stack[--len];
  }
  return top;
}

std::vector<std::size_t> amd_permutation(const SparseMatrix& m) {
  const std::size_t n = m.n_rows();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(m.nnz());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c : m.row_cols(r)) {
      trips.emplace_back(static_cast<int>(r), static_cast<int>(c), 1.0);
    }
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> pattern(static_cast<int>(n),
                                                            static_cast<int>(n));
  pattern.setFromTriplets(trips.begin(), trips.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int> amd;
  amd(pattern, pinv);
  // Eigen's ordering maps new position -> old index.
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = static_cast<std::size_t>(pinv.indices()[k]);
  return perm;
}

bool is_diagonal(const SparseMatrix& m) {
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    for (std::size_t c : m.row_cols(r)) {
      if (c != r) return false;
    }
  }
  return true;
}

}  // namespace

ColumnPosteriorPrecision column_precision(const GraphSI& graph, const FactorMatrix& fixed,
                                          const SparseMatrix& obs_row_view, double alpha,
                                          double weight, std::size_t d) {
  if (d >= fixed.cols()) throw InputError("latent column index out of range");
  if (obs_row_view.n_rows() != graph.n_nodes() || obs_row_view.n_cols() != fixed.rows()) {
    throw InputError("observation view does not match graph and factor shapes");
  }
  std::vector<double> evidence(graph.n_nodes(), 0.0);
  for (std::size_t i = 0; i < obs_row_view.n_rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j : obs_row_view.row_cols(i)) {
      const double vjd = fixed(j, d);
      acc += vjd * vjd;
    }
    evidence[i] = alpha * acc;
  }
  return {d, graph.laplacian_reg().scaled_plus_identity(weight, 0.0).plus_diagonal(evidence)};
}

SparseCholesky::SparseCholesky(const SparseMatrix& m, Ordering ordering) : n_(m.n_rows()) {
  if (m.n_rows() != m.n_cols()) throw InputError("Cholesky needs a square matrix");
  if (ordering == Ordering::kAmd && !is_diagonal(m)) {
    perm_ = amd_permutation(m);
  } else {
    perm_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) perm_[k] = k;
  }
  std::vector<std::size_t> pinv(n_);
  for (std::size_t k = 0; k < n_; ++k) pinv[perm_[k]] = k;

  const UpperCsc c = permuted_upper(m, perm_, pinv);
  const std::vector<std::size_t> parent = elimination_tree(c, n_);
  std::vector<std::size_t> stack(n_);
  std::vector<std::size_t> mark(n_, kNone);

  // Symbolic: column counts from the row patterns.
  std::vector<std::size_t> counts(n_, 1);
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t top = row_pattern(c, k, parent, stack, mark);
    for (std::size_t t = top; t < n_; ++t) ++counts[stack[t]];
  }
  col_offsets_.assign(n_ + 1, 0);
  for (std::size_t k = 0; k < n_; ++k) col_offsets_[k + 1] = col_offsets_[k] + counts[k];
  row_indices_.resize(col_offsets_[n_]);
  values_.resize(col_offsets_[n_]);

  // Numeric: up-looking, one row of L per step.
  std::vector<std::size_t> cursor(col_offsets_.begin(), col_offsets_.end() - 1);
  std::vector<double> x(n_, 0.0);
  std::fill(mark.begin(), mark.end(), kNone);
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t top = row_pattern(c, k, parent, stack, mark);
    x[k] = 0.0;
    for (std::size_t p = c.offsets[k]; p < c.offsets[k + 1]; ++p) x[c.rows[p]] += c.values[p];
    double diag = x[k];
    x[k] = 0.0;
    for (std::size_t t = top; t < n_; ++t) {
      const std::size_t i = stack[t];
      const double lki = x[i] / values_[col_offsets_[i]];
      x[i] = 0.0;
      for (std::size_t p = col_offsets_[i] + 1; p < cursor[i]; ++p) {
        x[row_indices_[p]] -= values_[p] * lki;
      }
      diag -= lki * lki;
      const std::size_t p = cursor[i]++;
      row_indices_[p] = k;
      values_[p] = lki;
    }
    if (!(diag > 0.0)) {
      throw NumericalError("non-positive Cholesky pivot at node " + std::to_string(perm_[k]));
    }
    const std::size_t p = cursor[k]++;
    row_indices_[p] = k;
    values_[p] = std::sqrt(diag);
  }
}

void SparseCholesky::solve_upper(std::span<double> z) const {
  for (std::size_t j = n_; j-- > 0;) {
    double acc = z[j];
    for (std::size_t p = col_offsets_[j] + 1; p < col_offsets_[j + 1]; ++p) {
      acc -= values_[p] * z[row_indices_[p]];
    }
    z[j] = acc / values_[col_offsets_[j]];
  }
}

void SparseCholesky::precision_sample(std::span<const double> z, std::span<double> x) const {
  if (z.size() != n_ || x.size() != n_) throw InputError("sample vector length mismatch");
  std::vector<double> y(z.begin(), z.end());
  solve_upper(y);
  for (std::size_t k = 0; k < n_; ++k) x[perm_[k]] = y[k];
}

std::vector<double> SparseCholesky::solve(std::span<const double> b) const {
  if (b.size() != n_) throw InputError("right-hand side length mismatch");
  std::vector<double> y(n_);
  for (std::size_t k = 0; k < n_; ++k) y[k] = b[perm_[k]];
  for (std::size_t j = 0; j < n_; ++j) {
    y[j] /= values_[col_offsets_[j]];
    for (std::size_t p = col_offsets_[j] + 1; p < col_offsets_[j + 1]; ++p) {
      y[row_indices_[p]] -= values_[p] * y[j];
    }
  }
  solve_upper(y);
  std::vector<double> x(n_);
  for (std::size_t k = 0; k < n_; ++k) x[perm_[k]] = y[k];
  return x;
}

std::vector<double> SparseCholesky::dense_factor() const {
  std::vector<double> dense(n_ * n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    for (std::size_t p = col_offsets_[j]; p < col_offsets_[j + 1]; ++p) {
      dense[row_indices_[p] * n_ + j] = values_[p];
    }
  }
  return dense;
}

void draw_precision_sample(const SparseCholesky& chol, std::mt19937_64& rng,
                           std::span<double> scratch, std::span<double> x) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& z : scratch) z = normal(rng);
  chol.solve_upper(scratch);
  const auto perm = chol.permutation();
  for (std::size_t k = 0; k < perm.size(); ++k) x[perm[k]] = scratch[k];
}

std::vector<std::vector<double>> sample_column(const SparseCholesky& chol, std::mt19937_64& rng,
                                               std::size_t k) {
  if (k == 0) throw InputError("sample count must be at least 1");
  std::vector<std::vector<double>> samples(k, std::vector<double>(chol.size()));
  std::vector<double> scratch(chol.size());
  for (auto& x : samples) draw_precision_sample(chol, rng, scratch, x);
  return samples;
}

double ConstrainedScm::value(std::size_t i, std::size_t j) const {
  const Edge key = i < j ? Edge{i, j} : Edge{j, i};
  const auto it = std::lower_bound(support.begin(), support.end(), key);
  if (it == support.end() || *it != key) {
    throw InputError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") is not on the SCM support");
  }
  return values[static_cast<std::size_t>(it - support.begin())];
}

ScmAccumulator::ScmAccumulator(std::size_t n, std::vector<Edge> support)
    : n_(n), support_(std::move(support)), values_(support_.size(), 0.0), diag_(n, 0.0) {
  for (Edge& e : support_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.j >= n_ || e.i == e.j) throw InputError("invalid SCM support pair");
  }
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  values_.assign(support_.size(), 0.0);
}

void ScmAccumulator::add_outer(std::span<const double> x, double weight) {
  if (x.size() != n_) throw InputError("SCM sample length mismatch");
  for (std::size_t e = 0; e < support_.size(); ++e) {
    values_[e] += weight * x[support_[e].i] * x[support_[e].j];
  }
  for (std::size_t i = 0; i < n_; ++i) diag_[i] += weight * x[i] * x[i];
}

void ScmAccumulator::add(const ScmAccumulator& other) {
  if (other.support_ != support_) throw InternalError("SCM supports differ");
  for (std::size_t e = 0; e < values_.size(); ++e) values_[e] += other.values_[e];
  for (std::size_t i = 0; i < n_; ++i) diag_[i] += other.diag_[i];
}

ConstrainedScm ScmAccumulator::finish(double scale) const {
  ConstrainedScm scm{n_, support_, values_, diag_};
  for (double& v : scm.values) v *= scale;
  for (double& v : scm.diag) v *= scale;
  return scm;
}

ConstrainedScm constrained_scm(const FactorMatrix& u_mean,
                               std::span<const ColumnSamples> column_samples,
                               std::span<const Edge> support) {
  const std::size_t n = u_mean.rows();
  const std::size_t d_count = u_mean.cols();
  if (!column_samples.empty() && column_samples.size() != d_count) {
    throw InputError("need one sample set per latent column");
  }
  ScmAccumulator total(n, {support.begin(), support.end()});
  const std::vector<Edge> canonical = total.finish(1.0).support;
  for (std::size_t d = 0; d < d_count; ++d) {
    ScmAccumulator column(n, canonical);
    if (!column_samples.empty() && !column_samples[d].empty()) {
      const double w = 1.0 / static_cast<double>(column_samples[d].size());
      for (const auto& x : column_samples[d]) column.add_outer(x, w);
    }
    column.add_outer(u_mean.column(d), 1.0);
    total.add(column);
  }
  return total.finish(1.0 / static_cast<double>(d_count));
}

ThresholdResult threshold_edges(const ConstrainedScm& scm, const SparseMatrix& a0, double tau) {
  if (a0.n_rows() != scm.n || a0.n_cols() != scm.n) throw InputError("SCM / graph size mismatch");
  if (!a0.is_symmetric()) throw InternalError("constraint adjacency is not symmetric");
  const std::vector<Edge> edges = adjacency_edges(a0);
  if (edges != scm.support) throw InputError("SCM support differs from the constraint graph edges");
  if (scm.values.size() != edges.size()) throw InternalError("SCM value count mismatch");

  ThresholdResult out;
  out.report.threshold = tau;
  out.report.records.reserve(edges.size());
  std::vector<Edge> kept;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double v = scm.values[e];
    const bool keep = v >= tau;
    out.report.records.push_back(
        {edges[e].i, edges[e].j, v, keep ? EdgeDecision::kKept : EdgeDecision::kContested});
    if (keep) {
      kept.push_back(edges[e]);
      ++out.report.kept;
    } else {
      ++out.report.removed_contested;
    }
  }
  out.adjacency = build_adjacency(kept, scm.n);
  return out;
}

EdgeClassification classify_edges(const SparseMatrix& new_adj, const SparseMatrix& a0,
                                  const SparseMatrix& a_true) {
  if (new_adj.n_rows() != a0.n_rows() || a_true.n_rows() != a0.n_rows()) {
    throw InputError("adjacency sizes differ");
  }
  EdgeClassification c;
  std::size_t ce_removed = 0;
  std::size_t te_removed = 0;
  for (const Edge& e : adjacency_edges(new_adj)) {
    if (a0.at(e.i, e.j) == 0.0) throw InputError("updated graph has an edge absent from A0");
  }
  for (const Edge& e : adjacency_edges(a0)) {
    const bool is_true = a_true.at(e.i, e.j) != 0.0;
    const bool removed = new_adj.at(e.i, e.j) == 0.0;
    if (is_true) {
      ++c.true_edges;
      if (removed) ++te_removed;
    } else {
      ++c.corrupted;
      if (removed) ++ce_removed;
    }
  }
  c.frac_ce_removed = c.corrupted ? static_cast<double>(ce_removed) / c.corrupted : 0.0;
  c.frac_te_removed = c.true_edges ? static_cast<double>(te_removed) / c.true_edges : 0.0;
  return c;
}

void write_report_csv(std::ostream& out, const EdgeUpdateReport& report) {
  out << "i,j,scm_value,decision\n";
  char buf[64];
  for (const EdgeRecord& r : report.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.scm_value);
    out << r.i << ',' << r.j << ',' << buf << ','
        << (r.decision == EdgeDecision::kKept ? "kept" : "CE") << '\n';
  }
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

MStepResult m_step(const GraphSI& current, const SparseMatrix& a0, const FactorMatrix& u_mean,
                   const FactorMatrix& v_fixed, const SparseMatrix& obs_row_view,
                   const MStepSettings& settings) {
  const std::size_t n = current.n_nodes();
  if (a0.n_rows() != n || u_mean.rows() != n) throw InputError("M-step shape mismatch");
  if (u_mean.cols() != v_fixed.cols()) throw InputError("latent dimensions differ");

  MStepResult res;
  std::vector<Edge> support = adjacency_edges(a0);
  ScmAccumulator total(n, support);
  const std::size_t k_samples = settings.k_samples;
  constexpr std::size_t kBatch = 32;
  std::vector<double> scratch(n);
  std::vector<std::vector<double>> batch;

  for (std::size_t d = 0; d < u_mean.cols(); ++d) {
    ScmAccumulator column(n, support);
    if (k_samples > 0 && !support.empty()) {
      auto t0 = std::chrono::steady_clock::now();
      const ColumnPosteriorPrecision prec = column_precision(
          current, v_fixed, obs_row_view, settings.alpha, settings.graph_weight, d);
      res.timings.precision += seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      const SparseCholesky chol(prec.matrix, settings.ordering);
      res.timings.cholesky += seconds_since(t0);

      std::mt19937_64 rng = derived_rng(settings.seed, {d});
      const double w = 1.0 / static_cast<double>(k_samples);
      for (std::size_t done = 0; done < k_samples; done += kBatch) {
        const std::size_t count = std::min(kBatch, k_samples - done);
        batch.resize(count, std::vector<double>(n));
        t0 = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < count; ++b) draw_precision_sample(chol, rng, scratch, batch[b]);
        res.timings.sampling += seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < count; ++b) column.add_outer(batch[b], w);
        res.timings.scm += seconds_since(t0);
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    column.add_outer(u_mean.column(d), 1.0);
    total.add(column);
    res.timings.scm += seconds_since(t0);
  }

  auto t0 = std::chrono::steady_clock::now();
  res.scm = total.finish(1.0 / static_cast<double>(u_mean.cols()));
  ThresholdResult thr = threshold_edges(res.scm, a0, settings.tau);
  res.adjacency = std::move(thr.adjacency);
  res.report = std::move(thr.report);
  res.timings.threshold += seconds_since(t0);
  return res;
}

}  // namespace graem
