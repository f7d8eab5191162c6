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

#include "graem/factorization.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "graem/errors.hpp"

namespace graem {

FactorMatrix::FactorMatrix(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
  if (values_.size() != n * d) throw InputError("factor matrix value count mismatch");
}

FactorMatrix FactorMatrix::random_normal(std::size_t n, std::size_t d, double stddev,
                                         std::mt19937_64& rng) {
  FactorMatrix m(n, d);
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& x : m.values_) x = normal(rng);
  return m;
}

std::vector<double> FactorMatrix::column(std::size_t k) const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = values_[i * d_ + k];
  return out;
}

bool FactorMatrix::all_finite() const noexcept {
  for (double x : values_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void SolverSettings::validate() const {
  if (!(cg_rel_tol > 0.0 && cg_rel_tol < 1.0)) throw InputError("cg_rel_tol must lie in (0, 1)");
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  if (outer_sweeps == 0) throw InputError("outer_sweeps must be at least 1");
  for (const SideWeights* w : {&u, &v}) {
    if (w->graph < 0.0 || w->l2 < 0.0) throw InputError("regularization weights must be >= 0");
  }
}

double SidePrior::diagonal(std::size_t i) const {
  if (graph) return weights.graph * graph->laplacian_reg().at(i, i);
  return weights.l2;
}

void SidePrior::apply(const FactorMatrix& x, FactorMatrix& out) const {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (!graph) {
    for (std::size_t i = 0; i < n; ++i) {
      auto src = x.row(i);
      auto dst = out.row(i);
      for (std::size_t k = 0; k < d; ++k) dst[k] = weights.l2 * src[k];
    }
    return;
  }
  const SparseMatrix& lap = graph->laplacian_reg();
  if (lap.n_rows() != n) throw InputError("graph size does not match factor rows");
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    std::fill(dst.begin(), dst.end(), 0.0);
    const auto cols = lap.row_cols(i);
    const auto vals = lap.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double w = weights.graph * vals[p];
      auto src = x.row(cols[p]);
      for (std::size_t k = 0; k < d; ++k) dst[k] += w * src[k];
    }
  }
}

double SidePrior::energy(const FactorMatrix& x) const {
  FactorMatrix lx(x.rows(), x.cols());
  apply(x, lx);
  return 0.5 * dot(x.data(), lx.data());
}

namespace {

void check_shapes(const FactorMatrix& u, const FactorMatrix& v, const ObservationSet& obs,
                  const GraphSI* graph_u, const GraphSI* graph_v) {
  if (u.cols() != v.cols()) throw InputError("U and V have different latent dimensions");
  if (u.rows() != obs.n_rows() || v.rows() != obs.n_cols()) {
    throw InputError("factor shapes do not match the observation matrix");
  }
  if (graph_u && graph_u->n_nodes() != u.rows()) throw InputError("row graph size mismatch");
  if (graph_v && graph_v->n_nodes() != v.rows()) throw InputError("column graph size mismatch");
}

// Applies alpha * blkdiag(B_i) + Lambda to x.
class SubproblemOperator {
 public:
  SubproblemOperator(const FactorMatrix& fixed, const SparseMatrix& obs_view,
                     const SidePrior& prior, double alpha)
      : fixed_(fixed), obs_(obs_view), prior_(prior), alpha_(alpha) {}

  void apply(const FactorMatrix& x, FactorMatrix& y) const {
    prior_.apply(x, y);
    const std::size_t d = x.cols();
    for (std::size_t i = 0; i < obs_.n_rows(); ++i) {
      auto xi = x.row(i);
      auto yi = y.row(i);
      for (std::size_t j : obs_.row_cols(i)) {
        auto vj = fixed_.row(j);
        const double s = alpha_ * dot(vj, xi);
        for (std::size_t k = 0; k < d; ++k) yi[k] += s * vj[k];
      }
    }
  }

 private:
  const FactorMatrix& fixed_;
  const SparseMatrix& obs_;
  const SidePrior& prior_;
  double alpha_;
};

// Per-row Cholesky factors of alpha * B_i + Lambda_ii I. Rows whose block is
// not positive definite fall back to the identity.
class BlockJacobi {
 public:
  BlockJacobi(const FactorMatrix& fixed, const SparseMatrix& obs_view, const SidePrior& prior,
              double alpha)
      : d_(fixed.cols()), blocks_(obs_view.n_rows()) {
    using Mat = Eigen::MatrixXd;
    for (std::size_t i = 0; i < obs_view.n_rows(); ++i) {
      Mat b = Mat::Zero(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(d_));
      for (std::size_t j : obs_view.row_cols(i)) {
        Eigen::Map<const Eigen::VectorXd> vj(fixed.row(j).data(), static_cast<Eigen::Index>(d_));
        b.selfadjointView<Eigen::Lower>().rankUpdate(vj, alpha);
      }
      b.diagonal().array() += prior.diagonal(i);
      Eigen::LLT<Mat> llt(b.selfadjointView<Eigen::Lower>());
      if (llt.info() == Eigen::Success) blocks_[i] = std::move(llt);
    }
  }

  void apply(const FactorMatrix& r, FactorMatrix& z) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      Eigen::Map<const Eigen::VectorXd> ri(r.row(i).data(), static_cast<Eigen::Index>(d_));
      Eigen::Map<Eigen::VectorXd> zi(z.row(i).data(), static_cast<Eigen::Index>(d_));
      if (blocks_[i].rows() > 0) {
        zi = blocks_[i].solve(ri);
      } else {
        zi = ri;
      }
    }
  }

 private:
  std::size_t d_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> blocks_;
};

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

}  // namespace

double objective(const FactorMatrix& u, const FactorMatrix& v, const ObservationSet& obs,
                 const GraphSI* graph_u, const GraphSI* graph_v, const SolverSettings& s) {
  check_shapes(u, v, obs, graph_u, graph_v);
  double data = 0.0;
  const SparseMatrix& rv = obs.row_view();
  for (std::size_t i = 0; i < rv.n_rows(); ++i) {
    const auto cols = rv.row_cols(i);
    const auto vals = rv.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double e = vals[p] - dot(u.row(i), v.row(cols[p]));
      data += e * e;
    }
  }
  const SidePrior prior_u{graph_u, s.u};
  const SidePrior prior_v{graph_v, s.v};
  return 0.5 * s.alpha * data + prior_u.energy(u) + prior_v.energy(v);
}

Gradient objective_gradient(const FactorMatrix& u, const FactorMatrix& v,
                            const ObservationSet& obs, const GraphSI* graph_u,
                            const GraphSI* graph_v, const SolverSettings& s) {
  check_shapes(u, v, obs, graph_u, graph_v);
  Gradient g{FactorMatrix(u.rows(), u.cols()), FactorMatrix(v.rows(), v.cols())};
  SidePrior{graph_u, s.u}.apply(u, g.u);
  SidePrior{graph_v, s.v}.apply(v, g.v);
  const SparseMatrix& rv = obs.row_view();
  for (std::size_t i = 0; i < rv.n_rows(); ++i) {
    const auto cols = rv.row_cols(i);
    const auto vals = rv.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const std::size_t j = cols[p];
      const double e = vals[p] - dot(u.row(i), v.row(j));
      axpy(-s.alpha * e, v.row(j), g.u.row(i));
      axpy(-s.alpha * e, u.row(i), g.v.row(j));
    }
  }
  return g;
}

FactorMatrix solve_subproblem(const FactorMatrix& fixed, const SparseMatrix& obs_view,
                              const SidePrior& prior, const SolverSettings& s,
                              const FactorMatrix& warm, CgStats* stats) {
  s.validate();
  const std::size_t n = obs_view.n_rows();
  const std::size_t d = fixed.cols();
  if (obs_view.n_cols() != fixed.rows()) {
    throw InputError("observation view columns do not match the fixed factor rows");
  }
  if (warm.rows() != n || warm.cols() != d) throw InputError("warm start has the wrong shape");
  if (prior.graph && prior.graph->n_nodes() != n) throw InputError("graph size mismatch");

  const SubproblemOperator op(fixed, obs_view, prior, s.alpha);

  FactorMatrix rhs(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = obs_view.row_cols(i);
    const auto vals = obs_view.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      axpy(s.alpha * vals[p], fixed.row(cols[p]), rhs.row(i));
    }
  }
  const double rhs_norm = std::sqrt(dot(rhs.data(), rhs.data()));

  std::optional<BlockJacobi> precond;
  if (s.precondition) precond.emplace(fixed, obs_view, prior, s.alpha);
  auto apply_precond = [&](const FactorMatrix& r, FactorMatrix& z) {
    if (precond) {
      precond->apply(r, z);
    } else {
      std::copy(r.data().begin(), r.data().end(), z.data().begin());
    }
  };

  FactorMatrix x = warm;
  FactorMatrix r(n, d);
  FactorMatrix z(n, d);
  FactorMatrix ap(n, d);
  op.apply(x, ap);
  for (std::size_t k = 0; k < n * d; ++k) r.data()[k] = rhs.data()[k] - ap.data()[k];
  apply_precond(r, z);
  FactorMatrix p = z;
  double rz = dot(r.data(), z.data());
  double r_norm = std::sqrt(dot(r.data(), r.data()));
  if (!std::isfinite(rhs_norm) || !std::isfinite(r_norm)) {
    throw NumericalError("non-finite residual in CG at iteration 0");
  }

  CgStats local;
  const double target = s.cg_rel_tol * rhs_norm;
  std::size_t it = 0;
  for (; it < s.cg_max_iters && r_norm > target; ++it) {
    op.apply(p, ap);
    const double p_ap = dot(p.data(), ap.data());
    if (!std::isfinite(p_ap)) {
      throw NumericalError("non-finite curvature in CG at iteration " + std::to_string(it));
    }
    if (p_ap <= 0.0) break;  // null direction of a singular system
    const double step = rz / p_ap;
    axpy(step, p.data(), x.data());
    axpy(-step, ap.data(), r.data());
    r_norm = std::sqrt(dot(r.data(), r.data()));
    if (!std::isfinite(r_norm)) {
      throw NumericalError("non-finite residual in CG at iteration " + std::to_string(it));
    }
    apply_precond(r, z);
    const double rz_next = dot(r.data(), z.data());
    const double beta = rz_next / rz;
    rz = rz_next;
    auto pd = p.data();
    auto zd = z.data();
    for (std::size_t k = 0; k < pd.size(); ++k) pd[k] = zd[k] + beta * pd[k];
  }
  if (!x.all_finite()) {
    throw NumericalError("non-finite solution in CG at iteration " + std::to_string(it));
  }
  local.iterations = it;
  local.rel_residual = rhs_norm > 0.0 ? r_norm / rhs_norm : r_norm;
  local.converged = r_norm <= target;
  if (stats) *stats = local;
  return x;
}

AlsResult als_train(const ObservationSet& obs, const GraphSI* graph_u, const GraphSI* graph_v,
                    const SolverSettings& s, FactorMatrix u0, FactorMatrix v0) {
  s.validate();
  check_shapes(u0, v0, obs, graph_u, graph_v);
  AlsResult res{std::move(u0), std::move(v0), {}, 0};
  const SidePrior prior_u{graph_u, s.u};
  const SidePrior prior_v{graph_v, s.v};
  res.trace.push_back(objective(res.u, res.v, obs, graph_u, graph_v, s));
  for (std::size_t sweep = 0; sweep < s.outer_sweeps; ++sweep) {
    CgStats st;
    res.u = solve_subproblem(res.v, obs.row_view(), prior_u, s, res.u, &st);
    res.cg_iterations += st.iterations;
    res.v = solve_subproblem(res.u, obs.col_view(), prior_v, s, res.v, &st);
    res.cg_iterations += st.iterations;
    const double prev = res.trace.back();
    const double cur = objective(res.u, res.v, obs, graph_u, graph_v, s);
    res.trace.push_back(cur);
    if (s.sweep_rel_tol > 0.0 && prev - cur <= s.sweep_rel_tol * std::abs(prev)) break;
  }
  return res;
}

FactorMatrix initial_factors(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  if (d == 0) throw InputError("latent dimension must be at least 1");
  return FactorMatrix::random_normal(n, d, 0.1 / std::sqrt(static_cast<double>(d)), rng);
}

double predict(const FactorMatrix& u, const FactorMatrix& v, std::size_t i, std::size_t j) {
  return dot(u.row(i), v.row(j));
}

double predict_rmse(const FactorMatrix& u, const FactorMatrix& v, const ObservationSet& heldout) {
  if (heldout.empty()) throw InputError("held-out set is empty");
  if (u.cols() != v.cols()) throw InputError("U and V have different latent dimensions");
  double sum = 0.0;
  for (const Triplet& t : heldout.entries()) {
    if (t.row >= u.rows() || t.col >= v.rows()) {
      throw InputError("held-out entry outside the factor dimensions");
    }
    const double e = t.value - predict(u, v, t.row, t.col);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(heldout.size()));
}

}  // namespace graem
