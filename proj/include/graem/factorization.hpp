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
#include <vector>

#include "graem/factor.hpp"
#include "graem/sparse.hpp"

namespace graem {

/// Prior weights for one side. With a graph the prior precision is
/// `graph * L+`; without one it is `l2 * I`.
struct SideWeights {
  double graph = 1.0;
  double l2 = 1.0;
};

struct SolverSettings {
  std::size_t cg_max_iters = 200;
  double cg_rel_tol = 1e-6;
  std::size_t outer_sweeps = 20;
  /// Early exit from alternating sweeps once the relative objective decrease
  /// drops below this value. Zero runs all sweeps.
  double sweep_rel_tol = 1e-7;
  /// Inverse observation noise 1 / sigma^2.
  double alpha = 1.0;
  SideWeights u;
  SideWeights v;
  /// Block-Jacobi preconditioning with the per-row D x D diagonal blocks.
  bool precondition = true;

  /// Throws InputError unless cg_rel_tol is in (0, 1) and alpha > 0.
  void validate() const;
};

/// Prior precision of one side: `w.graph * L+` when a graph is present,
/// otherwise `w.l2 * I`.
struct SidePrior {
  const GraphSI* graph = nullptr;
  SideWeights weights;

  double diagonal(std::size_t i) const;
  /// out = Lambda * x applied to every column of the n x d matrix x.
  void apply(const FactorMatrix& x, FactorMatrix& out) const;
  /// 0.5 * tr(X^T Lambda X).
  double energy(const FactorMatrix& x) const;
};

/// alpha/2 * ||P_Omega(R - U V^T)||_F^2 + 0.5 tr(U^T Lambda_U U) + 0.5 tr(V^T Lambda_V V).
/// With alpha = 1 this is the graph-regularized least-squares objective.
double objective(const FactorMatrix& u, const FactorMatrix& v, const ObservationSet& obs,
                 const GraphSI* graph_u, const GraphSI* graph_v, const SolverSettings& s);

struct Gradient {
  FactorMatrix u;
  FactorMatrix v;
};

Gradient objective_gradient(const FactorMatrix& u, const FactorMatrix& v,
                            const ObservationSet& obs, const GraphSI* graph_u,
                            const GraphSI* graph_v, const SolverSettings& s);

struct CgStats {
  std::size_t iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Minimizes the objective over the side indexed by the rows of `obs_view`
/// with `fixed` held constant, i.e. solves
///
///   (alpha * blkdiag(B_i) + Lambda (x) I_D) vec(X^T) = alpha * vec(fixed^T R^T),
///   B_i = sum_{j in Omega_i} fixed_j^T fixed_j,
///
/// by (preconditioned) conjugate gradient from `warm`. The system is applied
/// matrix-free. Throws NumericalError naming the iteration on non-finite state.
FactorMatrix solve_subproblem(const FactorMatrix& fixed, const SparseMatrix& obs_view,
                              const SidePrior& prior, const SolverSettings& s,
                              const FactorMatrix& warm, CgStats* stats = nullptr);

struct AlsResult {
  FactorMatrix u;
  FactorMatrix v;
  /// Objective at the initial point followed by one entry per sweep.
  std::vector<double> trace;
  std::size_t cg_iterations = 0;
};

/// Alternates U and V subproblem solves.
AlsResult als_train(const ObservationSet& obs, const GraphSI* graph_u, const GraphSI* graph_v,
                    const SolverSettings& s, FactorMatrix u0, FactorMatrix v0);

/// Entries N(0, (0.1 / sqrt(d))^2).
FactorMatrix initial_factors(std::size_t n, std::size_t d, std::mt19937_64& rng);

double predict(const FactorMatrix& u, const FactorMatrix& v, std::size_t i, std::size_t j);

/// Root mean squared error over `heldout`. Throws InputError when empty.
double predict_rmse(const FactorMatrix& u, const FactorMatrix& v, const ObservationSet& heldout);

}  // namespace graem
