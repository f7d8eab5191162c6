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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graem/edge_prune.hpp"
#include "graem/factorization.hpp"

namespace graem {

struct GraemConfig {
  std::size_t d = 10;
  double sigma2 = 1.0;
  /// Used when graphs are built from edge lists.
  double gamma = 1.0;
  double tau = 0.0;
  /// Posterior samples per latent column; 0 = mean-only SCM.
  std::size_t k_samples = 100;
  std::size_t cg_max_iters = 200;
  double cg_rel_tol = 1e-6;
  std::size_t outer_sweeps = 30;
  double sweep_rel_tol = 1e-7;
  bool precondition = true;
  std::size_t em_max_rounds = 1;
  /// Stop once held-out RMSE improves by less than this; 0 disables.
  double em_tol = 0.0;
  /// Multi-round only: threshold against A0 without intersecting with the
  /// previous round's graph.
  bool readmit = false;
  std::uint64_t seed = 1;
  SideWeights u{1.0, 1.0};
  SideWeights v{1.0, 1.0};

  /// Throws ConfigError on invalid values.
  void validate() const;
  SolverSettings solver_settings() const;
};

struct PhaseTimings {
  double init = 0.0;
  double m_step = 0.0;
  double e_step = 0.0;
  double evaluation = 0.0;
  double total = 0.0;
  MStepTimings m_detail;
};

struct GraemResult {
  std::string model;
  FactorMatrix u;
  FactorMatrix v;
  std::optional<GraphSI> graph_u;
  std::optional<GraphSI> graph_v;
  std::optional<EdgeUpdateReport> report_u;
  std::optional<EdgeUpdateReport> report_v;
  /// Initial (PMF) entry first, then one entry per EM round. Held-out RMSE
  /// when a held-out set is given, training RMSE otherwise.
  std::vector<double> rmse_trace;
  bool rmse_is_heldout = false;
  std::size_t rounds = 0;
  std::size_t cg_iterations = 0;
  PhaseTimings timings;
};

/// PMF initialization, then rounds of contested-edge removal per present side
/// followed by a warm-started graph-regularized E-step.
GraemResult run_graem(const ObservationSet& obs, const GraphSI* graph_u, const GraphSI* graph_v,
                      const GraemConfig& cfg, const ObservationSet* heldout = nullptr);

enum class BaselineMode { kPmf, kGrals };

/// Single training run with the given graphs (grals) or none (pmf).
GraemResult run_baseline(const ObservationSet& obs, const GraphSI* graph_u,
                         const GraphSI* graph_v, const GraemConfig& cfg,
                         const ObservationSet* heldout, BaselineMode mode);

/// Flat key/value record: effective config, timings, final RMSE, edge counts.
std::vector<std::pair<std::string, std::string>> run_summary(const GraemConfig& cfg,
                                                             const GraemResult& result);

}  // namespace graem
