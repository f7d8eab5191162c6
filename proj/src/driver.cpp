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

#include "graem/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "graem/errors.hpp"

namespace graem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream tags for derived_rng.
constexpr std::uint64_t kInitTag = 0x1417;
constexpr std::uint64_t kMStepTag = 0x3e57;

SparseMatrix intersect_adjacency(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Edge> kept;
  for (const Edge& e : adjacency_edges(a)) {
    if (b.at(e.i, e.j) != 0.0) kept.push_back(e);
  }
  return build_adjacency(kept, a.n_rows());
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Evaluator {
  const ObservationSet& train;
  const ObservationSet* heldout;

  double operator()(const FactorMatrix& u, const FactorMatrix& v) const {
    return predict_rmse(u, v, heldout ? *heldout : train);
  }
};

void check_inputs(const ObservationSet& obs, const GraphSI* graph_u, const GraphSI* graph_v,
                  const ObservationSet* heldout) {
  if (graph_u && graph_u->n_nodes() != obs.n_rows()) {
    throw InputError("row graph has " + std::to_string(graph_u->n_nodes()) +
                     " nodes, data has " + std::to_string(obs.n_rows()) + " rows");
  }
  if (graph_v && graph_v->n_nodes() != obs.n_cols()) {
    throw InputError("column graph has " + std::to_string(graph_v->n_nodes()) +
                     " nodes, data has " + std::to_string(obs.n_cols()) + " columns");
  }
  if (heldout && (heldout->n_rows() > obs.n_rows() || heldout->n_cols() > obs.n_cols())) {
    throw InputError("held-out set exceeds the training dimensions");
  }
  if (heldout && heldout->empty()) throw InputError("held-out set is empty");
}

std::pair<FactorMatrix, FactorMatrix> initial_pair(const ObservationSet& obs,
                                                   const GraemConfig& cfg) {
  std::mt19937_64 rng = derived_rng(cfg.seed, {kInitTag});
  FactorMatrix u = initial_factors(obs.n_rows(), cfg.d, rng);
  FactorMatrix v = initial_factors(obs.n_cols(), cfg.d, rng);
  return {std::move(u), std::move(v)};
}

}  // namespace

void GraemConfig::validate() const {
  if (d == 0) throw ConfigError("d must be at least 1");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (em_max_rounds == 0) throw ConfigError("em_max_rounds must be at least 1");
  if (em_tol < 0.0) throw ConfigError("em_tol must be non-negative");
  if (!(cg_rel_tol > 0.0 && cg_rel_tol < 1.0)) throw ConfigError("cg_tol must lie in (0, 1)");
  if (cg_max_iters == 0) throw ConfigError("cg_iters must be at least 1");
  if (outer_sweeps == 0) throw ConfigError("outer_sweeps must be at least 1");
  if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
  for (const SideWeights* w : {&u, &v}) {
    if (w->graph < 0.0 || w->l2 < 0.0) throw ConfigError("regularization weights must be >= 0");
  }
}

SolverSettings GraemConfig::solver_settings() const {
  SolverSettings s;
  s.cg_max_iters = cg_max_iters;
  s.cg_rel_tol = cg_rel_tol;
  s.outer_sweeps = outer_sweeps;
  s.sweep_rel_tol = sweep_rel_tol;
  s.alpha = 1.0 / sigma2;
  s.u = u;
  s.v = v;
  s.precondition = precondition;
  return s;
}

GraemResult run_graem(const ObservationSet& obs, const GraphSI* graph_u, const GraphSI* graph_v,
                      const GraemConfig& cfg, const ObservationSet* heldout) {
  cfg.validate();
  if (cfg.em_tol > 0.0 && !heldout) {
    throw ConfigError("em_tol stopping needs a held-out set");
  }
  check_inputs(obs, graph_u, graph_v, heldout);
  const auto t_start = Clock::now();
  const SolverSettings s = cfg.solver_settings();
  const Evaluator rmse{obs, heldout};

  GraemResult res;
  res.model = "gpmf";
  res.rmse_is_heldout = heldout != nullptr;

  auto t0 = Clock::now();
  auto [u0, v0] = initial_pair(obs, cfg);
  AlsResult als = als_train(obs, nullptr, nullptr, s, std::move(u0), std::move(v0));
  res.cg_iterations += als.cg_iterations;
  res.timings.init = seconds_since(t0);

  t0 = Clock::now();
  res.rmse_trace.push_back(rmse(als.u, als.v));
  res.timings.evaluation += seconds_since(t0);

  if (graph_u || graph_v) {
    std::optional<GraphSI> cur_u;
    std::optional<GraphSI> cur_v;
    if (graph_u) cur_u = *graph_u;
    if (graph_v) cur_v = *graph_v;
    for (std::size_t round = 1; round <= cfg.em_max_rounds; ++round) {
      t0 = Clock::now();
      MStepSettings ms;
      ms.alpha = s.alpha;
      ms.k_samples = cfg.k_samples;
      ms.tau = cfg.tau;
      if (cur_u) {
        ms.graph_weight = cfg.u.graph;
        ms.seed = derived_rng(cfg.seed, {kMStepTag, round, 0})();
        MStepResult m = m_step(*cur_u, graph_u->adjacency(), als.u, als.v, obs.row_view(), ms);
        SparseMatrix next = cfg.readmit ? std::move(m.adjacency)
                                        : intersect_adjacency(m.adjacency, cur_u->adjacency());
        cur_u = GraphSI(std::move(next), graph_u->gamma());
        res.report_u = std::move(m.report);
        res.timings.m_detail.precision += m.timings.precision;
        res.timings.m_detail.cholesky += m.timings.cholesky;
        res.timings.m_detail.sampling += m.timings.sampling;
        res.timings.m_detail.scm += m.timings.scm;
        res.timings.m_detail.threshold += m.timings.threshold;
      }
      if (cur_v) {
        ms.graph_weight = cfg.v.graph;
        ms.seed = derived_rng(cfg.seed, {kMStepTag, round, 1})();
        MStepResult m = m_step(*cur_v, graph_v->adjacency(), als.v, als.u, obs.col_view(), ms);
        SparseMatrix next = cfg.readmit ? std::move(m.adjacency)
                                        : intersect_adjacency(m.adjacency, cur_v->adjacency());
        cur_v = GraphSI(std::move(next), graph_v->gamma());
        res.report_v = std::move(m.report);
        res.timings.m_detail.precision += m.timings.precision;
        res.timings.m_detail.cholesky += m.timings.cholesky;
        res.timings.m_detail.sampling += m.timings.sampling;
        res.timings.m_detail.scm += m.timings.scm;
        res.timings.m_detail.threshold += m.timings.threshold;
      }
      res.timings.m_step += seconds_since(t0);

      t0 = Clock::now();
      als = als_train(obs, cur_u ? &*cur_u : nullptr, cur_v ? &*cur_v : nullptr, s,
                      std::move(als.u), std::move(als.v));
      res.cg_iterations += als.cg_iterations;
      res.timings.e_step += seconds_since(t0);

      t0 = Clock::now();
      res.rmse_trace.push_back(rmse(als.u, als.v));
      res.timings.evaluation += seconds_since(t0);
      ++res.rounds;

      const double prev = res.rmse_trace[res.rmse_trace.size() - 2];
      if (cfg.em_tol > 0.0 && prev - res.rmse_trace.back() < cfg.em_tol) break;
    }
    res.graph_u = std::move(cur_u);
    res.graph_v = std::move(cur_v);
  }
  res.u = std::move(als.u);
  res.v = std::move(als.v);
  res.timings.total = seconds_since(t_start);
  return res;
}

GraemResult run_baseline(const ObservationSet& obs, const GraphSI* graph_u,
                         const GraphSI* graph_v, const GraemConfig& cfg,
                         const ObservationSet* heldout, BaselineMode mode) {
  cfg.validate();
  check_inputs(obs, graph_u, graph_v, heldout);
  if (mode == BaselineMode::kGrals && !graph_u && !graph_v) {
    throw ConfigError("grals needs at least one graph");
  }
  if (mode == BaselineMode::kPmf) {
    graph_u = nullptr;
    graph_v = nullptr;
  }
  const auto t_start = Clock::now();
  GraemResult res;
  res.model = mode == BaselineMode::kPmf ? "pmf" : "grals";
  res.rmse_is_heldout = heldout != nullptr;

  auto t0 = Clock::now();
  auto [u0, v0] = initial_pair(obs, cfg);
  AlsResult als =
      als_train(obs, graph_u, graph_v, cfg.solver_settings(), std::move(u0), std::move(v0));
  res.cg_iterations = als.cg_iterations;
  res.timings.init = seconds_since(t0);

  t0 = Clock::now();
  res.rmse_trace.push_back(predict_rmse(als.u, als.v, heldout ? *heldout : obs));
  res.timings.evaluation = seconds_since(t0);
  if (graph_u) res.graph_u = *graph_u;
  if (graph_v) res.graph_v = *graph_v;
  res.u = std::move(als.u);
  res.v = std::move(als.v);
  res.timings.total = seconds_since(t_start);
  return res;
}

std::vector<std::pair<std::string, std::string>> run_summary(const GraemConfig& cfg,
                                                             const GraemResult& r) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  add("model", r.model);
  add("config.d", std::to_string(cfg.d));
  add("config.sigma2", format_double(cfg.sigma2));
  add("config.gamma", format_double(cfg.gamma));
  add("config.tau", format_double(cfg.tau));
  add("config.k_samples", std::to_string(cfg.k_samples));
  add("config.cg_iters", std::to_string(cfg.cg_max_iters));
  add("config.cg_tol", format_double(cfg.cg_rel_tol));
  add("config.outer_sweeps", std::to_string(cfg.outer_sweeps));
  add("config.sweep_tol", format_double(cfg.sweep_rel_tol));
  add("config.precondition", cfg.precondition ? "true" : "false");
  add("config.em_max_rounds", std::to_string(cfg.em_max_rounds));
  add("config.em_tol", format_double(cfg.em_tol));
  add("config.readmit", cfg.readmit ? "true" : "false");
  add("config.seed", std::to_string(cfg.seed));
  add("config.weight_graph_u", format_double(cfg.u.graph));
  add("config.weight_graph_v", format_double(cfg.v.graph));
  add("config.weight_l2_u", format_double(cfg.u.l2));
  add("config.weight_l2_v", format_double(cfg.v.l2));
  add("rounds", std::to_string(r.rounds));
  add("cg_iterations", std::to_string(r.cg_iterations));
  add("rmse_source", r.rmse_is_heldout ? "heldout" : "train");
  std::string trace;
  for (std::size_t k = 0; k < r.rmse_trace.size(); ++k) {
    if (k) trace += ' ';
    trace += format_double(r.rmse_trace[k]);
  }
  add("rmse_trace", trace);
  add("rmse_final", r.rmse_trace.empty() ? "nan" : format_double(r.rmse_trace.back()));
  auto side = [&](const char* name, const std::optional<GraphSI>& g,
                  const std::optional<EdgeUpdateReport>& rep) {
    const std::string prefix = std::string("graph_") + name;
    add(prefix + ".edges", g ? std::to_string(g->num_edges()) : "0");
    if (rep) {
      add(prefix + ".kept", std::to_string(rep->kept));
      add(prefix + ".removed_contested", std::to_string(rep->removed_contested));
    }
  };
  side("u", r.graph_u, r.report_u);
  side("v", r.graph_v, r.report_v);
  add("time.init", format_double(r.timings.init));
  add("time.m_step", format_double(r.timings.m_step));
  add("time.m_step.precision", format_double(r.timings.m_detail.precision));
  add("time.m_step.cholesky", format_double(r.timings.m_detail.cholesky));
  add("time.m_step.sampling", format_double(r.timings.m_detail.sampling));
  add("time.m_step.scm", format_double(r.timings.m_detail.scm));
  add("time.m_step.threshold", format_double(r.timings.m_detail.threshold));
  add("time.e_step", format_double(r.timings.e_step));
  add("time.evaluation", format_double(r.timings.evaluation));
  add("time.total", format_double(r.timings.total));
  return kv;
}

}  // namespace graem
