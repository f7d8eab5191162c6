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

#include "graem/graem.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "graem/datagen.hpp"
#include "graem/driver.hpp"
#include "graem/edge_prune.hpp"
#include "graem/errors.hpp"
#include "graem/io.hpp"

struct graem_config {
  graem::GraemConfig train;
  graem::SynthConfig synth;
};

struct graem_obs {
  graem::ObservationSet obs;
};

struct graem_graph {
  graem::GraphSI graph;
};

struct graem_factors {
  graem::FactorMatrix u;
  graem::FactorMatrix v;
};

struct graem_result {
  graem::GraemResult result;
};

namespace {

thread_local std::string g_last_error;

constexpr std::uint64_t kPruneTag = 0x9e11;

graem_status fail(graem_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename F>
graem_status guarded(F&& body) {
  try {
    body();
    return GRAEM_OK;
  } catch (const graem::ParseError& e) {
    return fail(GRAEM_ERR_PARSE, e.what());
  } catch (const graem::InputError& e) {
    return fail(GRAEM_ERR_INPUT, e.what());
  } catch (const graem::DataError& e) {
    return fail(GRAEM_ERR_DATA, e.what());
  } catch (const graem::NumericalError& e) {
    return fail(GRAEM_ERR_NUMERICAL, e.what());
  } catch (const graem::ConfigError& e) {
    return fail(GRAEM_ERR_CONFIG, e.what());
  } catch (const graem::IoError& e) {
    return fail(GRAEM_ERR_IO, e.what());
  } catch (const graem::Error& e) {
    return fail(GRAEM_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GRAEM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GRAEM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GRAEM_ERR_INTERNAL, "unknown error");
  }
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw graem::IoError("cannot open '" + path.string() + "' for writing");
  graem::io::write_key_values(out, kv);
  if (!out) throw graem::IoError("failed writing '" + path.string() + "'");
}

void write_edge_pairs(const std::filesystem::path& path, const std::vector<graem::Edge>& edges) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw graem::IoError("cannot open '" + path.string() + "' for writing");
  for (const graem::Edge& e : edges) out << e.i << ' ' << e.j << '\n';
}

std::vector<graem::SweepModel> parse_models(const char* list) {
  std::vector<graem::SweepModel> models;
  if (list == nullptr) return graem::SweepOptions{}.models;
  std::string s(list);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find(',', pos), s.size());
    const std::string name = s.substr(pos, end - pos);
    bool found = false;
    for (auto m : {graem::SweepModel::kPmf, graem::SweepModel::kGrals,
                   graem::SweepModel::kGralsTrueGraph, graem::SweepModel::kGpmf}) {
      if (graem::to_string(m) == name) {
        models.push_back(m);
        found = true;
      }
    }
    if (!found) throw graem::ConfigError("unknown model '" + name + "'");
    pos = end + 1;
  }
  return models;
}

const graem::GraphSI* graph_of(const graem_graph* g) { return g ? &g->graph : nullptr; }

}  // namespace

extern "C" {

const char* graem_last_error(void) { return g_last_error.c_str(); }

const char* graem_status_name(graem_status status) {
  switch (status) {
    case GRAEM_OK: return "ok";
    case GRAEM_ERR_INPUT: return "input error";
    case GRAEM_ERR_PARSE: return "parse error";
    case GRAEM_ERR_DATA: return "data error";
    case GRAEM_ERR_NUMERICAL: return "numerical error";
    case GRAEM_ERR_CONFIG: return "config error";
    case GRAEM_ERR_IO: return "io error";
    case GRAEM_ERR_INTERNAL: return "internal error";
    case GRAEM_ERR_NULL_ARGUMENT: return "null argument";
    case GRAEM_ERR_NOT_AVAILABLE: return "not available";
  }
  return "unknown status";
}

const char* graem_version(void) { return "0.1.0"; }

graem_status graem_config_create(graem_config** out) {
  if (!out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null output handle");
  return guarded([&] { *out = new graem_config(); });
}

void graem_config_destroy(graem_config* cfg) { delete cfg; }

graem_status graem_config_set(graem_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] { graem::io::apply_setting(key, value, cfg->train, cfg->synth); });
}

graem_status graem_config_load(graem_config* cfg, const char* path) {
  if (!cfg || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    for (const auto& [k, v] : graem::io::read_key_values(std::filesystem::path(path))) {
      graem::io::apply_setting(k, v, cfg->train, cfg->synth);
    }
  });
}

graem_status graem_config_write(const graem_config* cfg, const char* path) {
  if (!cfg || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] { write_lines(path, graem::io::effective_config(cfg->train, cfg->synth)); });
}

graem_status graem_config_get(const graem_config* cfg, const char* key, char* buf, size_t cap) {
  if (!cfg || !key || !buf) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    for (const auto& [k, v] : graem::io::effective_config(cfg->train, cfg->synth)) {
      if (k == key) {
        if (cap == 0) return;
        const std::size_t n = std::min(cap - 1, v.size());
        std::memcpy(buf, v.data(), n);
        buf[n] = '\0';
        return;
      }
    }
    throw graem::ConfigError(std::string("unknown config key '") + key + "'");
  });
}

graem_status graem_obs_read(const char* path, size_t index_base, graem_obs** out) {
  if (!path || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new graem_obs{graem::io::read_triplets(std::filesystem::path(path), index_base)};
  });
}

graem_status graem_obs_create(size_t n_rows, size_t n_cols, size_t count, const size_t* rows,
                              const size_t* cols, const double* values, graem_obs** out) {
  if (!out || (count && (!rows || !cols || !values))) {
    return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  }
  return guarded([&] {
    std::vector<graem::Triplet> entries(count);
    for (size_t k = 0; k < count; ++k) entries[k] = {rows[k], cols[k], values[k]};
    *out = new graem_obs{graem::ObservationSet(n_rows, n_cols, std::move(entries))};
  });
}

graem_status graem_obs_write(const graem_obs* obs, const char* path) {
  if (!obs || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] { graem::io::write_triplets(std::filesystem::path(path), obs->obs); });
}

graem_status graem_obs_shape(const graem_obs* obs, size_t* n_rows, size_t* n_cols,
                             size_t* count) {
  if (!obs) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  if (n_rows) *n_rows = obs->obs.n_rows();
  if (n_cols) *n_cols = obs->obs.n_cols();
  if (count) *count = obs->obs.size();
  return GRAEM_OK;
}

void graem_obs_destroy(graem_obs* obs) { delete obs; }

graem_status graem_graph_read(const char* path, size_t n_nodes, double gamma, size_t index_base,
                              graem_graph** out) {
  if (!path || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new graem_graph{
        graem::io::read_edge_list(std::filesystem::path(path), n_nodes, gamma, index_base)};
  });
}

graem_status graem_graph_create(size_t n_nodes, size_t n_edges, const size_t* i, const size_t* j,
                                double gamma, graem_graph** out) {
  if (!out || (n_edges && (!i || !j))) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<graem::Edge> edges(n_edges);
    for (size_t k = 0; k < n_edges; ++k) edges[k] = {i[k], j[k]};
    *out = new graem_graph{graem::GraphSI::from_edges(n_nodes, edges, gamma)};
  });
}

graem_status graem_graph_write(const graem_graph* graph, const char* path) {
  if (!graph || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded(
      [&] { graem::io::write_edge_list(std::filesystem::path(path), graph->graph.adjacency()); });
}

graem_status graem_graph_info(const graem_graph* graph, size_t* n_nodes, size_t* n_edges) {
  if (!graph) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  if (n_nodes) *n_nodes = graph->graph.n_nodes();
  if (n_edges) *n_edges = graph->graph.num_edges();
  return GRAEM_OK;
}

graem_status graem_graph_edges(const graem_graph* graph, size_t* i, size_t* j, size_t cap,
                               size_t* n_edges) {
  if (!graph || (cap && (!i || !j))) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    const auto edges = graph->graph.edges();
    for (size_t k = 0; k < edges.size() && k < cap; ++k) {
      i[k] = edges[k].i;
      j[k] = edges[k].j;
    }
    if (n_edges) *n_edges = edges.size();
  });
}

void graem_graph_destroy(graem_graph* graph) { delete graph; }

graem_status graem_factors_create(size_t n, size_t m, size_t d, const double* u, const double* v,
                                  graem_factors** out) {
  if (!out || !u || !v) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    if (d == 0) throw graem::InputError("factor rank must be positive");
    graem::FactorMatrix fu(n, d, std::vector<double>(u, u + n * d));
    graem::FactorMatrix fv(m, d, std::vector<double>(v, v + m * d));
    if (!fu.all_finite() || !fv.all_finite()) {
      throw graem::NumericalError("factor values must be finite");
    }
    *out = new graem_factors{std::move(fu), std::move(fv)};
  });
}

graem_status graem_factors_read(const char* u_path, const char* v_path, graem_factors** out) {
  if (!u_path || !v_path || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    graem::FactorMatrix u = graem::io::read_factor(u_path);
    graem::FactorMatrix v = graem::io::read_factor(v_path);
    if (u.cols() != v.cols()) {
      throw graem::DataError("factor ranks differ (" + std::to_string(u.cols()) + " vs " +
                             std::to_string(v.cols()) + ")");
    }
    *out = new graem_factors{std::move(u), std::move(v)};
  });
}

graem_status graem_factors_write(const graem_factors* f, const char* u_path, const char* v_path,
                                 int text) {
  if (!f || !u_path || !v_path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    graem::io::write_factor(u_path, f->u, text != 0);
    graem::io::write_factor(v_path, f->v, text != 0);
  });
}

graem_status graem_factors_shape(const graem_factors* f, size_t* n, size_t* m, size_t* d) {
  if (!f) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  if (n) *n = f->u.rows();
  if (m) *m = f->v.rows();
  if (d) *d = f->u.cols();
  return GRAEM_OK;
}

graem_status graem_factors_copy(const graem_factors* f, graem_side side, double* buf, size_t cap) {
  if (!f || !buf) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    const graem::FactorMatrix& m = side == GRAEM_SIDE_U ? f->u : f->v;
    const auto data = m.data();
    if (cap < data.size()) throw graem::InputError("buffer too small for factor matrix");
    std::memcpy(buf, data.data(), data.size() * sizeof(double));
  });
}

void graem_factors_destroy(graem_factors* f) { delete f; }

graem_status graem_rmse(const graem_factors* f, const graem_obs* obs, double* rmse) {
  if (!f || !obs || !rmse) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    if (obs->obs.n_rows() > f->u.rows() || obs->obs.n_cols() > f->v.rows()) {
      throw graem::InputError("observations exceed the factor dimensions");
    }
    *rmse = graem::predict_rmse(f->u, f->v, obs->obs);
  });
}

graem_status graem_train(const graem_config* cfg, graem_model model, const graem_obs* train,
                         const graem_graph* graph_u, const graem_graph* graph_v,
                         const graem_obs* heldout, graem_result** out) {
  if (!cfg || !train || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    const graem::ObservationSet* ho = heldout ? &heldout->obs : nullptr;
    graem::GraemResult r;
    switch (model) {
      case GRAEM_MODEL_PMF:
        r = graem::run_baseline(train->obs, nullptr, nullptr, cfg->train, ho,
                                graem::BaselineMode::kPmf);
        break;
      case GRAEM_MODEL_GRALS:
        r = graem::run_baseline(train->obs, graph_of(graph_u), graph_of(graph_v), cfg->train, ho,
                                graem::BaselineMode::kGrals);
        break;
      case GRAEM_MODEL_GPMF:
        r = graem::run_graem(train->obs, graph_of(graph_u), graph_of(graph_v), cfg->train, ho);
        break;
      default:
        throw graem::ConfigError("unknown model");
    }
    *out = new graem_result{std::move(r)};
  });
}

graem_status graem_prune(const graem_config* cfg, const graem_factors* f, const graem_obs* obs,
                         graem_side side, const graem_graph* graph, graem_result** out) {
  if (!cfg || !f || !obs || !graph || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    cfg->train.validate();
    const bool row_side = side == GRAEM_SIDE_U;
    const graem::FactorMatrix& mean = row_side ? f->u : f->v;
    const graem::FactorMatrix& fixed = row_side ? f->v : f->u;
    const graem::SparseMatrix& view = row_side ? obs->obs.row_view() : obs->obs.col_view();
    if (graph->graph.n_nodes() != mean.rows()) {
      throw graem::InputError("graph has " + std::to_string(graph->graph.n_nodes()) +
                              " nodes, factor has " + std::to_string(mean.rows()) + " rows");
    }
    if (view.n_rows() > mean.rows() || view.n_cols() > fixed.rows()) {
      throw graem::InputError("observations exceed the factor dimensions");
    }
    // Pad the observation view when the triplet file declares fewer rows.
    graem::SparseMatrix padded(mean.rows(), fixed.rows());
    const graem::SparseMatrix* use = &view;
    if (view.n_rows() != mean.rows() || view.n_cols() != fixed.rows()) {
      std::vector<graem::Triplet> t;
      for (std::size_t i = 0; i < view.n_rows(); ++i) {
        const auto c = view.row_cols(i);
        const auto v = view.row_values(i);
        for (std::size_t k = 0; k < c.size(); ++k) t.push_back({i, c[k], v[k]});
      }
      padded = graem::SparseMatrix::from_triplets(mean.rows(), fixed.rows(), t,
                                                  graem::Duplicates::kReject, false);
      use = &padded;
    }
    graem::MStepSettings ms;
    ms.alpha = 1.0 / cfg->train.sigma2;
    ms.graph_weight = row_side ? cfg->train.u.graph : cfg->train.v.graph;
    ms.k_samples = cfg->train.k_samples;
    ms.tau = cfg->train.tau;
    ms.seed = graem::derived_rng(cfg->train.seed, {kPruneTag, row_side ? 0u : 1u})();
    graem::MStepResult m = graem::m_step(graph->graph, graph->graph.adjacency(), mean, fixed,
                                         *use, ms);
    graem::GraemResult r;
    r.model = "prune";
    r.u = f->u;
    r.v = f->v;
    r.rounds = 1;
    r.timings.m_step = m.timings.total();
    r.timings.m_detail = m.timings;
    r.timings.total = r.timings.m_step;
    graem::GraphSI updated(std::move(m.adjacency), graph->graph.gamma());
    if (row_side) {
      r.graph_u = std::move(updated);
      r.report_u = std::move(m.report);
    } else {
      r.graph_v = std::move(updated);
      r.report_v = std::move(m.report);
    }
    *out = new graem_result{std::move(r)};
  });
}

graem_status graem_result_factors(const graem_result* r, graem_factors** out) {
  if (!r || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] { *out = new graem_factors{r->result.u, r->result.v}; });
}

graem_status graem_result_graph(const graem_result* r, graem_side side, graem_graph** out) {
  if (!r || !out) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  const auto& g = side == GRAEM_SIDE_U ? r->result.graph_u : r->result.graph_v;
  if (!g) return fail(GRAEM_ERR_NOT_AVAILABLE, "no updated graph for this side");
  return guarded([&] { *out = new graem_graph{*g}; });
}

graem_status graem_result_edge_counts(const graem_result* r, graem_side side, size_t* kept,
                                      size_t* removed_contested) {
  if (!r) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  const auto& rep = side == GRAEM_SIDE_U ? r->result.report_u : r->result.report_v;
  if (!rep) return fail(GRAEM_ERR_NOT_AVAILABLE, "no edge report for this side");
  if (kept) *kept = rep->kept;
  if (removed_contested) *removed_contested = rep->removed_contested;
  return GRAEM_OK;
}

graem_status graem_result_write_report(const graem_result* r, graem_side side, const char* path) {
  if (!r || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  const auto& rep = side == GRAEM_SIDE_U ? r->result.report_u : r->result.report_v;
  if (!rep) return fail(GRAEM_ERR_NOT_AVAILABLE, "no edge report for this side");
  return guarded([&] { graem::io::write_report_csv(std::filesystem::path(path), *rep); });
}

graem_status graem_result_write_summary(const graem_result* r, const graem_config* cfg,
                                        const char* path) {
  if (!r || !cfg || !path) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    write_lines(path, graem::run_summary(cfg->train, r->result));
  });
}

graem_status graem_result_rmse_trace(const graem_result* r, double* buf, size_t cap,
                                     size_t* len) {
  if (!r || (cap && !buf)) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  const auto& t = r->result.rmse_trace;
  for (size_t k = 0; k < t.size() && k < cap; ++k) buf[k] = t[k];
  if (len) *len = t.size();
  return GRAEM_OK;
}

void graem_result_destroy(graem_result* r) { delete r; }

graem_status graem_synth(const graem_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw graem::IoError("cannot create '" + dir.string() + "': " + ec.message());
    const graem::SynthDataset ds = graem::make_synth_dataset(cfg->synth);
    graem::io::write_triplets(dir / "train.txt", ds.obs_train);
    graem::io::write_triplets(dir / "valid.txt", ds.obs_valid);
    graem::io::write_edge_list(dir / "graph_u.txt", ds.graph_u.adjacency());
    graem::io::write_edge_list(dir / "graph_v.txt", ds.graph_v.adjacency());
    graem::io::write_edge_list(dir / "graph_u_true.txt", ds.graph_u_true.adjacency());
    graem::io::write_edge_list(dir / "graph_v_true.txt", ds.graph_v_true.adjacency());
    write_edge_pairs(dir / "corrupted_u.txt", ds.corrupted_u);
    write_edge_pairs(dir / "corrupted_v.txt", ds.corrupted_v);
    graem::io::write_factor(dir / "u_true.fac", ds.u_true);
    graem::io::write_factor(dir / "v_true.fac", ds.v_true);
    write_lines(dir / "config.txt", graem::io::effective_config(cfg->train, cfg->synth));
  });
}

graem_status graem_sweep(const graem_config* cfg, const char* axis, const double* values,
                         size_t n_values, size_t repeats, const char* models, size_t threads,
                         const char* csv_path, const char* summary_path) {
  if (!cfg || !axis || !csv_path || (n_values && !values)) {
    return fail(GRAEM_ERR_NULL_ARGUMENT, "null argument");
  }
  return guarded([&] {
    if (n_values == 0) throw graem::InputError("sweep needs at least one axis value");
    graem::SweepOptions opt;
    opt.repeats = repeats;
    opt.models = parse_models(models);
    opt.threads = threads;
    const auto rows =
        graem::run_sweep(graem::parse_sweep_axis(axis), std::vector<double>(values, values + n_values),
                         cfg->synth, cfg->train, opt);
    {
      std::ofstream out(csv_path, std::ios::trunc);
      if (!out) throw graem::IoError(std::string("cannot open '") + csv_path + "' for writing");
      graem::io::write_sweep_csv(out, rows);
    }
    if (summary_path) {
      std::ofstream out(summary_path, std::ios::trunc);
      if (!out) {
        throw graem::IoError(std::string("cannot open '") + summary_path + "' for writing");
      }
      graem::io::write_sweep_summary_csv(out, graem::summarize_sweep(rows));
    }
  });
}

}  // extern "C"
