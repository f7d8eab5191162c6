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

#include "graem/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "graem/edge_prune.hpp"
#include "graem/errors.hpp"

namespace graem {

namespace {

enum StreamTag : std::uint64_t {
  kGraphU = 11,
  kGraphV = 12,
  kFactorU = 21,
  kFactorV = 22,
  kObservations = 31,
  kSweepCell = 41,
  kTrain = 51,
};

std::uint64_t double_bits(double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof bits);
  return bits;
}

}  // namespace

void SynthConfig::validate() const {
  if (n == 0 || m == 0) throw InputError("synthetic matrix needs n, m >= 1");
  if (d == 0) throw InputError("synthetic d must be at least 1");
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw InputError("fidelity must lie in [0, 1]");
  if (!(sigma2_obs >= 0.0)) throw InputError("sigma2_obs must be non-negative");
  if (!(frac_observed > 0.0 && frac_observed < 1.0)) {
    throw InputError("frac_observed must lie in (0, 1)");
  }
  if (frac_observed * static_cast<double>(n) * static_cast<double>(m) < 1.0) {
    throw InputError("frac_observed * n * m must be at least 1");
  }
  if (block_size < 2) throw InputError("block_size must be at least 2");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (within_block_noise < 0.0) throw InputError("within_block_noise must be non-negative");
  if (!(dirichlet_conc > 0.0)) throw InputError("dirichlet_conc must be positive");
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw InputError("split_ratio must lie in (0, 1]");
}

GraphSI make_block_graph(std::size_t n, std::size_t block_size, double gamma) {
  if (block_size < 2) throw InputError("block_size must be at least 2");
  if (block_size > n) throw InputError("block_size exceeds the number of nodes");
  std::vector<Edge> edges;
  for (std::size_t start = 0; start < n; start += block_size) {
    const std::size_t end = std::min(n, start + block_size);
    for (std::size_t i = start; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) edges.push_back({i, j});
    }
  }
  return GraphSI::from_edges(n, edges, gamma);
}

CorruptedGraph corrupt_graph(const GraphSI& truth, double fidelity, std::mt19937_64& rng) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw InputError("fidelity must lie in [0, 1]");
  std::vector<Edge> edges = truth.edges();
  const std::size_t n = truth.n_nodes();
  const auto count =
      static_cast<std::size_t>(std::llround((1.0 - fidelity) * static_cast<double>(edges.size())));
  const std::size_t pairs = n * (n - 1) / 2;
  if (pairs - edges.size() < count) {
    throw InputError("graph too dense to insert " + std::to_string(count) + " corrupted edges");
  }

  std::shuffle(edges.begin(), edges.end(), rng);
  std::vector<Edge> kept(edges.begin() + static_cast<std::ptrdiff_t>(count), edges.end());

  std::vector<Edge> inserted;
  inserted.reserve(count);
  const std::size_t free_pairs = pairs - edges.size();
  if (free_pairs < 4 * count) {
    std::vector<Edge> candidates;
    candidates.reserve(free_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!truth.has_edge(i, j)) candidates.push_back({i, j});
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    inserted.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    std::set<Edge> chosen;
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    while (inserted.size() < count) {
      std::size_t i = node(rng);
      std::size_t j = node(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (truth.has_edge(i, j) || !chosen.insert({i, j}).second) continue;
      inserted.push_back({i, j});
    }
  }
  std::sort(inserted.begin(), inserted.end());
  kept.insert(kept.end(), inserted.begin(), inserted.end());
  return {GraphSI::from_edges(n, kept, truth.gamma()), std::move(inserted)};
}

FactorMatrix sample_factors(const GraphSI& graph, std::size_t d, double within_block_noise,
                            std::mt19937_64& rng) {
  if (d == 0) throw InputError("latent dimension must be at least 1");
  const std::size_t n = graph.n_nodes();
  const SparseCholesky chol(graph.laplacian_reg());
  FactorMatrix f(n, d);
  std::vector<double> scratch(n);
  std::vector<double> x(n);
  std::normal_distribution<double> noise(0.0, within_block_noise > 0.0 ? std::sqrt(within_block_noise) : 1.0);
  for (std::size_t k = 0; k < d; ++k) {
    draw_precision_sample(chol, rng, scratch, x);
    for (std::size_t i = 0; i < n; ++i) {
      f(i, k) = x[i] + (within_block_noise > 0.0 ? noise(rng) : 0.0);
    }
  }
  return f;
}

std::pair<ObservationSet, ObservationSet> sample_observations(
    const FactorMatrix& u, const FactorMatrix& v, double sigma2_obs, double frac_observed,
    double dirichlet_conc, double split_ratio, std::mt19937_64& rng) {
  const std::size_t n = u.rows();
  const std::size_t m = v.rows();
  if (u.cols() != v.cols()) throw InputError("U and V have different latent dimensions");
  if (!(dirichlet_conc > 0.0)) throw InputError("dirichlet_conc must be positive");
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw InputError("split_ratio must lie in (0, 1]");
  if (!(sigma2_obs >= 0.0)) throw InputError("sigma2_obs must be non-negative");
  const auto count = static_cast<std::size_t>(
      std::llround(frac_observed * static_cast<double>(n) * static_cast<double>(m)));
  if (count == 0 || count > n * m) {
    throw InputError("cannot sample " + std::to_string(count) + " distinct entries from a " +
                     std::to_string(n) + "x" + std::to_string(m) + " matrix");
  }

  auto dirichlet = [&](std::size_t size) {
    std::gamma_distribution<double> g(dirichlet_conc, 1.0);
    std::vector<double> p(size);
    double total = 0.0;
    for (double& x : p) total += (x = g(rng));
    for (double& x : p) x /= total;
    return p;
  };
  const std::vector<double> row_w = dirichlet(n);
  const std::vector<double> col_w = dirichlet(m);

  // Weighted sampling without replacement: keep the `count` largest
  // log(u) / w keys.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = row_w[i] * col_w[j];
      double r = unif(rng);
      while (r == 0.0) r = unif(rng);
      if (w > 0.0) keys.emplace_back(std::log(r) / w, i * m + j);
    }
  }
  if (keys.size() < count) {
    throw InputError("only " + std::to_string(keys.size()) +
                     " cells have positive sampling weight; cannot draw " + std::to_string(count));
  }
  auto by_key_desc = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count - 1), keys.end(),
                   by_key_desc);
  keys.resize(count);
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.second < b.second; });

  std::normal_distribution<double> noise(0.0, sigma2_obs > 0.0 ? std::sqrt(sigma2_obs) : 1.0);
  std::vector<Triplet> sampled;
  sampled.reserve(count);
  for (const auto& [key, cell] : keys) {
    const std::size_t i = cell / m;
    const std::size_t j = cell % m;
    double r = dot(u.row(i), v.row(j));
    if (sigma2_obs > 0.0) r += noise(rng);
    sampled.push_back({i, j, r});
  }
  std::shuffle(sampled.begin(), sampled.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(count)));
  std::vector<Triplet> train(sampled.begin(), sampled.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Triplet> valid(sampled.begin() + static_cast<std::ptrdiff_t>(n_train), sampled.end());
  auto by_cell = [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  };
  std::sort(train.begin(), train.end(), by_cell);
  std::sort(valid.begin(), valid.end(), by_cell);
  return {ObservationSet(n, m, std::move(train)), ObservationSet(n, m, std::move(valid))};
}

SynthDataset make_synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset ds;
  ds.graph_u_true = make_block_graph(cfg.n, cfg.block_size, cfg.gamma);
  ds.graph_v_true = make_block_graph(cfg.m, cfg.block_size, cfg.gamma);

  std::mt19937_64 rng_gu = derived_rng(cfg.seed, {kGraphU});
  CorruptedGraph cu = corrupt_graph(ds.graph_u_true, cfg.fidelity, rng_gu);
  ds.graph_u = std::move(cu.graph);
  ds.corrupted_u = std::move(cu.corrupted);
  std::mt19937_64 rng_gv = derived_rng(cfg.seed, {kGraphV});
  CorruptedGraph cv = corrupt_graph(ds.graph_v_true, cfg.fidelity, rng_gv);
  ds.graph_v = std::move(cv.graph);
  ds.corrupted_v = std::move(cv.corrupted);

  std::mt19937_64 rng_fu = derived_rng(cfg.seed, {kFactorU});
  ds.u_true = sample_factors(ds.graph_u_true, cfg.d, cfg.within_block_noise, rng_fu);
  std::mt19937_64 rng_fv = derived_rng(cfg.seed, {kFactorV});
  ds.v_true = sample_factors(ds.graph_v_true, cfg.d, cfg.within_block_noise, rng_fv);

  std::mt19937_64 rng_obs = derived_rng(cfg.seed, {kObservations});
  auto [train, valid] = sample_observations(ds.u_true, ds.v_true, cfg.sigma2_obs,
                                            cfg.frac_observed, cfg.dirichlet_conc,
                                            cfg.split_ratio, rng_obs);
  ds.obs_train = std::move(train);
  ds.obs_valid = std::move(valid);
  return ds;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "fidelity") return SweepAxis::kFidelity;
  if (name == "sigma2_obs" || name == "noise") return SweepAxis::kSigma2Obs;
  if (name == "frac_observed" || name == "observed") return SweepAxis::kFracObserved;
  if (name == "d") return SweepAxis::kD;
  throw InputError("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kFidelity: return "fidelity";
    case SweepAxis::kSigma2Obs: return "sigma2_obs";
    case SweepAxis::kFracObserved: return "frac_observed";
    case SweepAxis::kD: return "d";
  }
  return "?";
}

std::string_view to_string(SweepModel model) {
  switch (model) {
    case SweepModel::kPmf: return "pmf";
    case SweepModel::kGrals: return "grals";
    case SweepModel::kGralsTrueGraph: return "grals-true-graph";
    case SweepModel::kGpmf: return "gpmf";
  }
  return "?";
}

SynthConfig sweep_cell_config(const SynthConfig& base, SweepAxis axis, double value,
                              std::size_t repeat) {
  SynthConfig cell = base;
  switch (axis) {
    case SweepAxis::kFidelity: cell.fidelity = value; break;
    case SweepAxis::kSigma2Obs: cell.sigma2_obs = value; break;
    case SweepAxis::kFracObserved: cell.frac_observed = value; break;
    case SweepAxis::kD:
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw InputError("d sweep values must be positive integers");
      }
      cell.d = static_cast<std::size_t>(value);
      break;
  }
  cell.seed = derived_rng(base.seed, {kSweepCell, static_cast<std::uint64_t>(axis),
                                      double_bits(value), repeat})();
  return cell;
}

std::vector<SweepRow> run_sweep(SweepAxis axis, const std::vector<double>& values,
                                const SynthConfig& base, const GraemConfig& train,
                                const SweepOptions& options) {
  if (options.repeats == 0) throw InputError("repeats must be at least 1");
  if (options.models.empty()) throw InputError("no models selected");
  base.validate();
  train.validate();

  struct Task {
    double value;
    std::size_t repeat;
  };
  std::vector<Task> tasks;
  for (double value : values) {
    for (std::size_t r = 0; r < options.repeats; ++r) tasks.push_back({value, r});
  }
  // Validate every cell before spending time on any of them.
  for (const Task& t : tasks) sweep_cell_config(base, axis, t.value, t.repeat).validate();

  const std::size_t n_models = options.models.size();
  std::vector<SweepRow> rows(tasks.size() * n_models);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      try {
        const SynthConfig cell = sweep_cell_config(base, axis, tasks[t].value, tasks[t].repeat);
        const SynthDataset ds = make_synth_dataset(cell);
        GraemConfig cfg = train;
        cfg.d = cell.d;
        if (options.tie_sigma2 && cell.sigma2_obs > 0.0) cfg.sigma2 = cell.sigma2_obs;
        cfg.seed = derived_rng(cell.seed, {kTrain})();
        // Training priors use the training gamma on the same edge sets.
        const GraphSI gu(ds.graph_u.adjacency(), cfg.gamma);
        const GraphSI gv(ds.graph_v.adjacency(), cfg.gamma);
        const GraphSI gu_true(ds.graph_u_true.adjacency(), cfg.gamma);
        const GraphSI gv_true(ds.graph_v_true.adjacency(), cfg.gamma);
        for (std::size_t k = 0; k < n_models; ++k) {
          const SweepModel model = options.models[k];
          const auto t0 = std::chrono::steady_clock::now();
          GraemResult res;
          double ce = 0.0;
          double te = 0.0;
          switch (model) {
            case SweepModel::kPmf:
              res = run_baseline(ds.obs_train, nullptr, nullptr, cfg, &ds.obs_valid,
                                 BaselineMode::kPmf);
              break;
            case SweepModel::kGrals:
              res = run_baseline(ds.obs_train, &gu, &gv, cfg, &ds.obs_valid,
                                 BaselineMode::kGrals);
              break;
            case SweepModel::kGralsTrueGraph:
              res = run_baseline(ds.obs_train, &gu_true, &gv_true, cfg,
                                 &ds.obs_valid, BaselineMode::kGrals);
              break;
            case SweepModel::kGpmf: {
              res = run_graem(ds.obs_train, &gu, &gv, cfg, &ds.obs_valid);
              const EdgeClassification cu = classify_edges(
                  res.graph_u->adjacency(), ds.graph_u.adjacency(), ds.graph_u_true.adjacency());
              const EdgeClassification cv = classify_edges(
                  res.graph_v->adjacency(), ds.graph_v.adjacency(), ds.graph_v_true.adjacency());
              const double corrupted = static_cast<double>(cu.corrupted + cv.corrupted);
              const double true_edges = static_cast<double>(cu.true_edges + cv.true_edges);
              if (corrupted > 0) {
                ce = (cu.frac_ce_removed * cu.corrupted + cv.frac_ce_removed * cv.corrupted) /
                     corrupted;
              }
              if (true_edges > 0) {
                te = (cu.frac_te_removed * cu.true_edges + cv.frac_te_removed * cv.true_edges) /
                     true_edges;
              }
              break;
            }
          }
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          rows[t * n_models + k] = {tasks[t].value, std::string(to_string(model)),
                                    tasks[t].repeat, res.rmse_trace.back(), ce, te, secs};
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  std::size_t n_threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  n_threads = std::max<std::size_t>(1, std::min(n_threads, tasks.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

std::vector<SweepCell> summarize_sweep(const std::vector<SweepRow>& rows) {
  std::vector<SweepCell> cells;
  std::map<std::pair<double, std::string>, std::vector<double>> groups;
  std::vector<std::pair<double, std::string>> order;
  for (const SweepRow& r : rows) {
    auto key = std::make_pair(r.axis_value, r.model);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.rmse);
  }
  for (const auto& key : order) {
    const std::vector<double>& xs = groups[key];
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    cells.push_back({key.first, key.second, mean, sd, xs.size()});
  }
  return cells;
}

}  // namespace graem
