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

// Command-line front end. Talks to the engine only through graem.h.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "graem/graem.h"

namespace {

struct Failure {
  std::string message;
};

void check(graem_status s) {
  if (s != GRAEM_OK) {
    throw Failure{std::string(graem_status_name(s)) + ": " + graem_last_error()};
  }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};

using ConfigPtr = std::unique_ptr<graem_config, Deleter<graem_config, graem_config_destroy>>;
using ObsPtr = std::unique_ptr<graem_obs, Deleter<graem_obs, graem_obs_destroy>>;
using GraphPtr = std::unique_ptr<graem_graph, Deleter<graem_graph, graem_graph_destroy>>;
using FactorsPtr = std::unique_ptr<graem_factors, Deleter<graem_factors, graem_factors_destroy>>;
using ResultPtr = std::unique_ptr<graem_result, Deleter<graem_result, graem_result_destroy>>;

// Settings shared by every subcommand. Empty strings mean "not given".
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
  std::string tau;
  std::string k_samples;
  std::string gamma;
  std::string d;
  std::string cg_iters;
  std::string cg_tol;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "flat key = value file");
  cmd->add_option("--set", o.sets, "override, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--tau", o.tau, "edge threshold");
  cmd->add_option("--k-samples", o.k_samples, "posterior samples per latent column");
  cmd->add_option("--gamma", o.gamma, "Laplacian diagonal shift");
  cmd->add_option("--d", o.d, "latent dimension");
  cmd->add_option("--cg-iters", o.cg_iters, "conjugate-gradient iteration cap");
  cmd->add_option("--cg-tol", o.cg_tol, "conjugate-gradient relative tolerance");
}

// File values first, then --set, then the dedicated flags.
ConfigPtr build_config(const CommonOptions& o) {
  graem_config* raw = nullptr;
  check(graem_config_create(&raw));
  ConfigPtr cfg(raw);
  if (!o.config_path.empty()) check(graem_config_load(cfg.get(), o.config_path.c_str()));
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{"--set expects key=value, got '" + kv + "'"};
    check(graem_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  const std::pair<const char*, const std::string*> flags[] = {
      {"seed", &o.seed},   {"tau", &o.tau}, {"k_samples", &o.k_samples},
      {"gamma", &o.gamma}, {"d", &o.d},     {"cg_iters", &o.cg_iters},
      {"cg_tol", &o.cg_tol},
  };
  for (const auto& [key, value] : flags) {
    if (!value->empty()) check(graem_config_set(cfg.get(), key, value->c_str()));
  }
  return cfg;
}

double config_real(const graem_config* cfg, const char* key) {
  char buf[64];
  check(graem_config_get(cfg, key, buf, sizeof buf));
  return std::stod(buf);
}

ObsPtr read_obs(const std::string& path, std::size_t index_base) {
  graem_obs* raw = nullptr;
  check(graem_obs_read(path.c_str(), index_base, &raw));
  return ObsPtr(raw);
}

GraphPtr read_graph(const std::string& path, std::size_t n_nodes, double gamma,
                    std::size_t index_base) {
  if (path.empty()) return nullptr;
  graem_graph* raw = nullptr;
  check(graem_graph_read(path.c_str(), n_nodes, gamma, index_base, &raw));
  return GraphPtr(raw);
}

FactorsPtr read_factors(const std::string& u, const std::string& v) {
  graem_factors* raw = nullptr;
  check(graem_factors_read(u.c_str(), v.c_str(), &raw));
  return FactorsPtr(raw);
}

// Every input must exist before any work starts.
void require_inputs(std::initializer_list<const std::string*> paths) {
  for (const std::string* p : paths) {
    if (!p->empty() && !std::filesystem::is_regular_file(*p)) {
      throw Failure{"input file not found: " + *p};
    }
  }
}

std::filesystem::path in_dir(const std::string& dir, const char* name) {
  return std::filesystem::path(dir) / name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse matrix completion with graph side information"};
  app.require_subcommand(1);
  app.set_version_flag("--version", graem_version());

  CommonOptions common;
  std::size_t index_base = 0;
  bool text = false;

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset bundle");
  add_common(synth, common);
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model and write factors and a summary");
  add_common(train, common);
  std::string model = "gpmf";
  std::string train_path;
  std::string valid_path;
  std::string graph_u_path;
  std::string graph_v_path;
  std::string train_out;
  train->add_option("--model", model, "pmf | grals | gpmf")
      ->check(CLI::IsMember({"pmf", "grals", "gpmf"}));
  train->add_option("--train", train_path, "training triplets")->required();
  train->add_option("--valid", valid_path, "held-out triplets");
  train->add_option("--graph-u", graph_u_path, "row graph edge list");
  train->add_option("--graph-v", graph_v_path, "column graph edge list");
  train->add_option("-o,--out", train_out, "output directory")->required();
  train->add_option("--index-base", index_base, "index of the first row/column in input files");
  train->add_flag("--text", text, "write factors as text");

  // prune
  auto* prune = app.add_subcommand("prune", "remove contested edges given fixed factors");
  add_common(prune, common);
  std::string prune_u;
  std::string prune_v;
  std::string prune_obs;
  std::string prune_graph;
  std::string prune_side = "u";
  std::string prune_edges_out;
  std::string prune_report;
  prune->add_option("--u", prune_u, "row factor file")->required();
  prune->add_option("--v", prune_v, "column factor file")->required();
  prune->add_option("--obs", prune_obs, "training triplets")->required();
  prune->add_option("--graph", prune_graph, "edge list to update")->required();
  prune->add_option("--side", prune_side, "u (rows) or v (columns)")
      ->check(CLI::IsMember({"u", "v"}));
  prune->add_option("--edges-out", prune_edges_out, "updated edge list")->required();
  prune->add_option("--report", prune_report, "per-edge report CSV")->required();
  prune->add_option("--index-base", index_base, "index of the first row/column in input files");

  // eval
  auto* eval = app.add_subcommand("eval", "RMSE of saved factors on a triplet file");
  std::string eval_u;
  std::string eval_v;
  std::string eval_obs;
  eval->add_option("--u", eval_u, "row factor file")->required();
  eval->add_option("--v", eval_v, "column factor file")->required();
  eval->add_option("--obs", eval_obs, "triplets")->required();
  eval->add_option("--index-base", index_base, "index of the first row/column in input files");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "synthetic parameter sweep");
  add_common(sweep, common);
  std::string axis = "fidelity";
  std::vector<double> values;
  std::size_t repeats = 5;
  std::size_t threads = 0;
  std::string models;
  std::string sweep_out;
  std::string sweep_summary;
  sweep->add_option("--axis", axis, "fidelity | sigma2_obs | frac_observed | d");
  sweep->add_option("--values", values, "axis values")->delimiter(',');
  sweep->add_option("--repeats", repeats, "seeds per value")->check(CLI::PositiveNumber);
  sweep->add_option("--threads", threads, "worker threads, 0 = all");
  sweep->add_option("--models", models, "comma-separated model list");
  sweep->add_option("-o,--out", sweep_out, "per-run CSV")->required();
  sweep->add_option("--summary", sweep_summary, "mean/std CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  try {
    require_inputs({&common.config_path, &train_path, &valid_path, &graph_u_path, &graph_v_path,
                    &prune_u, &prune_v, &prune_obs, &prune_graph, &eval_u, &eval_v, &eval_obs});
    if (synth->parsed()) {
      ConfigPtr cfg = build_config(common);
      check(graem_synth(cfg.get(), synth_out.c_str()));
    } else if (train->parsed()) {
      ConfigPtr cfg = build_config(common);
      const double gamma = config_real(cfg.get(), "gamma");
      ObsPtr obs = read_obs(train_path, index_base);
      ObsPtr heldout = valid_path.empty() ? nullptr : read_obs(valid_path, index_base);
      std::size_t rows = 0;
      std::size_t cols = 0;
      check(graem_obs_shape(obs.get(), &rows, &cols, nullptr));
      GraphPtr gu = read_graph(graph_u_path, rows, gamma, index_base);
      GraphPtr gv = read_graph(graph_v_path, cols, gamma, index_base);
      const graem_model m = model == "pmf"     ? GRAEM_MODEL_PMF
                            : model == "grals" ? GRAEM_MODEL_GRALS
                                               : GRAEM_MODEL_GPMF;
      graem_result* raw = nullptr;
      check(graem_train(cfg.get(), m, obs.get(), gu.get(), gv.get(), heldout.get(), &raw));
      ResultPtr result(raw);
      std::filesystem::create_directories(train_out);
      graem_factors* fraw = nullptr;
      check(graem_result_factors(result.get(), &fraw));
      FactorsPtr factors(fraw);
      check(graem_factors_write(factors.get(), in_dir(train_out, "u.fac").c_str(),
                                in_dir(train_out, "v.fac").c_str(), text ? 1 : 0));
      check(graem_result_write_summary(result.get(), cfg.get(),
                                       in_dir(train_out, "summary.txt").c_str()));
      const std::pair<graem_side, const char*> sides[] = {{GRAEM_SIDE_U, "u"}, {GRAEM_SIDE_V, "v"}};
      for (const auto& [side, name] : sides) {
        graem_graph* graw = nullptr;
        if (graem_result_graph(result.get(), side, &graw) != GRAEM_OK) continue;
        GraphPtr g(graw);
        const std::string stem = std::string("graph_") + name;
        check(graem_graph_write(g.get(), in_dir(train_out, (stem + ".txt").c_str()).c_str()));
        if (m == GRAEM_MODEL_GPMF) {
          check(graem_result_write_report(
              result.get(), side, in_dir(train_out, (stem + "_report.csv").c_str()).c_str()));
        }
      }
    } else if (prune->parsed()) {
      ConfigPtr cfg = build_config(common);
      FactorsPtr factors = read_factors(prune_u, prune_v);
      ObsPtr obs = read_obs(prune_obs, index_base);
      std::size_t n = 0;
      std::size_t m = 0;
      check(graem_factors_shape(factors.get(), &n, &m, nullptr));
      const graem_side side = prune_side == "u" ? GRAEM_SIDE_U : GRAEM_SIDE_V;
      GraphPtr graph = read_graph(prune_graph, side == GRAEM_SIDE_U ? n : m,
                                  config_real(cfg.get(), "gamma"), index_base);
      graem_result* raw = nullptr;
      check(graem_prune(cfg.get(), factors.get(), obs.get(), side, graph.get(), &raw));
      ResultPtr result(raw);
      graem_graph* graw = nullptr;
      check(graem_result_graph(result.get(), side, &graw));
      GraphPtr updated(graw);
      check(graem_graph_write(updated.get(), prune_edges_out.c_str()));
      check(graem_result_write_report(result.get(), side, prune_report.c_str()));
    } else if (eval->parsed()) {
      FactorsPtr factors = read_factors(eval_u, eval_v);
      ObsPtr obs = read_obs(eval_obs, index_base);
      double rmse = 0.0;
      check(graem_rmse(factors.get(), obs.get(), &rmse));
      std::printf("rmse=%.6f\n", rmse);
    } else if (sweep->parsed()) {
      ConfigPtr cfg = build_config(common);
      if (values.empty()) {
        if (axis == "fidelity") {
          values = {0.0, 0.3, 0.5, 0.7, 1.0};
        } else {
          throw Failure{"--values is required for axis '" + axis + "'"};
        }
      }
      check(graem_sweep(cfg.get(), axis.c_str(), values.data(), values.size(), repeats,
                        models.empty() ? nullptr : models.c_str(), threads, sweep_out.c_str(),
                        sweep_summary.empty() ? nullptr : sweep_summary.c_str()));
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
