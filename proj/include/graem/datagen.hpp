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
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graem/driver.hpp"
#include "graem/factor.hpp"
#include "graem/sparse.hpp"

namespace graem {

struct SynthConfig {
  std::size_t n = 400;
  std::size_t m = 400;
  std::size_t d = 40;
  double fidelity = 0.7;
  double sigma2_obs = 0.01;
  double frac_observed = 0.07;
  std::size_t block_size = 10;
  double gamma = 0.1;
  /// Variance of the i.i.d. perturbation added to sampled latent features.
  double within_block_noise = 1e-4;
  double dirichlet_conc = 1.0;
  /// Fraction of sampled entries assigned to training.
  double split_ratio = 0.8;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthDataset {
  ObservationSet obs_train;
  ObservationSet obs_valid;
  GraphSI graph_u_true;
  GraphSI graph_v_true;
  GraphSI graph_u;  // corrupted
  GraphSI graph_v;  // corrupted
  std::vector<Edge> corrupted_u;
  std::vector<Edge> corrupted_v;
  FactorMatrix u_true;
  FactorMatrix v_true;
};

/// Union of cliques on consecutive runs of `block_size` nodes; the last block
/// is smaller when block_size does not divide n.
GraphSI make_block_graph(std::size_t n, std::size_t block_size, double gamma);

struct CorruptedGraph {
  GraphSI graph;
  std::vector<Edge> corrupted;  // sorted
};

/// Replaces round((1 - fidelity) * E) uniformly chosen true edges with the
/// same number of uniformly chosen non-edges.
CorruptedGraph corrupt_graph(const GraphSI& truth, double fidelity, std::mt19937_64& rng);

/// Columns drawn from N(0, (L+)^{-1}) by precision sampling, plus an i.i.d.
/// N(0, within_block_noise) perturbation.
FactorMatrix sample_factors(const GraphSI& graph, std::size_t d, double within_block_noise,
                            std::mt19937_64& rng);

/// Non-uniform sampling of round(frac_observed * n * m) distinct cells with
/// weights p_i q_j, p ~ Dir(conc), q ~ Dir(conc), followed by a random
/// train/validation split.
std::pair<ObservationSet, ObservationSet> sample_observations(
    const FactorMatrix& u, const FactorMatrix& v, double sigma2_obs, double frac_observed,
    double dirichlet_conc, double split_ratio, std::mt19937_64& rng);

SynthDataset make_synth_dataset(const SynthConfig& cfg);

enum class SweepAxis { kFidelity, kSigma2Obs, kFracObserved, kD };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

enum class SweepModel { kPmf, kGrals, kGralsTrueGraph, kGpmf };
std::string_view to_string(SweepModel model);

struct SweepOptions {
  std::size_t repeats = 5;
  std::vector<SweepModel> models{SweepModel::kPmf, SweepModel::kGrals,
                                 SweepModel::kGralsTrueGraph, SweepModel::kGpmf};
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
  /// Train with sigma2 equal to the cell's observation noise.
  bool tie_sigma2 = false;
};

struct SweepRow {
  double axis_value;
  std::string model;
  std::size_t repeat;
  double rmse;
  double ce_removed_frac;
  double te_removed_frac;
  double seconds;
};

struct SweepCell {
  double axis_value;
  std::string model;
  double mean_rmse;
  double std_rmse;
  std::size_t count;
};

/// SynthConfig for one sweep cell: `base` with the axis overridden and a seed
/// derived from (base seed, axis value, repeat).
SynthConfig sweep_cell_config(const SynthConfig& base, SweepAxis axis, double value,
                              std::size_t repeat);

/// Rows ordered by (axis value, repeat, model) as listed in the inputs; the
/// order and every column except `seconds` are independent of thread count.
std::vector<SweepRow> run_sweep(SweepAxis axis, const std::vector<double>& values,
                                const SynthConfig& base, const GraemConfig& train,
                                const SweepOptions& options);

/// Mean and sample standard deviation of RMSE per (axis value, model).
std::vector<SweepCell> summarize_sweep(const std::vector<SweepRow>& rows);

}  // namespace graem
