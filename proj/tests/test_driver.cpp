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

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "graem/driver.hpp"
#include "graem/errors.hpp"
#include "oracles.hpp"

using namespace graem;

namespace {

struct Problem {
  ObservationSet train;
  ObservationSet held;
  GraphSI gu;
  GraphSI gv;
};

Problem make_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd u = oracle::random_matrix(30, 3, rng);
  const Eigen::MatrixXd v = oracle::random_matrix(25, 3, rng);
  std::bernoulli_distribution coin(0.3);
  std::bernoulli_distribution split(0.8);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<Triplet> train;
  std::vector<Triplet> held;
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 25; ++j) {
      if (!coin(rng)) continue;
      (split(rng) ? train : held).push_back({i, j, u.row(i).dot(v.row(j)) + noise(rng)});
    }
  }
  return {ObservationSet(30, 25, train), ObservationSet(30, 25, held),
          GraphSI::from_edges(30, oracle::random_edges(30, 0.15, rng), 1.0),
          GraphSI::from_edges(25, oracle::random_edges(25, 0.15, rng), 1.0)};
}

GraemConfig small_config() {
  GraemConfig cfg;
  cfg.d = 3;
  cfg.k_samples = 20;
  cfg.outer_sweeps = 10;
  return cfg;
}

}  // namespace

TEST_CASE("GPMF without graphs reduces to PMF") {
  const Problem p = make_problem(1);
  const GraemConfig cfg = small_config();
  const GraemResult g = run_graem(p.train, nullptr, nullptr, cfg, &p.held);
  const GraemResult b = run_baseline(p.train, nullptr, nullptr, cfg, &p.held, BaselineMode::kPmf);
  CHECK(g.u == b.u);
  CHECK(g.v == b.v);
  CHECK_FALSE(g.graph_u.has_value());
}

TEST_CASE("runs are deterministic for a fixed seed") {
  const Problem p = make_problem(2);
  const GraemConfig cfg = small_config();
  const GraemResult a = run_graem(p.train, &p.gu, &p.gv, cfg, &p.held);
  const GraemResult b = run_graem(p.train, &p.gu, &p.gv, cfg, &p.held);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
  CHECK(a.graph_u->adjacency() == b.graph_u->adjacency());
  CHECK(a.rmse_trace == b.rmse_trace);
}

TEST_CASE("learned graphs only lose edges across rounds") {
  const Problem p = make_problem(3);
  GraemConfig cfg = small_config();
  cfg.tau = 0.05;
  for (std::size_t rounds = 1; rounds <= 3; ++rounds) {
    cfg.em_max_rounds = rounds;
    const GraemResult r = run_graem(p.train, &p.gu, &p.gv, cfg, &p.held);
    REQUIRE(r.graph_u.has_value());
    for (const Edge& e : r.graph_u->edges()) CHECK(p.gu.has_edge(e.i, e.j));
    for (const Edge& e : r.graph_v->edges()) CHECK(p.gv.has_edge(e.i, e.j));
    CHECK(r.rmse_trace.size() == r.rounds + 1);
    CHECK(r.rmse_is_heldout);
  }
  cfg.em_max_rounds = 3;
  const GraemResult three = run_graem(p.train, &p.gu, nullptr, cfg, &p.held);
  cfg.em_max_rounds = 1;
  const GraemResult one = run_graem(p.train, &p.gu, nullptr, cfg, &p.held);
  for (const Edge& e : three.graph_u->edges()) CHECK(one.graph_u->has_edge(e.i, e.j));
}

TEST_CASE("report counts partition the input graph") {
  const Problem p = make_problem(4);
  const GraemResult r = run_graem(p.train, &p.gu, &p.gv, small_config(), nullptr);
  CHECK(r.report_u->kept + r.report_u->removed_contested == p.gu.num_edges());
  CHECK(r.report_v->kept + r.report_v->removed_contested == p.gv.num_edges());
  CHECK(r.graph_u->num_edges() == r.report_u->kept);
  CHECK_FALSE(r.rmse_is_heldout);
  CHECK(r.rmse_trace.size() == 2);
}

TEST_CASE("configuration errors") {
  const Problem p = make_problem(5);
  GraemConfig cfg = small_config();
  cfg.em_tol = 1e-3;
  CHECK_THROWS_AS(run_graem(p.train, &p.gu, nullptr, cfg, nullptr), ConfigError);
  CHECK_THROWS_AS(
      run_baseline(p.train, nullptr, nullptr, small_config(), nullptr, BaselineMode::kGrals),
      ConfigError);
  cfg = small_config();
  cfg.d = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.sigma2 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const GraphSI wrong = GraphSI::from_edges(7, std::vector<Edge>{{0, 1}}, 1.0);
  CHECK_THROWS_AS(run_graem(p.train, &wrong, nullptr, small_config(), nullptr), InputError);
}

TEST_CASE("phase timings add up to the total") {
  const Problem p = make_problem(6);
  const GraemResult r = run_graem(p.train, &p.gu, &p.gv, small_config(), &p.held);
  const PhaseTimings& t = r.timings;
  const double parts = t.init + t.m_step + t.e_step + t.evaluation;
  CHECK(parts <= t.total * 1.05);
  CHECK(parts >= t.total * 0.95);
}

TEST_CASE("summary lists the configuration and outcome") {
  const Problem p = make_problem(7);
  const GraemResult r = run_graem(p.train, &p.gu, &p.gv, small_config(), &p.held);
  const auto summary = run_summary(small_config(), r);
  auto has = [&](const std::string& key) {
    for (const auto& kv : summary) {
      if (kv.first == key) return true;
    }
    return false;
  };
  for (const char* key : {"model", "config.d", "config.sigma2", "config.tau", "config.k_samples",
                          "config.seed", "rounds"}) {
    CHECK(has(key));
  }
}

TEST_CASE("GRALS with a graph differs from PMF") {
  const Problem p = make_problem(8);
  const GraemConfig cfg = small_config();
  const GraemResult pmf = run_baseline(p.train, nullptr, nullptr, cfg, &p.held, BaselineMode::kPmf);
  const GraemResult grals =
      run_baseline(p.train, &p.gu, &p.gv, cfg, &p.held, BaselineMode::kGrals);
  CHECK_FALSE(pmf.u == grals.u);
  CHECK(std::isfinite(grals.rmse_trace.back()));
}
