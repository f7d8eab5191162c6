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

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>

#include "graem/errors.hpp"
#include "graem/sparse.hpp"
#include "oracles.hpp"

using namespace graem;

TEST_CASE("build_adjacency collapses reversed and repeated edges") {
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {1, 2}};
  const SparseMatrix a = build_adjacency(edges, 3);
  CHECK(a.nnz() == 4);
  CHECK(a.at(0, 1) == 1.0);
  CHECK(a.at(1, 0) == 1.0);
  CHECK(a.at(1, 2) == 1.0);
  CHECK(a.at(2, 1) == 1.0);
  CHECK(a.at(0, 2) == 0.0);
  CHECK(a.is_symmetric());
}

TEST_CASE("build_adjacency on no edges is all zero") {
  const SparseMatrix a = build_adjacency({}, 4);
  CHECK(a.n_rows() == 4);
  CHECK(a.n_cols() == 4);
  CHECK(a.nnz() == 0);
}

TEST_CASE("build_adjacency rejects bad indices") {
  const std::vector<Edge> out_of_range{{0, 3}};
  CHECK_THROWS_AS(build_adjacency(out_of_range, 3), InputError);
  const std::vector<Edge> loop{{1, 1}};
  CHECK_THROWS_AS(build_adjacency(loop, 3), InputError);
}

TEST_CASE("build_adjacency ignores edge order and duplication") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto edges = oracle::random_edges(15, 0.3, rng);
    const SparseMatrix a = build_adjacency(edges, 15);
    auto shuffled = edges;
    for (const Edge& e : edges) shuffled.push_back({e.j, e.i});
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(build_adjacency(shuffled, 15) == a);
  }
}

TEST_CASE("regularized Laplacian of a path") {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const SparseMatrix l = build_regularized_laplacian(build_adjacency(path, 3), 0.1);
  CHECK(l.at(0, 0) == doctest::Approx(1.1));
  CHECK(l.at(1, 1) == doctest::Approx(2.1));
  CHECK(l.at(2, 2) == doctest::Approx(1.1));
  CHECK(l.at(0, 1) == -1.0);
  CHECK(l.at(1, 2) == -1.0);
  CHECK(l.at(0, 2) == 0.0);
  CHECK_THROWS_AS(build_regularized_laplacian(build_adjacency(path, 3), 0.0), InputError);
  CHECK_THROWS_AS(build_regularized_laplacian(build_adjacency(path, 3), -1.0), InputError);
}

TEST_CASE("regularized Laplacian of an empty graph is a scaled identity") {
  const SparseMatrix l = build_regularized_laplacian(build_adjacency({}, 3), 0.5);
  CHECK(oracle::dense(l).isApprox(0.5 * Eigen::MatrixXd::Identity(3, 3)));
  CHECK(l.nnz() == 3);
}

TEST_CASE("regularized Laplacian matches the dense construction and is positive definite") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto edges = oracle::random_edges(8, 0.4, rng);
    const GraphSI g = GraphSI::from_edges(8, edges, 0.2);
    const Eigen::MatrixXd want = oracle::regularized_laplacian(oracle::adjacency(8, edges), 0.2);
    CHECK((oracle::dense(g.laplacian_reg()) - want).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(want);
    CHECK(es.eigenvalues().minCoeff() >= 0.2 - 1e-12);
  }
}

TEST_CASE("property: regularized Laplacian row sums equal gamma") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> gamma_dist(0.01, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 40;
    const double gamma = gamma_dist(rng);
    const GraphSI g = GraphSI::from_edges(n, oracle::random_edges(n, 0.2, rng), gamma);
    const std::vector<double> ones(n, 1.0);
    for (double y : spmv(g.laplacian_reg(), ones)) CHECK(std::abs(y - gamma) < 1e-10);
  }
}

TEST_CASE("property: x^T L+ x >= gamma |x|^2") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 49;
    const double gamma = 0.05 + 0.01 * (trial % 30);
    const GraphSI g = GraphSI::from_edges(n, oracle::random_edges(n, 0.15, rng), gamma);
    std::vector<double> x(n);
    for (double& v : x) v = normal(rng);
    const auto lx = spmv(g.laplacian_reg(), x);
    const double quad = dot(x, lx);
    REQUIRE(quad >= gamma * dot(x, x) * (1.0 - 1e-12));
  }
}

TEST_CASE("spmv examples") {
  const std::vector<double> x{1, 2, 3};
  CHECK(spmv(SparseMatrix::identity(3), x) == x);
  CHECK(spmv(SparseMatrix(3, 3), x) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(spmv(SparseMatrix::identity(2), x), InputError);
}

TEST_CASE("spmv matches a dense multiply") {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        if (coin(rng)) t.push_back({r, c, normal(rng)});
      }
    }
    const SparseMatrix m = SparseMatrix::from_triplets(6, 4, t);
    Eigen::VectorXd x(4);
    for (int k = 0; k < 4; ++k) x(k) = normal(rng);
    const Eigen::VectorXd want = oracle::dense(m) * x;
    const auto got = spmv(m, std::vector<double>(x.data(), x.data() + 4));
    for (int r = 0; r < 6; ++r) CHECK(std::abs(got[r] - want(r)) < 1e-12);
  }
}

TEST_CASE("CSR invariants are enforced") {
  CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), InputError);
  CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1, 2}, {0, 2}, {1.0, 2.0}), InputError);
  const SparseMatrix m(2, 2, {0, 2, 3}, {0, 1, 1}, {1.0, 0.0, 3.0});
  CHECK(m.nnz() == 2);
  CHECK(m.at(0, 1) == 0.0);
}

TEST_CASE("GraphSI validates its adjacency") {
  const SparseMatrix asym = SparseMatrix::from_triplets(2, 2, std::vector<Triplet>{{0, 1, 1.0}});
  CHECK_THROWS_AS(GraphSI(asym, 1.0), InputError);
  const SparseMatrix weighted = SparseMatrix::from_triplets(
      2, 2, std::vector<Triplet>{{0, 1, 2.0}, {1, 0, 2.0}});
  CHECK_THROWS_AS(GraphSI(weighted, 1.0), InputError);
  const SparseMatrix loop = SparseMatrix::from_triplets(2, 2, std::vector<Triplet>{{0, 0, 1.0}});
  CHECK_THROWS_AS(GraphSI(loop, 1.0), InputError);
  const GraphSI g = GraphSI::from_edges(3, std::vector<Edge>{{2, 0}}, 1.0);
  CHECK(g.num_edges() == 1);
  CHECK(g.edges() == std::vector<Edge>{{0, 2}});
  CHECK(g.has_edge(2, 0));
}

TEST_CASE("ObservationSet views are transposes and duplicates are rejected") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = oracle::random_ratings(9, 7, 0.3, rng);
    const ObservationSet obs = oracle::observations(9, 7, r);
    CHECK(obs.row_view().transpose() == obs.col_view());
    CHECK(obs.col_view().transpose() == obs.row_view());
    CHECK(obs.row_view().nnz() == r.size());
  }
  CHECK_THROWS_AS(ObservationSet(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), DataError);
  CHECK_THROWS_AS(ObservationSet(2, 2, {{2, 0, 1.0}}), InputError);
}

TEST_CASE("zero ratings stay observed") {
  const ObservationSet obs(2, 2, {{0, 0, 0.0}, {1, 1, 3.0}});
  CHECK(obs.row_view().nnz() == 2);
  CHECK(obs.col_view().nnz() == 2);
  CHECK(obs.row_view().row_cols(0).size() == 1);
}

TEST_CASE("non-finite ratings are rejected") {
  CHECK_THROWS_AS(ObservationSet(1, 1, {{0, 0, std::nan("")}}), DataError);
}
