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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "graem/errors.hpp"
#include "graem/io.hpp"
#include "oracles.hpp"

using namespace graem;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("graem_test_io_" + name);
}

}  // namespace

TEST_CASE("triplets parse with comments, commas and a dims header") {
  std::istringstream in("# dims 3 4\n0 1 2.5\n\n# note\n2,3,-1\n");
  const ObservationSet obs = io::read_triplets(in);
  CHECK(obs.n_rows() == 3);
  CHECK(obs.n_cols() == 4);
  CHECK(obs.size() == 2);
  CHECK(obs.row_view().at(2, 3) == -1.0);
}

TEST_CASE("triplet shape is inferred and one-based indices shift") {
  std::istringstream in("1 1 5\n2 3 1\n");
  const ObservationSet obs = io::read_triplets(in, 1);
  CHECK(obs.n_rows() == 2);
  CHECK(obs.n_cols() == 3);
  CHECK(obs.row_view().at(0, 0) == 5.0);
  std::istringstream zero("0 1 5\n");
  CHECK_THROWS_AS(io::read_triplets(zero, 1), ParseError);
}

TEST_CASE("triplet errors carry line numbers") {
  std::istringstream bad("0 0 1\n0 x 2\n");
  try {
    io::read_triplets(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream dup("0 0 1\n0 0 2\n");
  try {
    io::read_triplets(dup);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream short_line("0 0\n");
  CHECK_THROWS_AS(io::read_triplets(short_line), ParseError);
  std::istringstream outside("# dims 2 2\n2 0 1\n");
  CHECK_THROWS_AS(io::read_triplets(outside), ParseError);
}

TEST_CASE("triplets round-trip exactly") {
  std::mt19937_64 rng(1);
  const ObservationSet obs = oracle::observations(7, 5, oracle::random_ratings(7, 5, 0.5, rng));
  std::ostringstream out;
  io::write_triplets(out, obs);
  std::istringstream in(out.str());
  const ObservationSet back = io::read_triplets(in);
  CHECK(back.row_view() == obs.row_view());
}

TEST_CASE("edge lists round-trip byte for byte") {
  std::istringstream in("# nodes 5\n3 1\n0 4\n1 3\n0 1 1\n");
  const GraphSI g = io::read_edge_list(in, 0, 0.5);
  CHECK(g.n_nodes() == 5);
  CHECK(g.num_edges() == 3);
  std::ostringstream first;
  io::write_edge_list(first, g.adjacency());
  CHECK(first.str() == "# nodes 5\n0 1\n0 4\n1 3\n");
  std::istringstream again(first.str());
  std::ostringstream second;
  io::write_edge_list(second, io::read_edge_list(again, 0, 0.5).adjacency());
  CHECK(second.str() == first.str());
}

TEST_CASE("edge list rejects weights and self-loops") {
  std::istringstream weighted("0 1 2.0\n");
  try {
    io::read_edge_list(weighted, 0, 1.0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("weighted edges are not supported") != std::string::npos);
  }
  std::istringstream loop("1 1\n");
  CHECK_THROWS(io::read_edge_list(loop, 0, 1.0));
  std::istringstream big("0 7\n");
  CHECK_THROWS(io::read_edge_list(big, 4, 1.0));
}

TEST_CASE("binary factor round-trip is exact") {
  std::mt19937_64 rng(2);
  const FactorMatrix f = FactorMatrix::random_normal(9, 4, 1.0, rng);
  std::stringstream buf;
  io::write_factor_binary(buf, f);
  const std::string bytes = buf.str();
  CHECK(bytes.size() == 32 + 9 * 4 * 8);
  CHECK(bytes.substr(0, 8) == "GRAEMFAC");
  CHECK(io::read_factor_binary(buf) == f);
}

TEST_CASE("text factor round-trip is exact") {
  std::mt19937_64 rng(3);
  const FactorMatrix f = FactorMatrix::random_normal(4, 3, 1.0, rng);
  std::stringstream buf;
  io::write_factor_text(buf, f);
  CHECK(io::read_factor_text(buf) == f);
}

TEST_CASE("read_factor detects the format from the file") {
  std::mt19937_64 rng(4);
  const FactorMatrix f = FactorMatrix::random_normal(3, 2, 1.0, rng);
  const auto bin = temp_path("f.bin");
  const auto txt = temp_path("f.txt");
  io::write_factor(bin, f, false);
  io::write_factor(txt, f, true);
  CHECK(io::read_factor(bin) == f);
  CHECK(io::read_factor(txt) == f);
  std::filesystem::remove(bin);
  std::filesystem::remove(txt);
  CHECK_THROWS_AS(io::read_factor(temp_path("missing")), IoError);
}

TEST_CASE("corrupt binary factors are rejected") {
  std::stringstream bad_magic("NOTAFACTxxxxxxxxxxxxxxxxxxxxxxxxxxxx");
  CHECK_THROWS(io::read_factor_binary(bad_magic));
  const FactorMatrix f(2, 2, 1.0);
  std::stringstream buf;
  io::write_factor_binary(buf, f);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 8);
  std::stringstream truncated(bytes);
  CHECK_THROWS(io::read_factor_binary(truncated));
}

TEST_CASE("config files set training and synthetic values") {
  std::istringstream in("# comment\nd = 7\ntau=0.25\nfidelity = 0.3\nweight_graph = 4\n\nreadmit = true\n");
  GraemConfig train;
  SynthConfig synth;
  for (const auto& [k, v] : io::read_key_values(in)) io::apply_setting(k, v, train, synth);
  CHECK(train.d == 7);
  CHECK(train.tau == 0.25);
  CHECK(synth.fidelity == 0.3);
  CHECK(train.u.graph == 4.0);
  CHECK(train.v.graph == 4.0);
  CHECK(train.readmit);
  CHECK(synth.d == 40);
  io::apply_setting("seed", "9", train, synth);
  CHECK(train.seed == 9);
  CHECK(synth.seed == 9);
}

TEST_CASE("config errors") {
  GraemConfig train;
  SynthConfig synth;
  CHECK_THROWS_AS(io::apply_setting("no_such_key", "1", train, synth), ConfigError);
  CHECK_THROWS_AS(io::apply_setting("d", "seven", train, synth), ConfigError);
  std::istringstream missing("d 7\n");
  CHECK_THROWS(io::read_key_values(missing));
}

TEST_CASE("effective config round-trips through apply_setting") {
  GraemConfig train;
  train.tau = 0.125;
  train.k_samples = 33;
  SynthConfig synth;
  synth.frac_observed = 0.2;
  const auto kv = io::effective_config(train, synth);
  GraemConfig t2;
  SynthConfig s2;
  for (const auto& [k, v] : kv) io::apply_setting(k, v, t2, s2);
  CHECK(io::effective_config(t2, s2) == kv);
}

TEST_CASE("sweep CSV layout") {
  std::ostringstream out;
  io::write_sweep_csv(out, {{0.5, "gpmf", 1, 0.75, 0.25, 0.125, 2.0}});
  CHECK(out.str() ==
        "axis_value,model,repeat,rmse,ce_removed_frac,te_removed_frac,seconds\n"
        "0.5,gpmf,1,0.75,0.25,0.125,2\n");
  std::ostringstream sum;
  io::write_sweep_summary_csv(sum, {{0.5, "pmf", 1.5, 0.25, 5}});
  CHECK(sum.str() == "axis_value,model,mean_rmse,std_rmse,count\n0.5,pmf,1.5,0.25,5\n");
}
