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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graem/datagen.hpp"
#include "graem/driver.hpp"
#include "graem/edge_prune.hpp"
#include "graem/factor.hpp"
#include "graem/sparse.hpp"

namespace graem::io {

// Triplet files: one `row col value` per line, whitespace or comma separated.
// Blank lines and `#` comments are skipped; `# dims N M` declares the shape,
// otherwise it is inferred as max index + 1.
ObservationSet read_triplets(std::istream& in, std::size_t index_base = 0);
ObservationSet read_triplets(const std::filesystem::path& path, std::size_t index_base = 0);
void write_triplets(std::ostream& out, const ObservationSet& obs);
void write_triplets(const std::filesystem::path& path, const ObservationSet& obs);

// Edge lists: one `i j` per line, optional third column must equal 1.
// `# nodes N` declares the node count. n_nodes = 0 means "from the header,
// else max index + 1".
GraphSI read_edge_list(std::istream& in, std::size_t n_nodes, double gamma,
                       std::size_t index_base = 0);
GraphSI read_edge_list(const std::filesystem::path& path, std::size_t n_nodes, double gamma,
                       std::size_t index_base = 0);
/// Canonical form: `# nodes N` then sorted `i j` lines with i < j.
void write_edge_list(std::ostream& out, const SparseMatrix& adjacency);
void write_edge_list(const std::filesystem::path& path, const SparseMatrix& adjacency);

// Factor files. Binary layout: 8-byte magic "GRAEMFAC", u32 version (1),
// u8 endianness tag (1 = little), 3 zero bytes, u64 n, u64 d, then n*d
// little-endian IEEE-754 doubles in row-major order. The text layout is a
// `# factor N D` header followed by one row per line.
void write_factor(const std::filesystem::path& path, const FactorMatrix& f, bool text = false);
FactorMatrix read_factor(const std::filesystem::path& path);
void write_factor_binary(std::ostream& out, const FactorMatrix& f);
FactorMatrix read_factor_binary(std::istream& in);
void write_factor_text(std::ostream& out, const FactorMatrix& f);
FactorMatrix read_factor_text(std::istream& in);

// Flat `key = value` configuration.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Applies one setting to whichever config owns the key. Unknown keys and
/// unparsable values raise ConfigError.
void apply_setting(std::string_view key, std::string_view value, GraemConfig& train,
                   SynthConfig& synth);
/// Every recognised key with its current value.
KeyValues effective_config(const GraemConfig& train, const SynthConfig& synth);

void write_report_csv(const std::filesystem::path& path, const EdgeUpdateReport& report);
/// Columns axis_value,model,repeat,rmse,ce_removed_frac,te_removed_frac,seconds.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Columns axis_value,model,mean_rmse,std_rmse,count.
void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepCell>& cells);

std::string format_double(double x);

}  // namespace graem::io
