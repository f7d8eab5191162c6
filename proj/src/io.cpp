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

#include "graem/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "graem/errors.hpp"

namespace graem::io {

namespace {

constexpr char kFactorMagic[8] = {'G', 'R', 'A', 'E', 'M', 'F', 'A', 'C'};
constexpr std::uint32_t kFactorVersion = 1;
constexpr std::uint8_t kLittleEndianTag = 1;

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',' ||
                                 line[pos] == '\r')) {
      ++pos;
    }
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',' &&
           line[end] != '\r') {
      ++end;
    }
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_real(std::string_view s, double& out) {
  // std::from_chars for double is available in libstdc++ 11.
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::size_t index_field(std::string_view s, std::size_t base, std::size_t line) {
  std::size_t v = 0;
  if (!parse_size(s, v)) throw ParseError("bad index '" + std::string(s) + "'", line);
  if (v < base) throw ParseError("index " + std::string(s) + " below index base", line);
  return v - base;
}

// `# <keyword> a b ...` header; returns the numeric arguments or empty.
std::vector<std::size_t> header_args(std::string_view line, std::string_view keyword,
                                     std::size_t expected, std::size_t line_no) {
  std::string_view rest = trim(line.substr(1));
  if (rest.substr(0, keyword.size()) != keyword) return {};
  if (rest.size() > keyword.size() && rest[keyword.size()] != ' ' && rest[keyword.size()] != '\t') {
    return {};
  }
  const auto fields = split_fields(rest.substr(keyword.size()));
  if (fields.size() != expected) {
    throw ParseError("'# " + std::string(keyword) + "' expects " + std::to_string(expected) +
                         " values",
                     line_no);
  }
  std::vector<std::size_t> args;
  for (auto f : fields) {
    std::size_t v = 0;
    if (!parse_size(f, v)) throw ParseError("bad header value '" + std::string(f) + "'", line_no);
    args.push_back(v);
  }
  return args;
}

bool parse_bool(std::string_view v, bool& out) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "0" || v == "false" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ObservationSet read_triplets(std::istream& in, std::size_t index_base) {
  std::vector<Triplet> entries;
  std::vector<std::size_t> lines;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool declared = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto dims = header_args(t, "dims", 2, line_no);
      if (!dims.empty()) {
        rows = dims[0];
        cols = dims[1];
        declared = true;
      }
      continue;
    }
    const auto f = split_fields(t);
    if (f.size() != 3) throw ParseError("expected 'row col value'", line_no);
    Triplet tr{index_field(f[0], index_base, line_no), index_field(f[1], index_base, line_no), 0.0};
    if (!parse_real(f[2], tr.value)) {
      throw ParseError("bad value '" + std::string(f[2]) + "'", line_no);
    }
    if (declared && (tr.row >= rows || tr.col >= cols)) {
      throw ParseError("entry outside the declared dims", line_no);
    }
    entries.push_back(tr);
    lines.push_back(line_no);
  }
  if (!declared) {
    for (const Triplet& tr : entries) {
      rows = std::max(rows, tr.row + 1);
      cols = std::max(cols, tr.col + 1);
    }
  }
  // Report the line of the second occurrence of a duplicate pair.
  {
    std::vector<std::size_t> order(entries.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return entries[a].row != entries[b].row ? entries[a].row < entries[b].row
                                              : entries[a].col < entries[b].col;
    });
    std::size_t first_dup = entries.size();
    for (std::size_t k = 1; k < order.size(); ++k) {
      const Triplet& a = entries[order[k - 1]];
      const Triplet& b = entries[order[k]];
      if (a.row == b.row && a.col == b.col) first_dup = std::min(first_dup, order[k]);
    }
    if (first_dup < entries.size()) {
      const Triplet& d = entries[first_dup];
      throw DataError("line " + std::to_string(lines[first_dup]) + ": duplicate observation (" +
                      std::to_string(d.row) + ", " + std::to_string(d.col) + ")");
    }
  }
  return ObservationSet(rows, cols, std::move(entries));
}

ObservationSet read_triplets(const std::filesystem::path& path, std::size_t index_base) {
  std::ifstream in = open_in(path);
  return read_triplets(in, index_base);
}

void write_triplets(std::ostream& out, const ObservationSet& obs) {
  out << "# dims " << obs.n_rows() << ' ' << obs.n_cols() << '\n';
  for (const Triplet& t : obs.entries()) {
    out << t.row << ' ' << t.col << ' ' << format_double(t.value) << '\n';
  }
}

void write_triplets(const std::filesystem::path& path, const ObservationSet& obs) {
  std::ofstream out = open_out(path);
  write_triplets(out, obs);
}

GraphSI read_edge_list(std::istream& in, std::size_t n_nodes, double gamma,
                       std::size_t index_base) {
  std::vector<Edge> edges;
  std::size_t declared = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto args = header_args(t, "nodes", 1, line_no);
      if (!args.empty()) declared = args[0];
      continue;
    }
    const auto f = split_fields(t);
    if (f.size() != 2 && f.size() != 3) throw ParseError("expected 'i j'", line_no);
    if (f.size() == 3) {
      double w = 0.0;
      if (!parse_real(f[2], w)) throw ParseError("bad edge weight", line_no);
      if (w != 1.0) throw ParseError("weighted edges are not supported", line_no);
    }
    edges.push_back({index_field(f[0], index_base, line_no), index_field(f[1], index_base, line_no)});
  }
  std::size_t n = n_nodes ? n_nodes : declared;
  if (n == 0) {
    for (const Edge& e : edges) n = std::max({n, e.i + 1, e.j + 1});
  }
  return GraphSI::from_edges(n, edges, gamma);
}

GraphSI read_edge_list(const std::filesystem::path& path, std::size_t n_nodes, double gamma,
                       std::size_t index_base) {
  std::ifstream in = open_in(path);
  return read_edge_list(in, n_nodes, gamma, index_base);
}

void write_edge_list(std::ostream& out, const SparseMatrix& adjacency) {
  out << "# nodes " << adjacency.n_rows() << '\n';
  for (const Edge& e : adjacency_edges(adjacency)) out << e.i << ' ' << e.j << '\n';
}

void write_edge_list(const std::filesystem::path& path, const SparseMatrix& adjacency) {
  std::ofstream out = open_out(path);
  write_edge_list(out, adjacency);
}

void write_factor_binary(std::ostream& out, const FactorMatrix& f) {
  static_assert(std::endian::native == std::endian::little,
                "factor files are written in host order; big-endian hosts need byte swaps");
  out.write(kFactorMagic, sizeof kFactorMagic);
  const std::uint32_t version = kFactorVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const char tag[4] = {static_cast<char>(kLittleEndianTag), 0, 0, 0};
  out.write(tag, sizeof tag);
  const std::uint64_t n = f.rows();
  const std::uint64_t d = f.cols();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  const auto data = f.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw IoError("failed writing factor matrix");
}

FactorMatrix read_factor_binary(std::istream& in) {
  char magic[8];
  std::uint32_t version = 0;
  char tag[4];
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(tag, sizeof tag);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!in || std::memcmp(magic, kFactorMagic, sizeof magic) != 0) {
    throw IoError("not a factor file (bad magic)");
  }
  if (version != kFactorVersion) throw IoError("unsupported factor file version");
  if (static_cast<std::uint8_t>(tag[0]) != kLittleEndianTag) {
    throw IoError("unsupported factor file byte order");
  }
  if (d == 0 || (n != 0 && d > (std::uint64_t{1} << 40) / n)) {
    throw IoError("implausible factor dimensions");
  }
  std::vector<double> values(n * d);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError("factor file is truncated");
  FactorMatrix f(n, d, std::move(values));
  if (!f.all_finite()) throw DataError("factor file contains non-finite values");
  return f;
}

void write_factor_text(std::ostream& out, const FactorMatrix& f) {
  out << "# factor " << f.rows() << ' ' << f.cols() << '\n';
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t k = 0; k < f.cols(); ++k) {
      if (k) out << ' ';
      out << format_double(f(i, k));
    }
    out << '\n';
  }
}

FactorMatrix read_factor_text(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  bool have_header = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto args = header_args(t, "factor", 2, line_no);
      if (!args.empty()) {
        n = args[0];
        d = args[1];
        have_header = true;
      }
      continue;
    }
    if (!have_header) throw ParseError("missing '# factor N D' header", line_no);
    const auto f = split_fields(t);
    if (f.size() != d) throw ParseError("expected " + std::to_string(d) + " values", line_no);
    for (auto s : f) {
      double x = 0.0;
      if (!parse_real(s, x)) throw ParseError("bad value '" + std::string(s) + "'", line_no);
      values.push_back(x);
    }
  }
  if (!have_header) throw ParseError("missing '# factor N D' header", line_no);
  if (values.size() != n * d) throw ParseError("factor row count mismatch", line_no);
  return FactorMatrix(n, d, std::move(values));
}

void write_factor(const std::filesystem::path& path, const FactorMatrix& f, bool text) {
  std::ofstream out = open_out(path, !text);
  if (text) {
    write_factor_text(out, f);
  } else {
    write_factor_binary(out, f);
  }
}

FactorMatrix read_factor(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, true);
  char first[8] = {};
  in.read(first, sizeof first);
  const bool binary = in.gcount() == 8 && std::memcmp(first, kFactorMagic, 8) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_factor_binary(in) : read_factor_text(in);
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string_view key = trim(t.substr(0, eq));
    const std::string_view value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    kv.emplace_back(std::string(key), std::string(value));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

void apply_setting(std::string_view key, std::string_view value, GraemConfig& train,
                   SynthConfig& synth) {
  const std::string k(key);
  auto bad = [&] { return ConfigError("invalid value '" + std::string(value) + "' for " + k); };
  auto real = [&](double& dst) {
    if (!parse_real(value, dst)) throw bad();
  };
  auto count = [&](std::size_t& dst) {
    if (!parse_size(value, dst)) throw bad();
  };
  auto flag = [&](bool& dst) {
    if (!parse_bool(value, dst)) throw bad();
  };
  auto seed = [&](std::uint64_t& dst) {
    std::size_t v = 0;
    if (!parse_size(value, v)) throw bad();
    dst = v;
  };

  // Training.
  if (k == "d") return count(train.d);
  if (k == "sigma2") return real(train.sigma2);
  if (k == "gamma") return real(train.gamma);
  if (k == "tau") return real(train.tau);
  if (k == "k_samples") return count(train.k_samples);
  if (k == "cg_iters") return count(train.cg_max_iters);
  if (k == "cg_tol") return real(train.cg_rel_tol);
  if (k == "outer_sweeps") return count(train.outer_sweeps);
  if (k == "sweep_tol") return real(train.sweep_rel_tol);
  if (k == "precondition") return flag(train.precondition);
  if (k == "em_max_rounds") return count(train.em_max_rounds);
  if (k == "em_tol") return real(train.em_tol);
  if (k == "readmit") return flag(train.readmit);
  if (k == "seed") {
    seed(train.seed);
    synth.seed = train.seed;
    return;
  }
  if (k == "weight_graph_u") return real(train.u.graph);
  if (k == "weight_graph_v") return real(train.v.graph);
  if (k == "weight_l2_u") return real(train.u.l2);
  if (k == "weight_l2_v") return real(train.v.l2);
  if (k == "weight_graph") { real(train.u.graph); train.v.graph = train.u.graph; return; }
  if (k == "weight_l2") { real(train.u.l2); train.v.l2 = train.u.l2; return; }
  // Synthetic data.
  if (k == "synth_gamma") return real(synth.gamma);
  if (k == "synth_d") return count(synth.d);
  if (k == "n") return count(synth.n);
  if (k == "m") return count(synth.m);
  if (k == "fidelity") return real(synth.fidelity);
  if (k == "sigma2_obs") return real(synth.sigma2_obs);
  if (k == "frac_observed") return real(synth.frac_observed);
  if (k == "block_size") return count(synth.block_size);
  if (k == "within_block_noise") return real(synth.within_block_noise);
  if (k == "dirichlet_conc") return real(synth.dirichlet_conc);
  if (k == "split_ratio") return real(synth.split_ratio);
  throw ConfigError("unknown config key '" + k + "'");
}

KeyValues effective_config(const GraemConfig& t, const SynthConfig& s) {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
      {"d", std::to_string(t.d)},
      {"sigma2", format_double(t.sigma2)},
      {"gamma", format_double(t.gamma)},
      {"tau", format_double(t.tau)},
      {"k_samples", std::to_string(t.k_samples)},
      {"cg_iters", std::to_string(t.cg_max_iters)},
      {"cg_tol", format_double(t.cg_rel_tol)},
      {"outer_sweeps", std::to_string(t.outer_sweeps)},
      {"sweep_tol", format_double(t.sweep_rel_tol)},
      {"precondition", b(t.precondition)},
      {"em_max_rounds", std::to_string(t.em_max_rounds)},
      {"em_tol", format_double(t.em_tol)},
      {"readmit", b(t.readmit)},
      {"seed", std::to_string(t.seed)},
      {"weight_graph_u", format_double(t.u.graph)},
      {"weight_graph_v", format_double(t.v.graph)},
      {"weight_l2_u", format_double(t.u.l2)},
      {"weight_l2_v", format_double(t.v.l2)},
      {"n", std::to_string(s.n)},
      {"m", std::to_string(s.m)},
      {"synth_d", std::to_string(s.d)},
      {"synth_gamma", format_double(s.gamma)},
      {"fidelity", format_double(s.fidelity)},
      {"sigma2_obs", format_double(s.sigma2_obs)},
      {"frac_observed", format_double(s.frac_observed)},
      {"block_size", std::to_string(s.block_size)},
      {"within_block_noise", format_double(s.within_block_noise)},
      {"dirichlet_conc", format_double(s.dirichlet_conc)},
      {"split_ratio", format_double(s.split_ratio)},
  };
}

void write_report_csv(const std::filesystem::path& path, const EdgeUpdateReport& report) {
  std::ofstream out = open_out(path);
  graem::write_report_csv(out, report);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis_value,model,repeat,rmse,ce_removed_frac,te_removed_frac,seconds\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.axis_value) << ',' << r.model << ',' << r.repeat << ','
        << format_double(r.rmse) << ',' << format_double(r.ce_removed_frac) << ','
        << format_double(r.te_removed_frac) << ',' << format_double(r.seconds) << '\n';
  }
}

void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "axis_value,model,mean_rmse,std_rmse,count\n";
  for (const SweepCell& c : cells) {
    out << format_double(c.axis_value) << ',' << c.model << ',' << format_double(c.mean_rmse)
        << ',' << format_double(c.std_rmse) << ',' << c.count << '\n';
  }
}

}  // namespace graem::io
