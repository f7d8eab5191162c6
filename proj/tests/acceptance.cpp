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

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graem/datagen.hpp"
#include "graem/driver.hpp"
#include "graem/edge_prune.hpp"
#include "graem/factorization.hpp"
#include "graem/io.hpp"
#include "oracles.hpp"

using namespace graem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

SparseMatrix sparse_of(const Eigen::MatrixXd& m) {
  std::vector<Triplet> t;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) t.push_back({std::size_t(r), std::size_t(c), m(r, c)});
    }
  }
  return SparseMatrix::from_triplets(m.rows(), m.cols(), t);
}

void estep_oracle() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const int instances = 25;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    const std::size_t m = 2 + rng() % 19;
    const std::size_t d = 1 + rng() % 3;
    const auto ratings = oracle::random_ratings(n, m, 0.35, rng);
    const ObservationSet obs = oracle::observations(n, m, ratings);
    const auto edges = oracle::random_edges(n, 0.25, rng);
    const double gamma = 0.1 + 0.2 * (trial % 5);
    const GraphSI g = GraphSI::from_edges(n, edges, gamma);
    SolverSettings s;
    s.cg_rel_tol = 1e-12;
    s.cg_max_iters = 10000;
    s.alpha = 1.0;
    const Eigen::MatrixXd v = oracle::random_matrix(m, d, rng);
    const SidePrior prior{&g, {1.0, 1.0}};
    const FactorMatrix u =
        solve_subproblem(oracle::factor(v), obs.row_view(), prior, s, FactorMatrix(n, d));
    const Eigen::MatrixXd want = oracle::estep_mean(
        v, ratings, n, oracle::regularized_laplacian(oracle::adjacency(n, edges), gamma), 1.0);
    worst = std::max(worst, (oracle::dense(u) - want).norm() / want.norm());
  }
  const double secs = seconds_since(t0);
  report(1, worst < 1e-6 && secs < 5.0, "E-step matches the dense closed-form mean",
         std::to_string(instances) + " instances, max rel err " + fmt("%.2e", worst) + ", " +
             fmt("%.2f s", secs));
}

void posterior_constant() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    const std::size_t n = 6 + instance;
    const std::size_t m = 5 + instance;
    const auto ratings = oracle::random_ratings(n, m, 0.4, rng);
    const ObservationSet obs = oracle::observations(n, m, ratings);
    const auto eu = oracle::random_edges(n, 0.3, rng);
    const auto ev = oracle::random_edges(m, 0.3, rng);
    const GraphSI gu = GraphSI::from_edges(n, eu, 0.5);
    const GraphSI gv = GraphSI::from_edges(m, ev, 0.5);
    const Eigen::MatrixXd lu = oracle::regularized_laplacian(oracle::adjacency(n, eu), 0.5);
    const Eigen::MatrixXd lv = oracle::regularized_laplacian(oracle::adjacency(m, ev), 0.5);
    const double s2 = 0.1 + 0.3 * instance;
    SolverSettings s;
    s.alpha = 1.0 / s2;
    const Eigen::MatrixXd v = oracle::random_matrix(m, 2, rng);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, scale = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Eigen::MatrixXd u = oracle::random_matrix(n, 2, rng, 0.5 + k);
      const double nlp = oracle::neg_log_joint(u, v, ratings, lu, lv, s2);
      const double diff =
          nlp - objective(oracle::factor(u), oracle::factor(v), obs, &gu, &gv, s);
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
      scale = std::max(scale, std::abs(nlp));
    }
    worst = std::max(worst, (hi - lo) / scale);
  }
  report(2, worst < 1e-8, "negative log posterior minus objective is constant in U",
         "10 instances x 20 U, max spread/scale " + fmt("%.2e", worst));
}

void gradient_check() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int instance = 0; instance < 5; ++instance) {
    const std::size_t n = 5 + instance, m = 4 + instance, d = 2 + instance % 2;
    const auto ratings = oracle::random_ratings(n, m, 0.5, rng);
    const ObservationSet obs = oracle::observations(n, m, ratings);
    const GraphSI gu = GraphSI::from_edges(n, oracle::random_edges(n, 0.4, rng), 0.3);
    const GraphSI gv = GraphSI::from_edges(m, oracle::random_edges(m, 0.4, rng), 0.3);
    SolverSettings s;
    s.alpha = 1.5;
    s.u.graph = 0.8;
    s.v.graph = 1.2;
    FactorMatrix u = oracle::factor(oracle::random_matrix(n, d, rng));
    FactorMatrix v = oracle::factor(oracle::random_matrix(m, d, rng));
    const Gradient g = objective_gradient(u, v, obs, &gu, &gv, s);
    const double h = 1e-5;
    auto side = [&](FactorMatrix& x, const FactorMatrix& grad) {
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t k = 0; k < x.cols(); ++k) {
          const double keep = x(i, k);
          x(i, k) = keep + h;
          const double fp = objective(u, v, obs, &gu, &gv, s);
          x(i, k) = keep - h;
          const double fm = objective(u, v, obs, &gu, &gv, s);
          x(i, k) = keep;
          const double fd = (fp - fm) / (2.0 * h);
          worst = std::max(worst, std::abs(fd - grad(i, k)) / std::max(1.0, std::abs(grad(i, k))));
        }
      }
    };
    side(u, g.u);
    side(v, g.v);
  }
  report(3, worst < 1e-5, "analytic gradient matches central differences",
         "5 instances, max rel err " + fmt("%.2e", worst));
}

void sampling_fidelity() {
  std::mt19937_64 rng(404);
  const std::vector<std::size_t> ks{1000, 10000, 100000};
  const int reps = 10;
  std::vector<double> mean_err(ks.size(), 0.0);
  double worst_final = 0.0;
  const std::size_t sizes[] = {8, 10, 12};
  for (std::size_t n : sizes) {
    auto edges = oracle::random_edges(n, 0.3, rng);
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    const Eigen::MatrixXd a = oracle::adjacency(n, edges);
    Eigen::MatrixXd m = oracle::regularized_laplacian(a, 0.3);
    std::uniform_real_distribution<double> extra(0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) += extra(rng);
    const Eigen::MatrixXd support = a + Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd want = m.inverse().cwiseProduct(support);
    const SparseCholesky chol(sparse_of(m));
    for (std::size_t c = 0; c < ks.size(); ++c) {
      for (int r = 0; r < reps; ++r) {
        const auto xs = sample_column(chol, rng, ks[c]);
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
        for (const auto& x : xs) {
          const Eigen::Map<const Eigen::VectorXd> v(x.data(), n);
          s.noalias() += v * v.transpose();
        }
        s /= static_cast<double>(ks[c]);
        const double err = (s.cwiseProduct(support) - want).norm() / want.norm();
        mean_err[c] += err / (reps * std::size(sizes));
        if (c + 1 == ks.size()) worst_final = std::max(worst_final, err);
      }
    }
  }
  const std::vector<double> kd(ks.begin(), ks.end());
  const double slope = loglog_slope(kd, mean_err);
  const bool decreasing = mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2];
  const bool pass = worst_final < 0.05 && decreasing && slope > -0.6 && slope < -0.4;
  report(4, pass, "posterior samples reproduce the inverse precision on the graph support",
         "K=1e5 worst rel err " + fmt("%.4f", worst_final) + ", mean errs " +
             fmt("%.4f", mean_err[0]) + "/" + fmt("%.4f", mean_err[1]) + "/" +
             fmt("%.4f", mean_err[2]) + ", log-log slope " + fmt("%.3f", slope) +
             " (1/sqrt(K) is -0.5, accepted band [-0.6, -0.4])");
}

void partition_property() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> tau_dist(-0.5, 0.5);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng() % 30;
    const std::size_t m = 3 + rng() % 20;
    const std::size_t d = 1 + rng() % 4;
    const auto edges = oracle::random_edges(n, 0.25, rng);
    const GraphSI a0 = GraphSI::from_edges(n, edges, 0.2 + 0.1 * (trial % 5));
    const ObservationSet obs =
        oracle::observations(n, m, oracle::random_ratings(n, m, 0.3, rng));
    const FactorMatrix u = oracle::factor(oracle::random_matrix(n, d, rng, 0.5));
    const FactorMatrix v = oracle::factor(oracle::random_matrix(m, d, rng));
    MStepSettings s;
    s.k_samples = trial % 4 == 0 ? 0 : 20;
    s.seed = trial;
    double t1 = tau_dist(rng), t2 = tau_dist(rng);
    if (t1 > t2) std::swap(t1, t2);
    s.tau = t1;
    const MStepResult lo = m_step(a0, a0.adjacency(), u, v, obs.row_view(), s);
    s.tau = t2;
    const MStepResult hi = m_step(a0, a0.adjacency(), u, v, obs.row_view(), s);
    bool ok = true;
    for (const MStepResult* r : {&lo, &hi}) {
      ok &= r->report.kept + r->report.removed_contested == a0.num_edges();
      ok &= r->adjacency.nnz() == 2 * r->report.kept;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : r->adjacency.row_cols(i)) ok &= a0.has_edge(i, j);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : hi.adjacency.row_cols(i)) ok &= lo.adjacency.at(i, j) != 0.0;
    }
    if (!ok) ++bad;
  }
  report(5, bad == 0, "kept + contested = |A0|, support inside A0, monotone in tau",
         "200 randomized cases, " + std::to_string(bad) + " violations");
}

// Fixed setting for the synthetic comparison. The generator uses its
// defaults (400 x 400, D = 40, noise variance 0.01, 7% observed).
GraemConfig synthetic_training() {
  GraemConfig t;
  t.d = 40;
  t.sigma2 = 1.0;
  t.gamma = 0.01;
  t.u = {10.0, 1.0};
  t.v = {10.0, 1.0};
  t.k_samples = 100;
  t.tau = 0.0;
  return t;
}

std::string sweep_csv_without_seconds(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  for (const SweepRow& r : rows) {
    out << io::format_double(r.axis_value) << ',' << r.model << ',' << r.repeat << ','
        << io::format_double(r.rmse) << ',' << io::format_double(r.ce_removed_frac) << ','
        << io::format_double(r.te_removed_frac) << '\n';
  }
  return out.str();
}

const std::vector<double> kFidelities{0.0, 0.3, 0.5, 0.7};

std::vector<SweepRow> fidelity_sweep(std::size_t threads) {
  SweepOptions opt;
  opt.repeats = 5;
  opt.threads = threads;
  return run_sweep(SweepAxis::kFidelity, kFidelities, SynthConfig{}, synthetic_training(), opt);
}

void synthetic_trend(const std::vector<SweepRow>& rows, double secs) {
  std::map<std::pair<double, std::string>, SweepCell> cells;
  for (const SweepCell& c : summarize_sweep(rows)) cells[{c.axis_value, c.model}] = c;
  std::ostringstream detail;
  bool pass = secs < 15 * 60;
  for (double f : kFidelities) {
    const SweepCell& pmf = cells.at({f, "pmf"});
    const SweepCell& grals = cells.at({f, "grals"});
    const SweepCell& gpmf = cells.at({f, "gpmf"});
    detail << "F=" << f << " pmf " << fmt("%.3f", pmf.mean_rmse) << " grals "
           << fmt("%.3f", grals.mean_rmse) << "+-" << fmt("%.3f", grals.std_rmse) << " gpmf "
           << fmt("%.3f", gpmf.mean_rmse) << "+-" << fmt("%.3f", gpmf.std_rmse);
    if (f >= 0.3) {
      const bool ok = gpmf.mean_rmse <= grals.mean_rmse;
      pass &= ok;
      detail << (ok ? " [gpmf<=grals ok]" : " [gpmf<=grals FAILED]");
    } else {
      const double pooled =
          std::sqrt(0.5 * (gpmf.std_rmse * gpmf.std_rmse + grals.std_rmse * grals.std_rmse));
      const double gap = std::abs(gpmf.mean_rmse - grals.mean_rmse);
      const bool ok = gap <= pooled;
      pass &= ok;
      detail << " [|gpmf-grals|=" << fmt("%.3f", gap) << " vs pooled std " << fmt("%.3f", pooled)
             << (ok ? " ok]" : " FAILED]");
    }
    if (f <= 0.3) {
      const bool ok = pmf.mean_rmse <= grals.mean_rmse;
      pass &= ok;
      detail << (ok ? " [pmf<=grals ok]" : " [pmf<=grals FAILED]");
    }
    detail << "; ";
  }
  detail << fmt("%.0f s", secs);
  report(6, pass, "fidelity sweep ordering of PMF, GRALS and GPMF", detail.str());
}

void edge_classification() {
  SweepOptions opt;
  opt.repeats = 5;
  opt.models = {SweepModel::kGpmf};
  const auto rows =
      run_sweep(SweepAxis::kFracObserved, {0.2}, SynthConfig{}, synthetic_training(), opt);
  double ce = 0.0, te = 0.0;
  for (const SweepRow& r : rows) {
    ce += r.ce_removed_frac / rows.size();
    te += r.te_removed_frac / rows.size();
  }
  const bool pass = ce >= 0.25 && ce <= 0.55 && te <= 0.12;
  report(7, pass, "contested-edge removal separates corrupted from true edges",
         "20% observed, 5 seeds, CE removed " + fmt("%.3f", ce) + ", TE removed " +
             fmt("%.3f", te));
}

struct Scaled {
  GraphSI graph;
  ObservationSet obs;
  FactorMatrix u;
  FactorMatrix v;
};

// N x N problem on a block graph (fixed degree) with a `1 - fidelity` share of
// edges rewired at random, and a fixed number of observations per row, so
// every count scales with N.
Scaled scaled_problem(std::size_t n, std::size_t d, double fidelity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const GraphSI truth = make_block_graph(n, 10, 0.1);
  CorruptedGraph g = corrupt_graph(truth, fidelity, rng);
  std::uniform_int_distribution<std::size_t> col(0, n - 1);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> cols;
    while (cols.size() < 20) {
      const std::size_t j = col(rng);
      if (std::find(cols.begin(), cols.end(), j) == cols.end()) cols.push_back(j);
    }
    for (std::size_t j : cols) t.push_back({i, j, 1.0});
  }
  return {std::move(g.graph), ObservationSet(n, n, std::move(t)),
          FactorMatrix::random_normal(n, d, 1.0, rng), FactorMatrix::random_normal(n, d, 1.0, rng)};
}

template <typename F>
double best_of(int reps, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) best = std::min(best, f());
  return best;
}

struct Scaling {
  double mstep_ratio;
  double cholesky_exponent;
  std::string detail;
};

Scaling measure_scaling(double fidelity) {
  MStepSettings s;
  s.k_samples = 100;
  const std::size_t d = 2;

  // Doubling nnz(A0) at fixed degree.
  auto mstep_time = [&](const Scaled& p) {
    return best_of(2, [&] {
      return m_step(p.graph, p.graph.adjacency(), p.u, p.v, p.obs.row_view(), s).timings.total();
    });
  };
  const double t_small = mstep_time(scaled_problem(4000, d, fidelity, 1));
  const double t_large = mstep_time(scaled_problem(8000, d, fidelity, 2));

  // Cholesky phase over four doublings of N + M.
  std::vector<double> sizes, times;
  std::vector<std::size_t> fill;
  for (std::size_t n = 500; n <= 8000; n *= 2) {
    const Scaled p = scaled_problem(n, 1, fidelity, n);
    const ColumnPosteriorPrecision prec =
        column_precision(p.graph, p.v, p.obs.row_view(), 1.0, 1.0, 0);
    std::size_t nnz_l = 0;
    const double t = best_of(3, [&] {
      const auto t0 = Clock::now();
      const SparseCholesky chol(prec.matrix);
      const double secs = seconds_since(t0);
      nnz_l = chol.factor_nnz();
      return secs;
    });
    sizes.push_back(2.0 * n);
    times.push_back(t);
    fill.push_back(nnz_l);
  }
  Scaling out{t_large / t_small, loglog_slope(sizes, times), {}};
  std::ostringstream detail;
  detail << "F=" << fidelity << ": M-step " << fmt("%.3f", t_small) << " s -> "
         << fmt("%.3f", t_large) << " s for 2x edges, ratio " << fmt("%.2f", out.mstep_ratio)
         << "; Cholesky N+M:seconds:nnz(L)";
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    detail << ' ' << sizes[k] << ':' << fmt("%.4f", times[k]) << ':' << fill[k];
  }
  detail << ", exponent " << fmt("%.2f", out.cholesky_exponent);
  out.detail = detail.str();
  return out;
}

// Gated on the synthetic generator's default graph (30% rewired edges). The
// uncorrupted block graph is reported alongside as a bounded-fill reference.
void complexity() {
  const Scaling noisy = measure_scaling(0.7);
  const Scaling clean = measure_scaling(1.0);
  const bool pass = noisy.mstep_ratio >= 2.0 / 1.6 && noisy.mstep_ratio <= 2.0 * 1.6 &&
                    noisy.cholesky_exponent < 1.3;
  report(8, pass, "M-step and Cholesky scale linearly",
         noisy.detail + " | reference " + clean.detail +
             " | bands: ratio [1.25, 3.2], exponent < 1.3");
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int k = 1; k < argc; ++k) only.push_back(std::atoi(argv[k]));
  auto want = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  if (want(1)) estep_oracle();
  if (want(2)) posterior_constant();
  if (want(3)) gradient_check();
  if (want(4)) sampling_fidelity();
  if (want(5)) partition_property();

  std::vector<SweepRow> first;
  if (want(6) || want(10)) {
    const auto t0 = Clock::now();
    first = fidelity_sweep(0);
    if (want(6)) synthetic_trend(first, seconds_since(t0));
  }
  if (want(7)) edge_classification();
  if (want(8)) complexity();
  if (want(9)) {
    std::printf("SKIP criterion 9: MovieLens comparison needs an external dataset download\n");
    std::fflush(stdout);
  }
  if (want(10)) {
    const auto second = fidelity_sweep(2);
    const bool same = sweep_csv_without_seconds(first) == sweep_csv_without_seconds(second);
    report(10, same, "repeated synthetic sweep with the same seed is identical",
           std::to_string(first.size()) + " rows compared on every column except seconds, " +
               "second run on 2 threads");
  }

  std::printf("%s: %d failing criteria\n", g_failures ? "FAIL" : "PASS", g_failures);
  return g_failures ? 1 : 0;
}
