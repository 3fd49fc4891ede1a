#pragma once

// End-to-end estimation on raw counts: clip negatives, standardize per
// territory, solve, and map the estimates back to count units.

#include "rrt/core.hpp"
#include "rrt/model.hpp"
#include "rrt/operators.hpp"
#include "rrt/serial_interval.hpp"
#include "rrt/solver.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace rrt {

struct EstimateOptions {
  Hyperparameters hyper;
  SolverConfig solver;
  bool standardize = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct PipelineResult {
  Matrix r_hat, o_hat, p_hat;  // count units
  std::vector<double> alpha;
  std::vector<Estimate> solves;  // one joint solve, or one per territory
  bool joint = false;
  int clipped_negative = 0;

  bool converged() const {
    return std::all_of(solves.begin(), solves.end(), [](const Estimate& e) { return e.converged; });
  }
  int iterations() const {
    int k = 0;
    for (const auto& e : solves) k = std::max(k, e.iterations);
    return k;
  }
  /// Sum of the final objectives, in standardized units.
  double objective() const {
    double j = 0.0;
    for (const auto& e : solves) j += e.objective;
    return j;
  }
};

namespace detail {

template <class F>
void parallel_for(int n, unsigned threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Joint solve over the graph when one is given; otherwise independent
/// single-territory solves (lambda_S has no effect) run concurrently.
///
/// Negative counts are set to 0 before solving and their value is added back
/// to the reported outliers, so O_hat keeps the correction artifacts.
inline PipelineResult estimate(const CountMatrix& counts, const SerialInterval& phi, const EpiGraph* graph,
                               const EstimateOptions& opt) {
  const Eigen::Index D = counts.num_territories(), T = counts.num_days();
  PipelineResult res;
  const Matrix negative = counts.values().min(0.0);
  res.clipped_negative = static_cast<int>((counts.values() < 0.0).count());
  Matrix z = counts.values().max(0.0);
  if (opt.standardize) {
    auto [zs, alpha] = standardize(z);
    z = std::move(zs);
    res.alpha = std::move(alpha);
  } else {
    res.alpha.assign(static_cast<std::size_t>(D), 1.0);
  }
  const Matrix phiz = convolve_past(z, phi);
  Hyperparameters h = opt.hyper;
  h.alpha = res.alpha;

  res.r_hat = Matrix::Zero(D, T);
  res.o_hat = Matrix::Zero(D, T);
  res.p_hat = Matrix::Zero(D, T);
  if (graph) {
    if (graph->num_vertices() != D) throw GraphError("estimate: graph does not match the number of territories");
    res.joint = true;
    res.solves.push_back(run(z, phiz, *graph, h, opt.solver));
    res.r_hat = res.solves[0].r_hat;
    res.o_hat = res.solves[0].o_hat;
    res.p_hat = res.solves[0].p_hat;
  } else {
    h.lambda_s = 0.0;
    res.solves.resize(static_cast<std::size_t>(D));
    const EpiGraph single(1);
    detail::parallel_for(static_cast<int>(D), opt.threads, [&](int d) {
      res.solves[static_cast<std::size_t>(d)] = run(Matrix(z.row(d)), Matrix(phiz.row(d)), single, h, opt.solver);
    });
    for (Eigen::Index d = 0; d < D; ++d) {
      const auto& e = res.solves[static_cast<std::size_t>(d)];
      res.r_hat.row(d) = e.r_hat.row(0);
      res.o_hat.row(d) = e.o_hat.row(0);
      res.p_hat.row(d) = e.p_hat.row(0);
    }
  }
  for (Eigen::Index d = 0; d < D; ++d) {
    const double a = res.alpha[static_cast<std::size_t>(d)];
    res.o_hat.row(d) *= a;
    res.p_hat.row(d) *= a;
  }
  res.o_hat += negative;
  return res;
}

struct TwoStepResult {
  CountMatrix clean;
  Matrix median_outliers;
  PipelineResult estimate;
};

/// Median-filter the counts, then estimate R without an outlier term
/// (lambda_O = +inf, lambda_S = 0) on the cleaned, re-standardized counts.
inline TwoStepResult two_step(const CountMatrix& counts, const SerialInterval& phi, EstimateOptions opt, int window = 7,
                              double k = 2.5) {
  auto [clean, outliers] = sliding_median_baseline(counts, window, k);
  opt.hyper.lambda_o = kInf;
  opt.hyper.lambda_s = 0.0;
  auto est = estimate(clean, phi, nullptr, opt);
  return {std::move(clean), std::move(outliers), std::move(est)};
}

}  // namespace rrt
