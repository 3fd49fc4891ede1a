#pragma once

#include "rrt/core.hpp"
#include "rrt/hyperparameters.hpp"
#include "rrt/model.hpp"
#include "rrt/operators.hpp"
#include "rrt/serial_interval.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <vector>

namespace rrt {

struct SolverConfig {
  double epsilon = 1e-7;
  long k_max = 200000;  // 1e7 in long production runs
  int k_smooth = 500;
  double step_safety = 0.99;
  int trace_every = 1;
  /// Estimate ||G||^2 by power iteration; otherwise use 2 * max degree.
  bool graph_power_iteration = true;

  void validate() const {
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
    if (k_max < 1) throw ParameterError("k_max must be >= 1");
    if (k_smooth < 1) throw ParameterError("k_smooth must be >= 1");
    if (!(step_safety > 0.0 && step_safety < 1.0)) throw ParameterError("step_safety must be in (0, 1)");
    if (trace_every < 1) throw ParameterError("trace_every must be >= 1");
  }
};

struct StepSizes {
  double tau = 0.0;
  double sigma = 0.0;
  double bound = 0.0;  // the ||L||^2 bound the steps were derived from
};

/// Equal primal and dual steps saturating tau * sigma * bound = safety^2 < 1.
inline StepSizes step_sizes(const Hyperparameters& h, double d2_norm_sq = kD2NormSqBound, double g_norm_sq = 0.0,
                            double safety = 0.99) {
  if (!(safety > 0.0 && safety < 1.0)) throw ParameterError("step_sizes: safety must be in (0, 1)");
  const double bound = op_norm_bound(h, d2_norm_sq, g_norm_sq);
  if (!(bound > 0.0) || !std::isfinite(bound)) throw ParameterError("step_sizes: operator norm bound must be positive and finite");
  const double s = safety / std::sqrt(bound);
  return {s, s, bound};
}

/// Relative objective increment |phi_k - phi_{k-1}| / phi_{k-1}; 0/0 is 0 and
/// x/0 is +inf.
inline double relative_increment(double prev, double cur) {
  if (prev == 0.0) return cur == 0.0 ? 0.0 : kInf;
  return std::abs(cur - prev) / std::abs(prev);
}

/// Max of the relative increments Psi_l for l in [max(k - k_smooth, 1), k],
/// where phi_trace[0] is the initial objective.
inline double smoothed_increment(const std::vector<double>& phi_trace, long k, long k_smooth) {
  if (k < 1 || k >= static_cast<long>(phi_trace.size())) throw ParameterError("smoothed_increment: k out of range");
  if (k_smooth < 1) throw ParameterError("smoothed_increment: k_smooth must be >= 1");
  double best = 0.0;
  for (long l = std::max(k - k_smooth, 1L); l <= k; ++l)
    best = std::max(best, relative_increment(phi_trace[static_cast<std::size_t>(l - 1)], phi_trace[static_cast<std::size_t>(l)]));
  return best;
}

/// Optional starting point for run(); O is ignored when outliers are pinned.
struct InitialPoint {
  Matrix r;
  Matrix o;
};

namespace detail {

// Sliding-window maximum over the last `width` pushed values.
class SlidingMax {
 public:
  explicit SlidingMax(long width) : width_(width) {}
  double push(double v) {
    ++n_;
    while (!q_.empty() && q_.back().second <= v) q_.pop_back();
    q_.emplace_back(n_, v);
    while (q_.front().first <= n_ - width_) q_.pop_front();
    return q_.front().second;
  }

 private:
  long width_;
  long n_ = 0;
  std::deque<std::pair<long, double>> q_;
};

}  // namespace detail

/// Chambolle-Pock primal-dual iteration for the penalized KL functional.
///
/// z must be nonnegative (standardize first for the usual scaling). The
/// reported estimate is the final iterate projected onto the feasible set:
/// R clipped at 0, and R = O = 0 wherever Z = PhiZ = 0.
inline Estimate run(const Matrix& z, const Matrix& phiz, const EpiGraph& graph, const Hyperparameters& h,
                    const SolverConfig& cfg = {}, const InitialPoint* init = nullptr) {
  h.validate();
  cfg.validate();
  const Eigen::Index D = z.rows(), T = z.cols();
  require_shape(T >= 3, "run: need T >= 3");
  require_shape(phiz.rows() == D && phiz.cols() == T, "run: PhiZ shape mismatch");
  if (graph.num_vertices() != D) throw GraphError("run: graph vertex count does not match the number of territories");
  if (!z.allFinite() || (z < 0.0).any()) throw DataError("run: counts must be finite and nonnegative");
  if (!phiz.allFinite() || (phiz < 0.0).any()) throw DataError("run: convolved counts must be finite and nonnegative");

  const bool pinned = h.outliers_pinned();
  const double g_norm_sq =
      graph.num_edges() == 0 ? 0.0 : (cfg.graph_power_iteration ? graph_norm_sq(graph) : 2.0 * graph.max_degree());
  const StepSizes steps = step_sizes(h, kD2NormSqBound, g_norm_sq, cfg.step_safety);
  const double tau = steps.tau, sigma = steps.sigma;

  Estimate est;

  Matrix r, o;
  if (init) {
    require_shape(init->r.rows() == D && init->r.cols() == T, "run: initial R shape mismatch");
    r = init->r;
    o = (pinned || init->o.size() == 0) ? Matrix::Zero(D, T) : init->o;
    require_shape(o.rows() == D && o.cols() == T, "run: initial O shape mismatch");
  } else {
    r = z;
    o = Matrix::Zero(D, T);
  }
  auto penalized = [&](const Matrix& rr, const Matrix& oo) { return objective_terms(rr, oo, z, phiz, graph, h).penalized(); };

  double phi0 = penalized(r, o);
  if (!std::isfinite(phi0)) {
    // Repair: forced zeros, and counts unreachable from past counts moved to O.
    for (Eigen::Index d = 0; d < D; ++d)
      for (Eigen::Index t = 0; t < T; ++t) {
        const double zz = z(d, t), pz = phiz(d, t);
        if (zz == 0.0 && pz == 0.0) {
          if (r(d, t) != 0.0 || o(d, t) != 0.0) ++est.repaired_init_entries;
          r(d, t) = 0.0;
          o(d, t) = 0.0;
        } else if (r(d, t) * pz + o(d, t) <= 0.0 && !(zz == 0.0 && r(d, t) * pz + o(d, t) == 0.0)) {
          ++est.repaired_init_entries;
          if (pz == 0.0) {
            r(d, t) = 0.0;
            if (!pinned) o(d, t) = zz;
          } else {
            r(d, t) = std::max(zz / pz, 0.0);
            o(d, t) = 0.0;
          }
        }
      }
    phi0 = penalized(r, o);
    if (!std::isfinite(phi0)) throw DataError("run: objective is not finite at the initial point");
  }

  DualVariable q = l_apply(r, o, graph, h);
  Matrix r_bar = r, o_bar = o;
  Matrix r_prev, o_prev;

  est.objective_trace.push_back(phi0);
  est.trace_iterations.push_back(0);
  const long window = std::max<long>(1, cfg.k_smooth / cfg.trace_every);
  detail::SlidingMax smax(window + 1);
  double prev_phi = phi0;

  long k = 0;
  while (k < cfg.k_max) {
    // Dual step.
    DualVariable lq = l_apply(r_bar, o_bar, graph, h);
    lq *= sigma;
    q += lq;
    q = prox_h_conj(std::move(q), sigma);

    // Primal step.
    auto [ar, ao] = l_adjoint(q, graph, h);
    r_prev = r;
    o_prev = o;
    r -= tau * ar;
    if (pinned) {
      for (Eigen::Index i = 0; i < r.size(); ++i)
        r.data()[i] = prox_f_pinned(r.data()[i], z.data()[i], phiz.data()[i], tau);
    } else {
      o -= tau * ao;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        auto [rv, ov] = prox_f(r.data()[i], o.data()[i], z.data()[i], phiz.data()[i], tau);
        r.data()[i] = rv;
        o.data()[i] = ov;
      }
    }

    // Extrapolation.
    r_bar = 2.0 * r - r_prev;
    o_bar = 2.0 * o - o_prev;
    ++k;

    if (k % cfg.trace_every == 0) {
      const double phi = penalized(r, o);
      const double inc = relative_increment(prev_phi, phi);
      const double smooth = smax.push(inc);
      prev_phi = phi;
      est.objective_trace.push_back(phi);
      est.increment_trace.push_back(inc);
      est.smoothed_trace.push_back(smooth);
      est.trace_iterations.push_back(static_cast<int>(k));
      if (smooth < cfg.epsilon) {
        est.converged = true;
        break;
      }
    }
  }
  est.iterations = static_cast<int>(k);

  est.raw_min_r = r.minCoeff();
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (z.data()[i] == 0.0 && phiz.data()[i] == 0.0) {
      r.data()[i] = 0.0;
      o.data()[i] = 0.0;
    } else if (r.data()[i] < 0.0) {
      r.data()[i] = 0.0;
    }
  }
  est.p_hat = r * phiz + o;
  est.objective = objective(r, o, z, phiz, graph, h);
  est.r_hat = std::move(r);
  est.o_hat = std::move(o);
  return est;
}

inline Estimate run(const CountMatrix& z, const SerialInterval& phi, const EpiGraph& graph, const Hyperparameters& h,
                    const SolverConfig& cfg = {}, const InitialPoint* init = nullptr) {
  return run(z.values(), convolve_past(z.values(), phi), graph, h, cfg, init);
}

}  // namespace rrt
