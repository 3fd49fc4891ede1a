#pragma once

#include "rrt/core.hpp"
#include "rrt/hyperparameters.hpp"
#include "rrt/operators.hpp"
#include "rrt/serial_interval.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rrt {

/// Daily counts, one row per territory, one column per consecutive day.
class CountMatrix {
 public:
  static constexpr Eigen::Index kMinDays = 3;

  CountMatrix() = default;
  CountMatrix(Matrix values, std::vector<std::string> territories, Date first_day)
      : values_(std::move(values)), territories_(std::move(territories)), first_day_(first_day) {
    if (values_.rows() < 1) throw ShapeError("CountMatrix: need at least one territory");
    if (values_.cols() < kMinDays) throw ShapeError("CountMatrix: need at least 3 days");
    if (territories_.empty())
      for (Eigen::Index d = 0; d < values_.rows(); ++d) territories_.push_back(std::to_string(d + 1));
    if (static_cast<Eigen::Index>(territories_.size()) != values_.rows())
      throw ShapeError("CountMatrix: territory labels do not match row count");
    if (!first_day_.ok()) throw ParameterError("CountMatrix: invalid first day");
  }

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index num_territories() const noexcept { return values_.rows(); }
  Eigen::Index num_days() const noexcept { return values_.cols(); }
  const std::vector<std::string>& territories() const noexcept { return territories_; }
  Date first_day() const noexcept { return first_day_; }
  Date date(Eigen::Index t) const { return add_days(first_day_, static_cast<long>(t)); }

  CountMatrix with_values(Matrix v) const { return CountMatrix(std::move(v), territories_, first_day_); }

  /// Rows `rows`, in that order.
  CountMatrix select_rows(const std::vector<int>& rows) const {
    Matrix v(static_cast<Eigen::Index>(rows.size()), num_days());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      v.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
      names.push_back(territories_[static_cast<std::size_t>(rows[i])]);
    }
    return CountMatrix(std::move(v), std::move(names), first_day_);
  }

 private:
  Matrix values_;
  std::vector<std::string> territories_;
  Date first_day_ = make_date(2020, 1, 1);
};

/// Solver output. P_hat = R_hat * PhiZ + O_hat after the final feasibility
/// projection; raw_min_r records how negative R was before projection.
struct Estimate {
  Matrix r_hat, o_hat, p_hat;
  int iterations = 0;
  std::vector<double> objective_trace;
  std::vector<double> increment_trace;
  std::vector<double> smoothed_trace;
  std::vector<int> trace_iterations;
  bool converged = false;
  double objective = kNaN;  // at the projected point
  double raw_min_r = 0.0;
  int repaired_init_entries = 0;
};

// ---------------------------------------------------------------------------
// Data fidelity

/// Scalar Kullback-Leibler divergence d_KL(z | p).
inline double kl_scalar(double z, double p) {
  if (z < 0.0 || p < 0.0 || std::isnan(z) || std::isnan(p)) throw DomainError("kl_scalar: arguments must be >= 0");
  if (z == 0.0) return p;
  if (p == 0.0) return kInf;
  return z * std::log(z / p) + p - z;
}

/// An entry with phiz = 0 < z cannot be produced by the renewal model.
inline bool unexplained_entry(double z, double phiz) { return phiz == 0.0 && z > 0.0; }

/// Separable extended-KL term F(R, O | Z). Infeasible points give +inf.
/// With skip_unexplained, entries where phiz = 0 < z are left out of the sum.
inline double data_fidelity(const Matrix& r, const Matrix& o, const Matrix& z, const Matrix& phiz,
                            bool skip_unexplained = false) {
  require_shape(r.rows() == z.rows() && r.cols() == z.cols() && o.rows() == z.rows() && o.cols() == z.cols() &&
                    phiz.rows() == z.rows() && phiz.cols() == z.cols(),
                "data_fidelity: shape mismatch");
  double total = 0.0;
  for (Eigen::Index d = 0; d < z.rows(); ++d) {
    for (Eigen::Index t = 0; t < z.cols(); ++t) {
      const double zz = z(d, t), pz = phiz(d, t);
      if (zz < 0.0) throw DomainError("data_fidelity: negative count");
      if (zz == 0.0 && pz == 0.0) {
        if (r(d, t) != 0.0 || o(d, t) != 0.0) return kInf;
        continue;
      }
      if (skip_unexplained && unexplained_entry(zz, pz)) continue;
      const double p = r(d, t) * pz + o(d, t);
      if (p < 0.0) return kInf;
      total += kl_scalar(zz, p);
    }
  }
  return total;
}

/// The individual terms of the penalized functional, before the positivity
/// indicator is applied.
struct ObjectiveTerms {
  double fidelity = 0.0;
  double time = 0.0;     // lambda_T ||D2 R||_1
  double space = 0.0;    // lambda_S ||G R||_1
  double outliers = 0.0; // lambda_O ||O||_1, or indicator of O = 0
  bool r_nonnegative = true;

  /// Penalized functional without the positivity indicator.
  double penalized() const { return fidelity + time + space + outliers; }
  double total() const { return r_nonnegative ? penalized() : kInf; }
};

/// With lambda_O = +inf, O must vanish and entries with phiz = 0 < z are
/// excluded from the fidelity (they are unreachable without outliers).
inline ObjectiveTerms objective_terms(const Matrix& r, const Matrix& o, const Matrix& z, const Matrix& phiz,
                                      const EpiGraph& graph, const Hyperparameters& h) {
  ObjectiveTerms terms;
  const bool pinned = h.outliers_pinned();
  terms.fidelity = data_fidelity(r, o, z, phiz, pinned);
  terms.time = h.lambda_t == 0.0 ? 0.0 : h.lambda_t * d2_apply(r).abs().sum();
  terms.space = (h.lambda_s == 0.0 || graph.num_edges() == 0) ? 0.0 : h.lambda_s * graph_apply(r, graph).abs().sum();
  if (pinned)
    terms.outliers = (o != 0.0).any() ? kInf : 0.0;
  else
    terms.outliers = h.lambda_o == 0.0 ? 0.0 : h.lambda_o * o.abs().sum();
  terms.r_nonnegative = (r >= 0.0).all();
  return terms;
}

/// F + lambda_T ||D2 R||_1 + i_{>=0}(R) + lambda_S ||G R||_1 + lambda_O ||O||_1.
inline double objective(const Matrix& r, const Matrix& o, const Matrix& z, const Matrix& phiz, const EpiGraph& graph,
                        const Hyperparameters& h) {
  return objective_terms(r, o, z, phiz, graph, h).total();
}

// ---------------------------------------------------------------------------
// Baselines

/// Per-day maximum-likelihood R: Z / PhiZ. 0 where Z = PhiZ = 0, NaN where
/// Z > 0 = PhiZ (undefined).
inline Matrix mle(const Matrix& z, const Matrix& phiz) {
  require_shape(z.rows() == phiz.rows() && z.cols() == phiz.cols(), "mle: shape mismatch");
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zz = z.data()[i], pz = phiz.data()[i];
    if (pz > 0.0)
      out.data()[i] = zz / pz;
    else
      out.data()[i] = zz == 0.0 ? 0.0 : kNaN;
  }
  return out;
}

inline Matrix mle(const CountMatrix& z, const SerialInterval& phi) {
  return mle(z.values(), convolve_past(z.values(), phi));
}

inline int count_undefined(const Matrix& m) { return static_cast<int>(m.isNaN().count()); }

struct MedianFilterResult {
  Matrix clean;
  Matrix outliers;
  int replaced = 0;
};

/// Centered sliding median with shrinking windows at the edges; samples more
/// than k in-window (population) standard deviations from the window median
/// are replaced by it.
inline MedianFilterResult sliding_median_filter(const Matrix& z, int window = 7, double k = 2.5) {
  if (window < 3 || window % 2 == 0) throw ParameterError("sliding median: window must be odd and >= 3");
  if (!(k > 0.0)) throw ParameterError("sliding median: k must be > 0");
  const Eigen::Index T = z.cols();
  const Eigen::Index half = window / 2;
  MedianFilterResult res{z, Matrix::Zero(z.rows(), T), 0};
  std::vector<double> buf;
  for (Eigen::Index d = 0; d < z.rows(); ++d) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const Eigen::Index h = std::min({half, t, T - 1 - t});
      buf.clear();
      for (Eigen::Index s = t - h; s <= t + h; ++s) buf.push_back(z(d, s));
      const std::size_t n = buf.size();
      double mean = 0.0;
      for (double v : buf) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : buf) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n / 2), buf.end());
      const double med = buf[n / 2];  // n is odd
      if (std::abs(z(d, t) - med) > k * sd) {
        res.clean(d, t) = med;
        res.outliers(d, t) = z(d, t) - med;
        ++res.replaced;
      }
    }
  }
  return res;
}

inline std::pair<CountMatrix, Matrix> sliding_median_baseline(const CountMatrix& z, int window = 7, double k = 2.5) {
  auto res = sliding_median_filter(z.values(), window, k);
  return {z.with_values(std::move(res.clean)), std::move(res.outliers)};
}

/// Per-row population standard deviation (1 for constant rows) and the
/// rescaled matrix.
inline std::pair<Matrix, std::vector<double>> standardize(const Matrix& z) {
  std::vector<double> alpha(static_cast<std::size_t>(z.rows()));
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index d = 0; d < z.rows(); ++d) {
    const double mean = z.row(d).mean();
    const double var = (z.row(d) - mean).square().mean();
    double a = std::sqrt(var);
    if (!(a > 0.0)) a = 1.0;
    alpha[static_cast<std::size_t>(d)] = a;
    out.row(d) = z.row(d) / a;
  }
  return {std::move(out), std::move(alpha)};
}

inline std::pair<CountMatrix, std::vector<double>> standardize(const CountMatrix& z) {
  auto [v, alpha] = standardize(z.values());
  return {z.with_values(std::move(v)), std::move(alpha)};
}

}  // namespace rrt
