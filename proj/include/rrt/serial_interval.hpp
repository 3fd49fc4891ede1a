#pragma once

#include "rrt/core.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <vector>

namespace rrt {

/// Discretized serial-interval kernel. weights()[u-1] is the weight of lag u,
/// u = 1..tau(). Lag 0 never contributes.
class SerialInterval {
 public:
  static constexpr double kDefaultShape = 1.87;
  static constexpr double kDefaultRate = 0.28;
  static constexpr int kDefaultTau = 25;

  SerialInterval() = default;

  /// Takes raw nonnegative weights and renormalizes them to unit sum.
  explicit SerialInterval(std::vector<double> weights, double shape = kNaN, double rate = kNaN)
      : weights_(std::move(weights)), shape_(shape), rate_(rate) {
    if (weights_.empty()) throw ParameterError("serial interval needs at least one lag");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("serial interval weights must be finite and >= 0");
      sum += w;
    }
    if (!(sum > 0.0)) throw ParameterError("serial interval weights sum to zero");
    for (double& w : weights_) w /= sum;
  }

  int tau() const noexcept { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double phi(int lag) const { return weights_.at(static_cast<std::size_t>(lag - 1)); }
  double shape() const noexcept { return shape_; }
  double rate() const noexcept { return rate_; }

  double mean_lag() const {
    double m = 0.0;
    for (int u = 1; u <= tau(); ++u) m += u * phi(u);
    return m;
  }
  double std_lag() const {
    const double m = mean_lag();
    double v = 0.0;
    for (int u = 1; u <= tau(); ++u) v += (u - m) * (u - m) * phi(u);
    return std::sqrt(v);
  }

 private:
  std::vector<double> weights_;
  double shape_ = kNaN;
  double rate_ = kNaN;
};

/// Gamma(shape, rate) mass on each unit interval (u-1, u], u = 1..tau,
/// renormalized after truncation.
inline SerialInterval discretize_gamma(double shape = SerialInterval::kDefaultShape,
                                       double rate = SerialInterval::kDefaultRate,
                                       int tau = SerialInterval::kDefaultTau) {
  if (!(shape > 0.0) || !(rate > 0.0) || tau < 1)
    throw ParameterError("discretize_gamma: shape, rate and tau must be positive");
  std::vector<double> w(static_cast<std::size_t>(tau));
  double prev = 0.0;
  for (int u = 1; u <= tau; ++u) {
    const double cdf = boost::math::gamma_p(shape, rate * u);
    w[static_cast<std::size_t>(u - 1)] = cdf - prev;
    prev = cdf;
  }
  return SerialInterval(std::move(w), shape, rate);
}

/// Causal convolution (Phi Z)[d,t] = sum_{u=1}^{min(t-1,tau)} Phi_u Z[d,t-u],
/// zero-padded before the first day.
inline Matrix convolve_past(const Matrix& z, const SerialInterval& phi) {
  require_shape(z.cols() >= 1, "convolve_past: need at least one day");
  const Eigen::Index T = z.cols();
  Matrix out = Matrix::Zero(z.rows(), T);
  for (Eigen::Index d = 0; d < z.rows(); ++d) {
    for (Eigen::Index t = 1; t < T; ++t) {
      const Eigen::Index umax = std::min<Eigen::Index>(t, phi.tau());
      double acc = 0.0;
      for (Eigen::Index u = 1; u <= umax; ++u) acc += phi.weights()[static_cast<std::size_t>(u - 1)] * z(d, t - u);
      out(d, t) = acc;
    }
  }
  return out;
}

}  // namespace rrt
