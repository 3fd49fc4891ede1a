#pragma once

#include "rrt/core.hpp"

#include <cmath>
#include <vector>

namespace rrt {

/// Regularization weights of the penalized KL functional.
///
/// lambda_o = +inf pins the outliers to zero (the "no outlier" configuration).
/// alpha holds the per-territory scale factors used by the standardization
/// step; it is bookkeeping only and never enters the objective. An empty
/// alpha means the data are in original units.
struct Hyperparameters {
  static constexpr double kDefaultLambdaT = 3.5;
  static constexpr double kDefaultLambdaSJoint = 0.002;
  static constexpr double kDefaultLambdaO = 0.025;

  double lambda_t = kDefaultLambdaT;
  double lambda_s = 0.0;
  double lambda_o = kDefaultLambdaO;
  std::vector<double> alpha;

  bool outliers_pinned() const noexcept { return std::isinf(lambda_o); }

  void validate() const {
    if (!(lambda_t >= 0.0) || !std::isfinite(lambda_t)) throw ParameterError("lambda_T must be finite and >= 0");
    if (!(lambda_s >= 0.0) || !std::isfinite(lambda_s)) throw ParameterError("lambda_S must be finite and >= 0");
    if (!(lambda_o >= 0.0)) throw ParameterError("lambda_O must be >= 0 or +inf");
    for (double a : alpha)
      if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("alpha entries must be finite and > 0");
  }
};

}  // namespace rrt
