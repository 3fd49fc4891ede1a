#pragma once

#include "rrt/model.hpp"
#include "rrt/serial_interval.hpp"
#include "rrt/synth.hpp"

#include <random>

namespace rrt::test {

struct TinyInstance {
  Matrix z, phiz;  // standardized counts and their convolution
  EpiGraph graph;
  Hyperparameters hyper;
};

/// Poisson counts around a few levels, standardized, on a path graph. Odd
/// seeds pin the outliers; some instances get a zero patch.
inline TinyInstance tiny_instance(std::uint64_t seed, int D, int T) {
  std::mt19937_64 eng(splitmix64(seed));
  std::uniform_real_distribution<double> level(5.0, 40.0);
  Matrix z(D, T);
  for (int d = 0; d < D; ++d) {
    const double base = level(eng);
    for (int t = 0; t < T; ++t) z(d, t) = static_cast<double>(poisson_sample(eng, base * (1.0 + 0.03 * t)));
  }
  if (seed % 3 == 0) z.block(0, 0, 1, std::min(3, T)).setZero();
  auto [zs, alpha] = standardize(z);
  TinyInstance inst{zs, convolve_past(zs, discretize_gamma()), EpiGraph(D), {}};
  std::vector<EpiGraph::Edge> edges;
  for (int d = 0; d + 1 < D; ++d) edges.emplace_back(d, d + 1);
  inst.graph = EpiGraph(D, edges);
  inst.hyper.lambda_t = 3.5;
  inst.hyper.lambda_s = D > 1 ? 0.1 : 0.0;
  inst.hyper.lambda_o = seed % 2 ? kInf : 0.025;
  return inst;
}

}  // namespace rrt::test
