#include "rrt/operators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rrt;

namespace {

Hyperparameters hyper(double lt, double ls, double lo) {
  Hyperparameters h;
  h.lambda_t = lt;
  h.lambda_s = ls;
  h.lambda_o = lo;
  return h;
}

DualVariable random_dual(std::mt19937_64& rng, Eigen::Index D, Eigen::Index T, Eigen::Index E, double s = 3.0) {
  return {test::random_matrix(rng, D, T - 2, -s, s), test::random_matrix(rng, D, T, -s, s),
          test::random_matrix(rng, E, T, -s, s), test::random_matrix(rng, D, T, -s, s)};
}

}  // namespace

TEST(EpiGraph, Validation) {
  EXPECT_THROW(EpiGraph(3, {{0, 0}}), GraphError);
  EXPECT_THROW(EpiGraph(3, {{0, 1}, {1, 0}}), GraphError);
  EXPECT_THROW(EpiGraph(3, {{0, 3}}), GraphError);
  const EpiGraph g(4, {{2, 0}, {1, 3}});
  EXPECT_EQ(g.num_edges(), 2);
  EXPECT_EQ(g.edges()[0], (EpiGraph::Edge{0, 2}));
  EXPECT_EQ(g.max_degree(), 1);
}

TEST(D2, Examples) {
  Matrix affine(1, 6);
  for (int t = 0; t < 6; ++t) affine(0, t) = 2.0 + 0.7 * t;
  EXPECT_LT(d2_apply(affine).abs().maxCoeff(), 1e-14);
  Matrix bump(1, 3);
  bump << 0, 1, 0;
  EXPECT_EQ(d2_apply(bump)(0, 0), -1.0);
  EXPECT_TRUE((d2_apply(Matrix::Constant(2, 5, 3.0)) == 0.0).all());
  EXPECT_THROW(d2_apply(Matrix::Zero(1, 2)), ShapeError);

  Matrix q(1, 1);
  q << 2.0;
  const Matrix adj = d2_adjoint(q, 3);
  EXPECT_EQ(adj(0, 0), 1.0);
  EXPECT_EQ(adj(0, 1), -2.0);
  EXPECT_EQ(adj(0, 2), 1.0);
}

TEST(GraphOperator, Examples) {
  const EpiGraph g(2, {{0, 1}});
  Matrix r(2, 1);
  r << 1, 4;
  EXPECT_EQ(graph_apply(r, g)(0, 0), -3.0);
  EXPECT_TRUE((graph_apply(Matrix::Constant(2, 4, 1.5), g) == 0.0).all());
  EXPECT_EQ(graph_apply(r, EpiGraph(2)).rows(), 0);
  EXPECT_THROW(graph_apply(Matrix::Zero(3, 4), g), GraphError);
}

TEST(LOperator, DegenerateWeights) {
  std::mt19937_64 rng(1);
  const EpiGraph g(3, {{0, 1}, {1, 2}});
  const auto h = hyper(0, 0, 1);
  const Matrix r = test::random_matrix(rng, 3, 6, -1, 1), o = test::random_matrix(rng, 3, 6, -1, 1);
  const auto q = l_apply(r, o, g, h);
  EXPECT_TRUE((q.q1 == 0.0).all());
  EXPECT_TRUE((q.q2 == r).all());
  EXPECT_TRUE((q.q3 == 0.0).all());
  EXPECT_TRUE((q.q4 == o).all());
  const auto y = random_dual(rng, 3, 6, 2);
  auto [ar, ao] = l_adjoint(y, g, h);
  EXPECT_TRUE((ar == y.q2).all());
  EXPECT_TRUE((ao == y.q4).all());
}

TEST(LOperatorProperty, AdjointIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dd(1, 10), tt(3, 50);
  std::uniform_real_distribution<double> lam(0.0, 5.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int D = dd(rng), T = tt(rng);
    const EpiGraph g(D, test::random_edges(rng, D, 0.4));
    const auto h = hyper(lam(rng), lam(rng), lam(rng));
    const Matrix r = test::random_matrix(rng, D, T, -2, 2), o = test::random_matrix(rng, D, T, -2, 2);
    const auto y = random_dual(rng, D, T, g.num_edges());
    const double lhs = l_apply(r, o, g, h).dot(y);
    auto [ar, ao] = l_adjoint(y, g, h);
    const double rhs = (r * ar).sum() + (o * ao).sum();
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs))) << "rep " << rep;

    // Per-block identities.
    const Matrix q1 = test::random_matrix(rng, D, T - 2, -1, 1);
    EXPECT_NEAR((d2_apply(r) * q1).sum(), (r * d2_adjoint(q1, T)).sum(), 1e-10 * (1 + std::abs((d2_apply(r) * q1).sum())));
    const Matrix q3 = test::random_matrix(rng, g.num_edges(), T, -1, 1);
    const double gl = (graph_apply(r, g) * q3).sum();
    EXPECT_NEAR(gl, (r * graph_adjoint(q3, g)).sum(), 1e-10 * (1 + std::abs(gl)));
  }
}

TEST(PowerIteration, Examples) {
  auto id = [](const Vector& x) { return x; };
  EXPECT_NEAR(power_iteration(id, id, 5).value, 1.0, 1e-12);

  auto diag = [](const Vector& x) {
    Vector y = x;
    y[0] *= 3.0;
    return y;
  };
  EXPECT_NEAR(power_iteration(diag, diag, 2).value, 3.0, 1e-8);

  const int T = 200;
  auto apply = [&](const Vector& x) {
    Matrix r = Eigen::Map<const Matrix>(x.data(), 1, T);
    Matrix y = d2_apply(r);
    return Vector(Eigen::Map<const Vector>(y.data(), T - 2));
  };
  auto adjoint = [&](const Vector& y) {
    Matrix q = Eigen::Map<const Matrix>(y.data(), 1, T - 2);
    Matrix x = d2_adjoint(q, T);
    return Vector(Eigen::Map<const Vector>(x.data(), T));
  };
  const auto res = power_iteration(apply, adjoint, T, 1e-12, 200000);
  EXPECT_GT(res.value, 1.9);
  EXPECT_LE(res.value, 2.0);
}

TEST(PowerIteration, ReportsNonConvergence) {
  auto id = [](const Vector& x) {
    Vector y = x;
    y[0] *= 1.0001;
    return y;
  };
  const auto res = power_iteration(id, id, 50, 1e-15, 3);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 3);
}

TEST(NormBound, Examples) {
  EXPECT_DOUBLE_EQ(op_norm_bound(hyper(3.5, 0, 0.025)), 50.0);
  EXPECT_DOUBLE_EQ(op_norm_bound(hyper(0, 0, 2)), 4.0);
  EXPECT_DOUBLE_EQ(op_norm_bound(hyper(1, 2, 0.1), 4.0, 3.0), 4.0 + 12.0 + 1.0);
  EXPECT_DOUBLE_EQ(op_norm_bound(hyper(0, 0, kInf)), 1.0);
}

TEST(NormBound, GraphNormBelowTwiceMaxDegree) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const int D = std::uniform_int_distribution<int>(2, 30)(rng);
    const EpiGraph g(D, test::random_edges(rng, D, 0.3));
    if (g.num_edges() == 0) continue;
    const double s = graph_norm_sq(g);
    EXPECT_LE(s, 2.0 * g.max_degree() + 1e-12);
    EXPECT_GE(s, g.max_degree() + 1.0 - 1e-6);  // star lower bound: deg + 1
  }
}

// ---------------------------------------------------------------------------
// Prox operators versus numeric minimization.

TEST(Prox, SoftThresholdExamples) {
  EXPECT_DOUBLE_EQ(prox_soft_threshold(3, 1), 2);
  EXPECT_NEAR(test::numeric_prox([](double x) { return std::abs(x); }, 3, 1, -10, 10), 2, 1e-7);
  EXPECT_EQ(prox_soft_threshold(-0.5, 1), 0);
  EXPECT_EQ(prox_soft_threshold(0, 2), 0);
}

TEST(Prox, NonnegExamples) {
  EXPECT_EQ(prox_nonneg(-2), 0);
  EXPECT_EQ(prox_nonneg(3), 3);
  for (double q : {-1.5, 0.0, 2.5}) EXPECT_EQ(prox_nonneg(prox_nonneg(q)), prox_nonneg(q));
}

TEST(Prox, KlScalarExamples) {
  EXPECT_DOUBLE_EQ(prox_kl_scalar(2, 0, 1), 1);
  EXPECT_DOUBLE_EQ(prox_kl_scalar(1, 1, 1), 1);
  EXPECT_DOUBLE_EQ(prox_kl_scalar(0, 4, 2), 2);
  for (auto [p, z, tau] : {std::tuple{2.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, {0.0, 4.0, 2.0}}) {
    const double x = test::numeric_prox([z = z](double v) { return test::kl_reference(z, v); }, p, tau, 0.0, 20.0);
    EXPECT_NEAR(prox_kl_scalar(p, z, tau), x, 1e-7);
  }
  EXPECT_GT(prox_kl_scalar(-1e6, 1e-6, 1e-3), 0.0);
}

TEST(Prox, FExamples) {
  EXPECT_EQ(prox_f(3, -2, 0, 0, 0.7), (std::pair<double, double>{0, 0}));
  const auto [r, o] = prox_f(1.3, 0.4, 2.0, 0.0, 0.5);
  EXPECT_EQ(r, 1.3);
  EXPECT_DOUBLE_EQ(o, prox_kl_scalar(0.4, 2.0, 0.5));

  const auto got = prox_f(1, 0, 2, 1, 0.5);
  const auto ref = test::numeric_prox_f(1, 0, 2, 1, 0.5);
  EXPECT_NEAR(got.first, ref.first, 1e-6);
  EXPECT_NEAR(got.second, ref.second, 1e-6);
}

TEST(Prox, FPinnedMatchesNumericMinimization) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-4, 4), zz(0, 8), pz(0.05, 3), tt(0.01, 2);
  for (int i = 0; i < 200; ++i) {
    const double r = u(rng), z = zz(rng), phiz = pz(rng), tau = tt(rng);
    const double ref = test::numeric_prox([&](double x) { return test::kl_reference(z, x * phiz); }, r, tau, 0.0, 60.0);
    EXPECT_NEAR(prox_f_pinned(r, z, phiz, tau), ref, 1e-6);
  }
  EXPECT_EQ(prox_f_pinned(-3.0, 2.0, 0.0, 0.5), -3.0);
  EXPECT_EQ(prox_f_pinned(-3.0, 0.0, 0.0, 0.5), 0.0);
}

TEST(Prox, HConjExamples) {
  DualVariable q = DualVariable::zeros(1, 3, 0);
  q.q1(0, 0) = 0.5;
  q.q2(0, 0) = -3;
  q.q2(0, 1) = 3;
  q.q4(0, 2) = 7;
  for (double sigma : {0.1, 1.0, 10.0}) {
    const auto p = prox_h_conj(q, sigma);
    EXPECT_EQ(p.q1(0, 0), 0.5);
    EXPECT_EQ(p.q2(0, 0), -3);
    EXPECT_EQ(p.q2(0, 1), 0);
    EXPECT_EQ(p.q4(0, 2), 1);
  }
  q.q1(0, 0) = 7;
  EXPECT_EQ(prox_h_conj(q, 0.3).q1(0, 0), 1);
}

TEST(ProxProperty, MoreauDecomposition) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> sg(0.01, 10);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = random_dual(rng, 3, 7, 2, 5.0);
    const double sigma = sg(rng);
    const auto a = prox_h_conj(x, sigma);
    auto xs = x;
    xs *= 1.0 / sigma;
    auto b = prox_h_scaled(xs, sigma);
    b *= sigma;
    auto sum = a;
    sum += b;
    auto diff = sum;
    auto neg = x;
    neg *= -1.0;
    diff += neg;
    EXPECT_LE(std::sqrt(diff.squared_norm()), 1e-12 * std::max(1.0, std::sqrt(x.squared_norm())));
  }
}

TEST(ProxProperty, FirmNonexpansiveness) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5), zz(0, 8), pz(0, 3), tt(0.01, 2);
  for (int i = 0; i < 1000; ++i) {
    const double z = zz(rng), phiz = pz(rng), tau = tt(rng), s = std::abs(u(rng));
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    auto dist = [](double x0, double y0, double x1, double y1) { return std::hypot(x0 - x1, y0 - y1); };
    EXPECT_LE(std::abs(prox_soft_threshold(a, s) - prox_soft_threshold(b, s)), std::abs(a - b) + 1e-15);
    EXPECT_LE(std::abs(prox_nonneg(a) - prox_nonneg(b)), std::abs(a - b) + 1e-15);
    EXPECT_LE(std::abs(prox_kl_scalar(a, z, tau) - prox_kl_scalar(b, z, tau)), std::abs(a - b) + 1e-12);
    const auto p = prox_f(a, b, z, phiz, tau), q = prox_f(c, d, z, phiz, tau);
    EXPECT_LE(dist(p.first, p.second, q.first, q.second), dist(a, b, c, d) + 1e-12);
  }
}
