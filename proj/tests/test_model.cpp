#include "rrt/model.hpp"
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

// A random feasible (R, O) for the given data: R >= 0, P >= 0, forced zeros.
std::pair<Matrix, Matrix> random_feasible(std::mt19937_64& rng, const Matrix& z, const Matrix& phiz) {
  Matrix r = test::random_matrix(rng, z.rows(), z.cols(), 0.0, 3.0);
  Matrix o = test::random_matrix(rng, z.rows(), z.cols(), -1.0, 2.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z.data()[i] == 0.0 && phiz.data()[i] == 0.0) {
      r.data()[i] = o.data()[i] = 0.0;
    } else {
      const double p = r.data()[i] * phiz.data()[i] + o.data()[i];
      if (p <= 0.0) o.data()[i] += 0.1 - p;
    }
  }
  return {r, o};
}

}  // namespace

TEST(CountMatrix, Invariants) {
  EXPECT_THROW(CountMatrix(Matrix::Zero(1, 2), {}, make_date(2020, 1, 1)), ShapeError);
  EXPECT_THROW(CountMatrix(Matrix::Zero(0, 5), {}, make_date(2020, 1, 1)), ShapeError);
  EXPECT_THROW(CountMatrix(Matrix::Zero(2, 5), {"a"}, make_date(2020, 1, 1)), ShapeError);
  const CountMatrix z(Matrix::Zero(2, 5), {}, make_date(2020, 2, 28));
  EXPECT_EQ(z.territories()[1], "2");
  EXPECT_EQ(format_iso_date(z.date(2)), "2020-03-01");
}

TEST(KlScalar, Examples) {
  EXPECT_EQ(kl_scalar(0, 3), 3);
  EXPECT_EQ(kl_scalar(5, 5), 0);
  EXPECT_NEAR(kl_scalar(2, 1), 2 * std::log(2.0) - 1, 1e-15);
  EXPECT_NEAR(kl_scalar(2, 1), 0.3862944, 1e-7);
  EXPECT_EQ(kl_scalar(1, 0), kInf);
  EXPECT_THROW(kl_scalar(-1, 1), DomainError);
  EXPECT_THROW(kl_scalar(1, -1), DomainError);
}

TEST(DataFidelity, Examples) {
  const Matrix zero = Matrix::Zero(2, 4);
  EXPECT_EQ(data_fidelity(zero, zero, zero, zero), 0.0);
  Matrix r = zero;
  r(1, 2) = 0.5;
  EXPECT_EQ(data_fidelity(r, zero, zero, zero), kInf);

  Matrix one(1, 1), two(1, 1);
  one << 1;
  two << 2;
  EXPECT_EQ(data_fidelity(one, one, two, one), 0.0);
  Matrix neg(1, 1);
  neg << -3;
  EXPECT_EQ(data_fidelity(one, neg, two, one), kInf);
}

TEST(Objective, PenaltiesVanishOnAffineConstantSignal) {
  std::mt19937_64 rng(1);
  const EpiGraph g(3, {{0, 1}, {1, 2}});
  const Matrix z = test::random_matrix(rng, 3, 8, 1.0, 5.0), phiz = test::random_matrix(rng, 3, 8, 1.0, 5.0);
  Matrix r(3, 8);
  for (int d = 0; d < 3; ++d)
    for (int t = 0; t < 8; ++t) r(d, t) = 0.5 + 0.1 * t;
  const Matrix o = Matrix::Zero(3, 8);
  EXPECT_NEAR(objective(r, o, z, phiz, g, hyper(3.5, 0.2, 0.025)), data_fidelity(r, o, z, phiz), 1e-12);
  r(1, 3) = -0.01;
  EXPECT_EQ(objective(r, o, z, phiz, g, hyper(3.5, 0.2, 0.025)), kInf);
}

TEST(Objective, PinnedOutliers) {
  Matrix z(1, 3), phiz(1, 3);
  z << 2, 1, 1;
  phiz << 0, 1, 1;
  const Matrix r = Matrix::Ones(1, 3), o = Matrix::Zero(1, 3);
  const EpiGraph g(1);
  const auto h = hyper(1, 0, kInf);
  // The first entry is unreachable without outliers and does not enter the sum.
  EXPECT_NEAR(objective(r, o, z, phiz, g, h), 0.0, 1e-15);
  Matrix o2 = o;
  o2(0, 1) = 0.1;
  EXPECT_EQ(objective(r, o2, z, phiz, g, h), kInf);
}

TEST(ObjectiveProperty, ScalingIdentity) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const int D = 3, T = 10;
    const EpiGraph g(D, {{0, 1}, {0, 2}});
    const Matrix z = test::random_matrix(rng, D, T, 0.0, 10.0), phiz = test::random_matrix(rng, D, T, 0.1, 10.0);
    auto [r, o] = random_feasible(rng, z, phiz);
    const auto h = hyper(3.5, 0.3, 0.025);
    for (double a : {0.1, 10.0}) {
      const double lhs = objective(r, a * o, a * z, a * phiz, g, hyper(a * 3.5, a * 0.3, 0.025));
      const double rhs = a * objective(r, o, z, phiz, g, h);
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(ObjectiveProperty, JointConvexityAndLowerBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int D = 2, T = 7;
    const EpiGraph g(D, {{0, 1}});
    Matrix z = test::random_matrix(rng, D, T, 0.0, 6.0), phiz = test::random_matrix(rng, D, T, 0.0, 6.0);
    z(0, 0) = phiz(0, 0) = 0.0;  // one forced zero
    const auto [r1, o1] = random_feasible(rng, z, phiz);
    const auto [r2, o2] = random_feasible(rng, z, phiz);
    const double t = th(rng);
    const Matrix rm = t * r1 + (1 - t) * r2, om = t * o1 + (1 - t) * o2;
    const double f1 = data_fidelity(r1, o1, z, phiz), f2 = data_fidelity(r2, o2, z, phiz);
    EXPECT_LE(data_fidelity(rm, om, z, phiz), t * f1 + (1 - t) * f2 + 1e-9);
    const auto h = hyper(3.5, 0.5, 0.025);
    const double j1 = objective(r1, o1, z, phiz, g, h), j2 = objective(r2, o2, z, phiz, g, h);
    EXPECT_LE(objective(rm, om, z, phiz, g, h), t * j1 + (1 - t) * j2 + 1e-9);
    EXPECT_GE(j1, 0.0);
    EXPECT_GE(f1, 0.0);
  }
}

TEST(ObjectiveProperty, AllOnesReferenceIsFeasible) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix z = test::random_matrix(rng, 2, 9, 0.0, 5.0), phiz = test::random_matrix(rng, 2, 9, 0.01, 5.0);
    EXPECT_TRUE(std::isfinite(
        objective(Matrix::Ones(2, 9), Matrix::Zero(2, 9), z, phiz, EpiGraph(2, {{0, 1}}), hyper(3.5, 0.002, 0.025))));
  }
}

TEST(Mle, Examples) {
  Matrix z(1, 4), phiz(1, 4);
  z << 20, 0, 0, 3;
  phiz << 10, 5, 0, 0;
  const Matrix m = mle(z, phiz);
  EXPECT_EQ(m(0, 0), 2.0);
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(m(0, 2), 0.0);
  EXPECT_TRUE(std::isnan(m(0, 3)));
  EXPECT_EQ(count_undefined(m), 1);
}

TEST(Mle, ConstantCountsGiveOne) {
  const CountMatrix z(Matrix::Constant(1, 120, 40.0), {}, make_date(2020, 1, 1));
  const Matrix m = mle(z, discretize_gamma());
  for (int t = 30; t < 120; ++t) EXPECT_NEAR(m(0, t), 1.0, 1e-12);
}

TEST(MleProperty, MinimizesKlOverNonnegativeR) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> zz(0, 50), pz(0.1, 30);
  for (int i = 0; i < 200; ++i) {
    Matrix z(1, 1), phiz(1, 1);
    z << zz(rng);
    phiz << pz(rng);
    const double ref = test::golden_min([&](double r) { return test::kl_reference(z(0, 0), r * phiz(0, 0)); }, 0.0, 1000.0);
    EXPECT_NEAR(mle(z, phiz)(0, 0), ref, 1e-7 * (1.0 + ref));
  }
}

TEST(SlidingMedian, Examples) {
  Matrix c = Matrix::Constant(1, 10, 4.0);
  auto res = sliding_median_filter(c);
  EXPECT_TRUE((res.clean == c).all());
  EXPECT_TRUE((res.outliers == 0.0).all());

  Matrix spike(1, 7);
  spike << 10, 10, 10, 100, 10, 10, 10;
  res = sliding_median_filter(spike, 7, 2.5);
  EXPECT_EQ(res.clean(0, 3), 10.0);
  EXPECT_EQ(res.outliers(0, 3), 90.0);
  EXPECT_EQ(res.replaced, 1);

  Matrix zero = Matrix::Zero(2, 9);
  res = sliding_median_filter(zero);
  EXPECT_TRUE((res.clean == 0.0).all());
  EXPECT_EQ(res.replaced, 0);

  EXPECT_THROW(sliding_median_filter(c, 6), ParameterError);
  EXPECT_THROW(sliding_median_filter(c, 1), ParameterError);
}

TEST(SlidingMedianProperty, CleanPlusOutliersReconstructs) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    const Matrix z = test::random_matrix(rng, 3, 40, -10, 100).round();
    const auto res = sliding_median_filter(z);
    EXPECT_TRUE((res.clean + res.outliers == z).all());
  }
}

TEST(Standardize, Examples) {
  Matrix z(2, 3);
  z << 0, 2, 4, 0, 0, 0;
  auto [s, alpha] = standardize(z);
  EXPECT_NEAR(alpha[0], 1.632993, 1e-6);
  EXPECT_NEAR(alpha[0], std::sqrt(8.0 / 3.0), 1e-15);
  EXPECT_EQ(alpha[1], 1.0);
  EXPECT_NEAR(s(0, 2), 4 / alpha[0], 1e-15);
  EXPECT_TRUE((s.row(1) == 0.0).all());

  auto [s2, alpha2] = standardize(Matrix(7.0 * z));
  EXPECT_LT((s2.row(0) - s.row(0)).abs().maxCoeff(), 1e-14);
}
