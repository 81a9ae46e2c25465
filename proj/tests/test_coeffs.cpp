#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "wkb/coeffs.hpp"

using wkb::CoefficientModel;

namespace {

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

}  // namespace

TEST(EvalB, ConstantIsZero) {
  const auto m = CoefficientModel::constant(1.0);
  for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(wkb::eval_b(m, x, 0), 0.0);
}

TEST(EvalB, AffineSquaredClosedForm) {
  const auto m = CoefficientModel::affine_squared();
  EXPECT_NEAR(wkb::eval_b(m, 0.5, 0), -0.375, 1e-15);
  EXPECT_NEAR(wkb::eval_b(m, 0.5, 1), 1.125, 1e-14);
}

TEST(EvalB, MatchesSymbolicOracle) {
  const auto m = CoefficientModel::affine_squared();
  for (double x : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    const auto o = oracle::affine_squared(x, 0.0);
    for (int k = 0; k <= 5; ++k) EXPECT_LT(rel(wkb::eval_b(m, x, k), o.b_derivs[k]), 1e-13) << x << ' ' << k;
  }
}

TEST(EvalB, FiniteDifferencesConvergeAtSecondOrder) {
  const auto m = CoefficientModel::from_expression("1 + x^2/3 + 0.1*sin(3*x)");
  const double x = 0.45;
  for (int k = 1; k <= 4; ++k) {
    const double exact = wkb::eval_b(m, x, k);
    auto fd = [&](double d) { return (wkb::eval_b(m, x + d, k - 1) - wkb::eval_b(m, x - d, k - 1)) / (2 * d); };
    const double e1 = std::abs(fd(1e-2) - exact);
    const double e2 = std::abs(fd(5e-3) - exact);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1) << k;
  }
}

TEST(EvalB, DerivativeOrderChecks) {
  const auto m = CoefficientModel::from_expression("1 + x", 3);
  EXPECT_NO_THROW(wkb::eval_b(m, 0.5, 1));
  EXPECT_THROW(wkb::eval_b(m, 0.5, 2), wkb::ConfigError);
  EXPECT_THROW(wkb::eval_b(CoefficientModel::affine_squared(), 1.5, 0), wkb::ConfigError);
  EXPECT_THROW(wkb::eval_b(CoefficientModel::affine_squared(), -0.1, 0), wkb::ConfigError);
}

TEST(CoefficientModel, PolynomialDerivativesVanishAboveDegree) {
  const auto m = CoefficientModel::affine_squared();
  for (int k = 3; k <= m.max_order(); ++k) EXPECT_EQ(m.eval(0.3, k), 0.0);
  const auto e = CoefficientModel::from_expression("2 + x^3");
  for (int k = 4; k <= e.max_order(); ++k) EXPECT_EQ(e.eval(0.3, k), 0.0);
}

TEST(CoefficientModel, FiniteDifferenceCheck) {
  const auto m = CoefficientModel::from_expression("exp(x) + 1");
  for (int k = 0; k < 6; ++k) {
    const double d = 1e-3;
    const double fd = (m.eval(0.5 + d, k) - m.eval(0.5 - d, k)) / (2 * d);
    EXPECT_NEAR(fd, m.eval(0.5, k + 1), 1e-6);
  }
}

TEST(CoefficientModel, TurningPointRejected) {
  EXPECT_THROW(CoefficientModel::from_expression("x - 0.5"), wkb::ConfigError);
  EXPECT_THROW(CoefficientModel::constant(0.0), wkb::ConfigError);
  EXPECT_NO_THROW(CoefficientModel::from_expression("0.5 + x"));
}

TEST(MakeProblem, Names) {
  EXPECT_EQ(wkb::make_problem("affine-squared").name(), "affine-squared");
  EXPECT_EQ(wkb::make_problem("constant(4)").eval(0.2, 0), 4.0);
  EXPECT_EQ(wkb::make_problem("constant").eval(0.2, 0), 1.0);
  EXPECT_NEAR(wkb::make_problem("expr:1+x").eval(0.2, 0), 1.2, 1e-15);
  EXPECT_THROW(wkb::make_problem("constant(abc)"), wkb::ConfigError);
}

TEST(BChain, ConstantPropagatesZero) {
  const auto c = wkb::eval_b_chain(CoefficientModel::constant(4.0), 0.1, 0.3, 3);
  ASSERT_EQ(c.size(), 4U);
  for (double v : c) EXPECT_EQ(v, 0.0);
}

TEST(BChain, EpsZeroClosedForm) {
  const auto c = wkb::eval_b_chain(CoefficientModel::affine_squared(), 0.0, 0.5, 0);
  EXPECT_NEAR(c[0], -0.1875, 1e-16);
}

TEST(BChain, MatchesSymbolicOracle) {
  const auto m = CoefficientModel::affine_squared();
  for (double eps : {0.0, 0.01, 0.05, 0.3}) {
    for (double x : {0.0, 0.25, 0.5, 1.0}) {
      const auto c = wkb::eval_b_chain(m, eps, x, 5);
      const auto o = oracle::affine_squared(x, eps);
      for (int p = 0; p <= 5; ++p) EXPECT_LT(rel(c[p], o.chain[p]), 1e-12) << eps << ' ' << x << ' ' << p;
    }
  }
  const auto c = wkb::eval_b_chain(m, 0.01, 0.5, 0);
  EXPECT_NEAR(c[0], -0.1875, 1e-3);
  EXPECT_NEAR(c[0], oracle::affine_squared(0.5, 0.01).chain[0], 1e-12);
}

TEST(BChain, VanishingPhaseDerivativeIsReported) {
  // b = 1.25/(1+x) and sqrt(a) = 0.1/(1+x): phi' < 0 for eps = 0.5.
  const auto m = CoefficientModel::from_expression("0.01/(1+x)^2");
  EXPECT_THROW(wkb::eval_b_chain(m, 0.5, 0.5, 2), wkb::PhaseValidityError);
  EXPECT_NO_THROW(wkb::eval_b_chain(m, 0.05, 0.5, 2));
  EXPECT_THROW(wkb::eval_b_chain(CoefficientModel::from_expression("1+x", 3), 0.1, 0.5, 2), wkb::ConfigError);
}

TEST(Q3Aux, ConstantAllZero) {
  const auto a = wkb::eval_q3_aux(CoefficientModel::constant(1.0), 0.1, 0.6);
  const auto& q = a.q3;
  for (double v : {q.c0, q.c1, q.d0, q.d1, q.e0, q.f0, q.f1, q.g0, q.kappa0, q.l0}) EXPECT_EQ(v, 0.0);
  for (double v : a.b_chain) EXPECT_EQ(v, 0.0);
}

TEST(Q3Aux, EpsZeroClosedForm) {
  const auto a = wkb::eval_q3_aux(CoefficientModel::affine_squared(), 0.0, 0.5);
  EXPECT_NEAR(a.q3.c0, -27.0 / 2048.0, 1e-17);
}

TEST(Q3Aux, MatchesSymbolicOracle) {
  const auto m = CoefficientModel::affine_squared();
  for (auto [eps, x] : {std::pair{0.05, 0.25}, {0.0, 0.5}, {0.2, 0.0}, {0.01, 1.0}}) {
    const auto q = wkb::eval_q3_aux(m, eps, x).q3;
    const auto o = oracle::affine_squared(x, eps);
    EXPECT_LT(rel(q.c0, o.c0), 1e-12);
    EXPECT_LT(rel(q.c1, o.c1), 1e-12);
    EXPECT_LT(rel(q.d0, o.d0), 1e-12);
    EXPECT_LT(rel(q.d1, o.d1), 1e-12);
    EXPECT_LT(rel(q.e0, o.e0), 1e-12);
    EXPECT_LT(rel(q.f0, o.f0), 1e-12);
    EXPECT_LT(rel(q.f1, o.f1), 1e-12);
    EXPECT_LT(rel(q.g0, o.g0), 1e-12);
    EXPECT_LT(rel(q.kappa0, o.kappa0), 1e-12);
    EXPECT_LT(rel(q.l0, o.l0), 1e-12);
  }
  EXPECT_THROW(wkb::eval_q3_aux(CoefficientModel::from_expression("1+x", 6), 0.1, 0.5), wkb::ConfigError);
}

TEST(Q3Aux, ChainConsistencyOnRandomSamples) {
  const auto m = CoefficientModel::from_expression("1 + x^2 + 0.2*cos(5*x)");
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> ue(-4.0, -1.0);
  const double ulp = std::numeric_limits<double>::epsilon();
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng);
    const double eps = std::pow(10.0, ue(rng));
    const auto n = wkb::evaluate_node(m, eps, x, 5, true);
    const double two_phip = 2.0 * n.phi_prime;
    auto close = [&](double lhs, double rhs) { return std::abs(lhs - rhs) <= 4 * ulp * std::abs(rhs); };
    EXPECT_TRUE(close(n.aux.d0 * two_phip, n.aux.c0)) << x << ' ' << eps;
    EXPECT_TRUE(close(n.aux.f0 * two_phip, n.chain[0])) << x << ' ' << eps;
    EXPECT_TRUE(close(n.aux.g0 * two_phip, n.chain[1])) << x << ' ' << eps;
  }
}
