#include <cmath>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "wkb/phase.hpp"

using wkb::CoefficientModel;
using wkb::PhaseMode;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int n : {1, 3, 6, 12}) {
    const wkb::GaussLegendre g(n);
    for (int deg = 0; deg < 2 * n; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(s, exact, 1e-14) << n << ' ' << deg;
    }
  }
  EXPECT_THROW(wkb::GaussLegendre(0), wkb::ConfigError);
}

TEST(PhaseMode, Parse) {
  EXPECT_EQ(PhaseMode::parse("analytic"), PhaseMode::analytic());
  EXPECT_EQ(PhaseMode::parse("gl:6"), PhaseMode::quadrature(6));
  EXPECT_EQ(PhaseMode::parse("gl"), PhaseMode::quadrature(6));
  EXPECT_EQ(PhaseMode::parse("gl:6").gamma(), 12.0);
  EXPECT_TRUE(std::isinf(PhaseMode::analytic().gamma()));
  for (const char* bad : {"gl:0", "gl:x", "simpson", "gl:65"}) EXPECT_THROW(PhaseMode::parse(bad), wkb::ConfigError);
}

TEST(PhaseIncrement, ConstantCoefficient) {
  const auto m = CoefficientModel::constant(4.0);
  EXPECT_DOUBLE_EQ(wkb::phase_increment(m, 0.1, 0.0, 0.5), 1.0);
  EXPECT_NEAR(wkb::phase_increment(m, 0.1, 0.0, 0.5, PhaseMode::quadrature(6)), 1.0, 1e-15);
}

TEST(PhaseIncrement, IntervalChecked) {
  const auto m = CoefficientModel::affine_squared();
  EXPECT_THROW(wkb::phase_increment(m, 0.1, 0.5, 0.5), wkb::ConfigError);
  EXPECT_THROW(wkb::phase_increment(m, 0.1, 0.5, 1.5), wkb::ConfigError);
  EXPECT_THROW(wkb::phase_increment(m, 0.1, -0.5, 0.5), wkb::ConfigError);
}

TEST(PhaseIncrement, ExpressionModelNeedsQuadrature) {
  const auto m = CoefficientModel::from_expression("1+x");
  EXPECT_THROW(wkb::phase_increment(m, 0.1, 0.0, 0.5), wkb::ConfigError);
  // int_0^1 sqrt(1+x) = (2/3)(2^{3/2} - 1); b = -(5/32)(1+x)^{-5/2}.
  const double smooth = (2.0 / 3.0) * (std::pow(2.0, 1.5) - 1.0);
  const double corr = (5.0 / 32.0) * (2.0 / 3.0) * (1.0 - std::pow(2.0, -1.5));
  const double eps = 0.1;
  const auto t = wkb::build_phase_table(m, eps, 64, PhaseMode::quadrature(6));
  EXPECT_NEAR(t.phi.back(), smooth + eps * eps * corr, 1e-14);
}

TEST(PhaseIncrement, NegativePhaseDerivativeRejected) {
  const auto m = CoefficientModel::from_expression("0.01/(1+x)^2");
  EXPECT_THROW(wkb::phase_increment(m, 0.5, 0.0, 0.5, PhaseMode::quadrature(6)), wkb::PhaseValidityError);
}

TEST(PhaseTable, EndValueAndAgreement) {
  const auto m = CoefficientModel::affine_squared();
  for (double eps : {1e-1, 1e-2, 1e-4}) {
    const auto a = wkb::build_phase_table(m, eps, 1024);
    EXPECT_NEAR(a.phi.back(), oracle::affine_squared_phase_end(eps), 1e-14);
    for (int n : {16, 256, 1024}) {
      const auto x = wkb::build_phase_table(m, eps, n);
      const auto g = wkb::build_phase_table(m, eps, n, PhaseMode::quadrature(6));
      for (std::size_t i = 0; i < x.phi.size(); ++i) EXPECT_NEAR(x.phi[i], g.phi[i], 1e-13);
    }
  }
}

TEST(PhaseTable, Structure) {
  const auto t = wkb::build_phase_table(CoefficientModel::affine_squared(), 0.01, 8);
  ASSERT_EQ(t.grid.size(), 9U);
  ASSERT_EQ(t.increments.size(), 8U);
  EXPECT_EQ(t.grid.front(), 0.0);
  EXPECT_EQ(t.grid.back(), 1.0);
  EXPECT_EQ(t.phi.front(), 0.0);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_GT(t.phi[i + 1], t.phi[i]);
  EXPECT_DOUBLE_EQ(t.h(), 0.125);
  EXPECT_THROW(wkb::build_phase_table(CoefficientModel::affine_squared(), 0.01, 0), wkb::ConfigError);
}
