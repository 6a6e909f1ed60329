#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ibmexit/pde_checks.hpp"
#include "test_support.hpp"

using namespace ibmexit;
using namespace testing_support;

namespace {
constexpr double pi = std::numbers::pi;

const std::vector<BeamEigenpair>& pairs100() {
  static const auto p = beam_eigenvalues(100);
  return p;
}
}  // namespace

TEST(Beam, FirstRoots) {
  EXPECT_NEAR(beam_root(1), 4.7300407449, 1e-9);
  EXPECT_NEAR(beam_root(2), 7.8532046241, 1e-9);
  EXPECT_THROW(beam_root(0), DomainError);
}

TEST(Beam, RootsApproachHalfIntegers) {
  // alpha_k - (k + 1/2) pi ~ (-1)^{k+1} 2 e^{-(k+1/2) pi}
  for (int k : {3, 5, 10}) {
    const double gap = beam_root(k) - (k + 0.5) * pi;
    EXPECT_NEAR(gap, (k % 2 ? 2.0 : -2.0) * std::exp(-(k + 0.5) * pi), 1e-3 * std::exp(-(k + 0.5) * pi) + 1e-14) << k;
  }
  EXPECT_NEAR(beam_root(10) / (10.5 * pi), 1.0, 1e-12);
}

TEST(Beam, CharacteristicResidual) {
  const auto& p = pairs100();
  for (int k = 1; k <= 5; ++k) EXPECT_LT(p[k - 1].characteristic_residual(), 1e-10) << k;
  // rounding of alpha alone moves cos(alpha) by ~ eps alpha
  for (const auto& e : p) EXPECT_LT(e.scaled_residual(), 4e-16 * e.alpha) << e.k;
}

TEST(Beam, ClampedBoundary) {
  const double h = 1e-5;
  for (int k : {1, 2, 5, 20}) {
    const auto& e = pairs100()[k - 1];
    EXPECT_NEAR(beam_eigenfunction(e, 0.0), 0.0, 1e-10);
    EXPECT_NEAR(beam_eigenfunction(e, 1.0), 0.0, 1e-10);
    // zero slope: phi(h) ~ phi''(0) h^2 / 2 with |phi''(0)| ~ 2 alpha^2
    EXPECT_NEAR(beam_eigenfunction(e, h) / h, 0.0, 1.1 * e.alpha * e.alpha * h) << k;
    EXPECT_NEAR(beam_eigenfunction(e, 1.0 - h) / h, 0.0, 1.1 * e.alpha * e.alpha * h) << k;
    EXPECT_NEAR(beam_eigenfunction(e, 2 * h) / beam_eigenfunction(e, h), 4.0, 1e-2) << k;
  }
  EXPECT_THROW(beam_eigenfunction(pairs100()[0], 1.1), DomainError);
}

TEST(Beam, SatisfiesFourthOrderEquation) {
  const double h = 1e-2;
  for (int k : {1, 3}) {
    const auto& e = pairs100()[k - 1];
    for (double x : {0.3, 0.5, 0.71}) {
      auto f = [&](double y) { return beam_eigenfunction(e, y); };
      const double d4 = (f(x - 2 * h) - 4 * f(x - h) + 6 * f(x) - 4 * f(x + h) + f(x + 2 * h)) / std::pow(h, 4);
      EXPECT_NEAR(d4, e.lambda * f(x), 1e-2 * e.lambda) << k << " " << x;
    }
  }
}

TEST(Beam, NormalizedAndOrthogonal) {
  const auto& p = pairs100();
  for (int i : {1, 2, 5})
    for (int j : {1, 2, 5}) {
      const double ip = integrate(
          [&](double x) { return beam_eigenfunction(p[i - 1], x) * beam_eigenfunction(p[j - 1], x); }, 0.0, 1.0, 1e-12);
      EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-8) << i << "," << j;
    }
}

TEST(Beam, UniformlyBounded) {
  double sup = 0.0;
  for (const auto& e : pairs100())
    for (int i = 0; i <= 400; ++i) sup = std::max(sup, std::fabs(beam_eigenfunction(e, i / 400.0)));
  EXPECT_LT(sup, 3.0);
  EXPECT_GT(sup, 1.4);
}

TEST(Beam, OddModesIntegrateToZero) {
  const auto& p = pairs100();
  for (int k = 2; k <= 20; k += 2) EXPECT_NEAR(beam_eigenfunction_integral(p[k - 1]), 0.0, 1e-12) << k;
  for (int k = 1; k <= 19; k += 2) EXPECT_GT(std::fabs(beam_eigenfunction_integral(p[k - 1])), 1e-3) << k;
  // normalization ~ 2 e^{-alpha} once alpha is large
  EXPECT_NEAR(p[0].c / (2.0 * std::exp(-p[0].alpha)), 1.0, 1e-3);
}

TEST(GInterval, NearBoundaryIsSmall) {
  EXPECT_LT(g_interval(1.0, 1e-3), 0.02);
  EXPECT_LT(g_interval(1.0, 1e-3), g_interval(1.0, 1e-2));
  EXPECT_THROW(g_interval(0.0, 0.5), DomainError);
}

TEST(GInterval, Symmetric) {
  for (double x : {0.1, 0.3, 0.45})
    for (double t : {0.2, 2.0}) EXPECT_NEAR(g_interval(t, x), g_interval(t, 1.0 - x), 1e-10);
}

TEST(GInterval, MatchesMonteCarlo) {
  const std::vector<double> grid{1.0};
  for (double x : {0.2, 0.5}) {
    const auto m = ibm_survival_mc(interval(x), grid, 100000, 71, 2).points[0];
    EXPECT_NEAR(g_interval(1.0, x), m.value, 4 * *m.stderr_) << x;
  }
}

TEST(Laplace, ClosedFormCrossCheck) {
  const double q = laplace_g(1.0, 0.5).value;
  EXPECT_NEAR(q, laplace_g_closed_form(1.0, 0.5), 1e-9);
  EXPECT_NEAR(q, 0.05428004366, 1e-9);
}

TEST(Laplace, LargeLambdaLimit) {
  const double v = 1e3 * laplace_g_closed_form(1e3, 0.5);
  EXPECT_GT(v, 0.9);
  EXPECT_LT(v, 1.0);
}

TEST(Laplace, SymmetricAndLargerInTheMiddle) {
  for (double x : {0.1, 0.3}) EXPECT_NEAR(laplace_g_closed_form(1.0, x), laplace_g_closed_form(1.0, 1.0 - x), 1e-12);
  EXPECT_GT(laplace_g_closed_form(1.0, 0.5), laplace_g_closed_form(1.0, 0.1));
  EXPECT_THROW(laplace_g_closed_form(0.0, 0.5), DomainError);
}

TEST(Laplace, CompletelyMonotone) {
  // alternating signs of forward differences up to order 3 on an even lambda grid
  std::vector<double> v;
  for (int i = 0; i < 8; ++i) v.push_back(laplace_g_closed_form(0.5 + 0.5 * i, 0.4));
  for (int order = 1; order <= 3; ++order) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
    for (double d : v) EXPECT_GT(order % 2 ? -d : d, 0.0) << order;
  }
}

TEST(Spectral, ConvergesInK) {
  const auto& p = pairs100();
  const double a50 = spectral_g_hat(1.0, 0.5, 0.05, p, 50), a100 = spectral_g_hat(1.0, 0.5, 0.05, p, 100);
  EXPECT_NEAR(a50, a100, 1e-9);
  EXPECT_THROW(spectral_g_hat(1.0, 0.5, 0.05, p, 101), DomainError);
  EXPECT_THROW(spectral_g_hat(1.0, 0.5, 0.0, p, 10), DomainError);
}

TEST(Spectral, SmallDiffusivityLimit) {
  // a -> 0: every mode keeps 1/lambda, and sum (int phi_n) phi_n(x) = 1
  EXPECT_NEAR(spectral_g_hat(1.0, 0.5, 1e-12, pairs100(), 100), 1.0, 2e-2);
}

TEST(Spectral, DoesNotMatchIbmTransform) {
  const double target = laplace_g_closed_form(1.0, 0.5);
  double best = std::numeric_limits<double>::infinity();
  for (double a : logspace(1e-3, 1e3, 60)) best = std::min(best, std::fabs(spectral_g_hat(1.0, 0.5, a, pairs100(), 50) - target));
  EXPECT_GT(best, 1e-3);
}

TEST(Falsify, IbmIsNotFourthOrderHeat) {
  const auto r = theorem2_falsify(logspace(1e-3, 1e3, 60), default_falsify_t_grid(), default_falsify_x_grid());
  EXPECT_GT(r.min_residual, 0.05);
  EXPECT_EQ(r.residuals.size(), 60u);
  EXPECT_EQ(r.grid.size(), 20u);
  EXPECT_GT(r.residual_at_a_star, 0.05);
  const auto j = to_json(r);
  for (const char* key : {"model", "a_grid", "min_residual", "best_a", "a_star", "residual_at_a_star", "grid"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Falsify, ControlRecoversHalf) {
  const auto r = heat_control_falsify(logspace(1e-3, 1e3, 60), default_falsify_t_grid(), default_falsify_x_grid());
  EXPECT_NEAR(r.a_star, 0.5, 0.02);
  EXPECT_LT(r.residual_at_a_star, 1e-3);
}

TEST(Falsify, HarnessOnExactSolution) {
  // e^{a k^4 t} sin(k x) solves a u'''' = u_t exactly; a = 0 leaves the whole time derivative
  const double k = 2.0, a = 0.03;
  auto u = [&](double t, double x) { return std::exp(a * std::pow(k, 4) * t) * std::sin(k * x); };
  const auto r = falsify_harness(u, 4, "exact", {0.0, a}, {0.5, 1.0}, {0.3, 0.6});
  EXPECT_NEAR(r.residuals[0], 1.0, 1e-14);
  EXPECT_LT(r.residuals[1], 3e-3);  // 4th-difference truncation (k h)^2 / 6
  EXPECT_NEAR(r.a_star, a, 3e-3 * a);
  EXPECT_THROW(falsify_harness(u, 3, "bad", {a}, {1.0}, {0.5}), DomainError);
}

TEST(Falsify, GridRestrictedToInterior) {
  EXPECT_THROW(theorem2_falsify({1.0}, {1.0}, {0.1}), DomainError);
  EXPECT_THROW(theorem2_falsify({1.0}, {1.0}, {0.9}), DomainError);
}
