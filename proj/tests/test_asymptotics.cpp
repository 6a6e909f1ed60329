#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ibmexit/asymptotics.hpp"
#include "test_support.hpp"

using namespace ibmexit;
using namespace testing_support;

namespace {
constexpr double pi = std::numbers::pi;

template <class F>
SurvivalCurve curve_of(F&& f, double lo, double hi, int count) {
  SurvivalCurve c;
  for (double t : log_grid(lo, hi, count)) c.points.push_back({t, f(t), std::nullopt, std::nullopt});
  return c;
}
}  // namespace

TEST(Regimes, PredictedByInnerExponent) {
  EXPECT_EQ(predicted_regime(0.5).kind, TailKind::pure_power);
  EXPECT_DOUBLE_EQ(predicted_regime(0.5).exponent, 0.5);
  EXPECT_EQ(predicted_regime(1.0).kind, TailKind::power_log);
  EXPECT_EQ(predicted_regime(2.0).kind, TailKind::pure_power);
  EXPECT_DOUBLE_EQ(predicted_regime(2.0).exponent, 1.5);
  EXPECT_DOUBLE_EQ(predicted_regime(3.0).exponent, 2.0);
  EXPECT_THROW(predicted_regime(0.0), DomainError);
  EXPECT_THROW(predicted_regime(-1.0), DomainError);
}

TEST(Regimes, Continuity) {
  // the two pure-power branches meet at p = 1 with exponent 1
  EXPECT_NEAR(predicted_regime(1.0 - 1e-12).exponent, 1.0, 1e-11);
  EXPECT_NEAR(predicted_regime(1.0 + 1e-12).exponent, 1.0, 1e-11);
}

TEST(TailKindNames, RoundTrip) {
  for (auto k : {TailKind::pure_power, TailKind::power_log, TailKind::stretched_exp})
    EXPECT_EQ(parse_tail_kind(to_string(k)), k);
  EXPECT_EQ(parse_tail_kind("stretched-exp"), TailKind::stretched_exp);
  EXPECT_THROW(parse_tail_kind("gaussian"), DomainError);
}

TEST(FitTail, RecoversExactPowerLaw) {
  const auto c = curve_of([](double t) { return 3.0 * std::pow(t, -0.7); }, 1.0, 1e4, 30);
  const auto f = fit_tail(c, TailKind::pure_power, std::pair{1.0, 1e4});
  EXPECT_NEAR(f.exponent_or_coefficient, 0.7, 1e-10);
  EXPECT_NEAR(f.amplitude, 3.0, 1e-9);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.points, 30u);
}

TEST(FitTail, RecoversStretchedExponential) {
  const auto c = curve_of([](double t) { return 0.4 * std::exp(-2.0 * std::cbrt(t)); }, 1.0, 1e3, 25);
  const auto f = fit_tail(c, TailKind::stretched_exp, std::pair{1.0, 1e3});
  EXPECT_NEAR(f.exponent_or_coefficient, 2.0, 1e-10);
  EXPECT_NEAR(f.amplitude, 0.4, 1e-9);
}

TEST(FitTail, PowerLogBeatsPurePowerOnLogCorrectedTail) {
  const auto c = curve_of([](double t) { return std::log(t) / t; }, 1e2, 1e6, 41);
  const auto pl = fit_tail(c, TailKind::power_log, std::pair{1e2, 1e6});
  const auto pp = fit_tail(c, TailKind::pure_power, std::pair{1e2, 1e6});
  EXPECT_NEAR(pl.exponent_or_coefficient, 1.0, 1e-10);
  EXPECT_GT(pl.r_squared, 0.9999);
  EXPECT_GT(pl.r_squared, pp.r_squared);
  // a pure power drifts below 1 because of the log factor
  EXPECT_GT(pp.exponent_or_coefficient, 0.8);
  EXPECT_LT(pp.exponent_or_coefficient, 0.95);
}

TEST(FitTail, DefaultWindowIsTopTwoDecades) {
  SurvivalCurve c;
  for (double t : log_grid(1.0, 1e6, 61)) c.points.push_back({t, 1.0 / t, 1e-3 / t, 1000});
  const auto [lo, hi] = default_fit_window(c);
  EXPECT_DOUBLE_EQ(hi, 1e6);
  EXPECT_DOUBLE_EQ(lo, 1e4);
  // points whose stderr swamps the value are dropped from the top
  c.points.back().stderr_ = 1.0;
  EXPECT_LT(default_fit_window(c).second, 1e6);
}

TEST(FitTail, WeightedFitIgnoresNoisyPoint) {
  SurvivalCurve c;
  for (double t : log_grid(10.0, 1e3, 21)) c.points.push_back({t, std::pow(t, -0.5), 1e-6 * std::pow(t, -0.5), 1});
  c.points[10].value *= 1.5;
  c.points[10].stderr_ = 10.0;
  const auto f = fit_tail(c, TailKind::pure_power, std::pair{10.0, 1e3});
  EXPECT_NEAR(f.exponent_or_coefficient, 0.5, 1e-6);
}

TEST(FitTail, Errors) {
  const auto few = curve_of([](double t) { return 1.0 / t; }, 1.0, 10.0, 4);
  EXPECT_THROW(fit_tail(few, TailKind::pure_power, std::pair{1.0, 10.0}), DomainError);
  auto c = curve_of([](double t) { return 1.0 / t; }, 1.0, 10.0, 10);
  c.points[3].value = 0.0;
  EXPECT_THROW(fit_tail(c, TailKind::pure_power, std::pair{1.0, 10.0}), DomainError);
  const auto low = curve_of([](double t) { return 1.0 / t; }, 0.1, 10.0, 10);
  EXPECT_THROW(fit_tail(low, TailKind::power_log, std::pair{0.1, 10.0}), DomainError);
}

TEST(FitTail, JsonShape) {
  const auto c = curve_of([](double t) { return 2.0 / t; }, 1.0, 100.0, 10);
  const auto j = to_json(fit_tail(c, TailKind::pure_power, std::pair{1.0, 100.0}));
  EXPECT_EQ(j["model"], "pure_power");
  EXPECT_NEAR(j["params"]["exponent"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(j["params"].contains("amplitude"));
  EXPECT_EQ(j["window"].size(), 2u);
  EXPECT_TRUE(j.contains("r2"));
  const auto s = to_json(fit_tail(c, TailKind::stretched_exp, std::pair{1.0, 100.0}));
  EXPECT_TRUE(s["params"].contains("coefficient"));
  const auto l = to_json(fit_tail(curve_of([](double t) { return 2.0 / t; }, 2.0, 100.0, 10), TailKind::power_log,
                                  std::pair{2.0, 100.0}));
  EXPECT_TRUE(l["params"].contains("log_power"));
}

TEST(ParetoRegimes, FittedTailsMatchPrediction) {
  for (double p : {0.5, 1.0, 2.0}) {
    const auto c = curve_of([p](double t) { return synthetic_eta_survival(p, t); }, 1e2, 1e6, 25);
    const auto pred = predicted_regime(p);
    const auto pp = fit_tail(c, TailKind::pure_power, std::pair{1e2, 1e6});
    const auto pl = fit_tail(c, TailKind::power_log, std::pair{1e2, 1e6});
    if (pred.kind == TailKind::pure_power) {
      EXPECT_NEAR(pp.exponent_or_coefficient, pred.exponent, 0.05) << p;
    } else {
      EXPECT_GT(pl.r_squared, pp.r_squared) << p;
    }
  }
}

TEST(ParetoRegimes, SurvivalIsAProbability) {
  for (double t : {1.0, 10.0, 1e3}) {
    const double s = synthetic_eta_survival(1.0, t);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_GT(synthetic_eta_survival(1.0, 10.0), synthetic_eta_survival(1.0, 100.0));
}

TEST(Tauberian, ConvolutionTail) {
  const auto rows = convolution_tail_check(1.0, {10.0, 100.0, 1000.0});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0].sum_tail, 11.0 * std::exp(-10.0), 1e-15);
  EXPECT_NEAR(rows[1].ratio, 1.0 - std::log(101.0) / 100.0, 1e-14);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].sum_tail, rows[i].single_tail);
    if (i) {
      EXPECT_GT(rows[i].ratio, rows[i - 1].ratio);
    }
  }
  EXPECT_GT(rows[2].ratio, 0.99);
  EXPECT_THROW(convolution_tail_check(0.0, {1.0}), DomainError);
}

TEST(Tauberian, ConstantsAgree) {
  // X = (xi1 + xi2)^{-2}: -log P(X <= eps) ~ c eps^{-1/2}
  for (double c : {0.5, 1.0, 3.0}) EXPECT_NEAR(debruijn_constant(c, 0.5), convolution_laplace_constant(c), 1e-14 * c);
  // p = 1: K = 2 sqrt(B)
  EXPECT_NEAR(debruijn_constant(4.0, 1.0), 4.0, 1e-14);
}

TEST(Tauberian, LaplaceExponentApproachesPrediction) {
  EXPECT_EQ(debruijn_check(1.0, 0.0).numeric, 0.0);
  const auto a = debruijn_check(1.0, 1e3), b = debruijn_check(1.0, 1e6);
  EXPECT_GT(b.ratio(), 0.90);
  EXPECT_LT(b.ratio(), 1.05);
  EXPECT_LT(std::fabs(b.ratio() - 1.0), std::fabs(a.ratio() - 1.0));
  const auto s = small_ball_laplace_check(1.0, 1e6);
  EXPECT_GT(s.ratio(), 0.90);
  EXPECT_LT(s.ratio(), 1.05);
}

TEST(Tauberian, IncreasingInLambda) {
  const auto d = debruijn_check(1.0, 1e-3);
  EXPECT_GT(d.numeric, 0.0);
  EXPECT_LT(d.numeric, debruijn_check(1.0, 1e-2).numeric);
}

TEST(Stretched, Coefficients) {
  const auto s = stretched_coefficient(pi * pi / 2);
  EXPECT_NEAR(s.proof_constant, 9.326192, 1e-5);
  EXPECT_NEAR(s.text_constant, 4.347815, 1e-5);
  EXPECT_NEAR(stretched_coefficient(1.0).proof_constant, 1.5 * std::pow(pi, 2.0 / 3.0), 1e-14);
  EXPECT_NEAR(stretched_coefficient(1.0).proof_constant, 3.217544, 1e-6);
  EXPECT_NEAR(stretched_coefficient(8.0).proof_constant / stretched_coefficient(1.0).proof_constant, 4.0, 1e-13);
  EXPECT_THROW(stretched_coefficient(0.0), DomainError);
}

TEST(Stretched, VariationalMinimum) {
  for (auto [c, t] : {std::pair{1.0, 1e3}, {2.0, 1e4}, {0.3, 50.0}}) {
    const auto v = variational_check(c, t);
    EXPECT_NEAR(v.numeric, v.closed_form, 1e-8 * v.closed_form);
    // minimizer L* = (pi^2 t / c)^{1/3}
    EXPECT_NEAR(v.minimizer, std::cbrt(pi * pi * t / c), 1e-5 * v.minimizer);
  }
  // the closed form is the proof constant at lambda = c, times t^{1/3}
  EXPECT_NEAR(variational_check(1.0, 8.0).closed_form, 2.0 * stretched_coefficient(1.0).proof_constant, 1e-12);
}
