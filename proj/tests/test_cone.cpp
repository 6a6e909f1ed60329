#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "ibmexit/bm_laws.hpp"
#include "ibmexit/cone.hpp"
#include "ibmexit/quadrature.hpp"
#include "test_support.hpp"

using namespace ibmexit;
using namespace testing_support;

namespace {
constexpr double pi = std::numbers::pi;

const ConeSpectralData& spectrum(double xi) {
  static std::map<double, std::unique_ptr<ConeSpectralData>> cache;
  auto& slot = cache[xi];
  if (!slot) slot = std::make_unique<ConeSpectralData>(wedge_spectrum(xi, cone_policy().max_terms));
  return *slot;
}
}  // namespace

TEST(WedgeSpectrum, Exponents) {
  EXPECT_DOUBLE_EQ(wedge_spectrum(pi, 4).a(1), 1.0);
  EXPECT_DOUBLE_EQ(WedgeSpec(pi).exponent(), 0.5);
  EXPECT_DOUBLE_EQ(WedgeSpec(pi / 2).exponent(), 1.0);
  const auto quarter = wedge_spectrum(pi / 4, 6);
  for (int j = 1; j <= 6; ++j) EXPECT_NEAR(quarter.a(j), 4.0 * j, 1e-12);
  EXPECT_DOUBLE_EQ(quarter.exponent(), 2.0);
  EXPECT_EQ(quarter.B(2), 0.0);
  EXPECT_EQ(quarter.B(4), 0.0);
  for (double xi : {0.3, pi / 3, 2.0, 5.5}) EXPECT_NEAR(wedge_spectrum(xi, 1).exponent(), WedgeSpec(xi).exponent(), 1e-14);
  EXPECT_THROW(WedgeSpec(0.0), DomainError);
  EXPECT_THROW(WedgeSpec(2 * pi), DomainError);
}

TEST(WedgeSpectrum, EigenfunctionsOrthonormalOnArc) {
  const double xi = 1.2;
  const auto s = wedge_spectrum(xi, 5);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) {
      const double ip = integrate([&](double th) { return s.m_at(i, {1, th}) * s.m_at(j, {1, th}); }, 0.0, xi, 1e-13);
      EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-12);
    }
  const double integral = integrate([&](double th) { return s.m_at(3, {1, th}); }, 0.0, xi, 1e-13);
  EXPECT_NEAR(integral, s.triple(3).m_integral, 1e-12);
}

TEST(ConeSurvival, HalfPlaneIsLevelHitting) {
  for (double r : {0.5, 1.0, 2.0})
    for (double t : {0.5, 1.0, 4.0}) {
      const ConeQuery q{r, pi / 2};
      EXPECT_NEAR(cone_survival(spectrum(pi), q, t), 2 * normal_cdf(r / std::sqrt(t)) - 1, 1e-8) << r << ' ' << t;
    }
}

TEST(ConeSurvival, LargeTimeLeadingTerm) {
  const auto& s = spectrum(pi / 2);
  const ConeQuery q{1.0, pi / 4};
  const double t = 1e3;
  const double lead = s.B(1) * s.m_at(1, q) * std::pow(0.5, s.a(1) / 2) * std::pow(t, -s.a(1) / 2);
  const double ratio = cone_survival(s, q, t) / lead;
  EXPECT_GE(ratio, 0.9);
  EXPECT_LE(ratio, 1.1);
}

TEST(ConeSurvival, SmallTimeTendsToOne) {
  const auto& s = spectrum(pi / 4);
  EXPECT_NEAR(cone_survival(s, {1.0, pi / 8}, 1.0 / 2000.0), 1.0, 1e-6);
  EXPECT_NEAR(cone_survival(s, {1.0, pi / 8}, 1.0 / 1300.0), 1.0, 1e-6);
}

TEST(ConeSurvival, MonotoneInTimeAndRadius) {
  for (double xi : {pi / 4, pi / 2, pi}) {
    const auto& s = spectrum(xi);
    double prev = 1.0;
    for (double t : log_grid(1e-3, 1e5, 60)) {
      const double v = cone_survival(s, {1.0, xi / 2}, t);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
    prev = 0.0;
    for (double r : log_grid(0.05, 20, 40)) {
      const double v = cone_survival(s, {r, xi / 2}, 1.0);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(ConeSurvival, ReflectionSymmetry) {
  for (double xi : {pi / 4, 2.0, 4.0}) {
    const auto& s = spectrum(xi);
    for (double frac : {0.1, 0.3})
      for (double t : {0.1, 1.0, 30.0})
        EXPECT_NEAR(cone_survival(s, {1.0, frac * xi}, t), cone_survival(s, {1.0, (1 - frac) * xi}, t), 1e-12);
  }
}

TEST(ConeSurvival, TooFewTermsIsAnError) {
  const auto few = wedge_spectrum(pi / 4, 3);
  EXPECT_THROW(cone_survival(few, {1.0, pi / 8}, 0.01), TruncationError);
  EXPECT_THROW(cone_survival(spectrum(pi), {0.0, pi / 2}, 1.0), DomainError);
}

TEST(ConeDensity, FiniteDifferenceOfSurvival) {
  const auto& s = spectrum(pi / 2);
  const ConeQuery q{1.0, pi / 4};
  const double t = 2.0, h = t * 1e-5;
  const double fd = -(cone_survival(s, q, t + h) - cone_survival(s, q, t - h)) / (2 * h);
  EXPECT_NEAR(cone_exit_density(s, q, t) / fd, 1.0, 1e-4);
}

TEST(ConeDensity, IntegratesToOne) {
  for (double xi : {pi / 4, pi / 2}) {
    const auto& s = spectrum(xi);
    const ConeQuery q{1.0, xi / 2};
    auto g = [&](double a) {
      const double t = std::exp(a);
      return t * cone_exit_density(s, q, t);
    };
    const double brk[] = {-4.0, 0.0, 4.0};
    auto r = integrate_adaptive(g, std::log(1.0 / 1400.0), std::log(1e12), QuadratureOptions{1e-10, 0, 2000}, brk);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 1.0, 1e-6) << xi;
  }
}

TEST(ConeDensity, TailExponent) {
  const auto ts = log_grid(1e2, 1e4, 15);
  for (double xi : {pi / 4, pi / 2, pi}) {
    const auto& s = spectrum(xi);
    std::vector<double> f;
    for (double t : ts) f.push_back(cone_exit_density(s, {1.0, xi / 2}, t));
    EXPECT_NEAR(loglog_slope(ts, f), -(WedgeSpec(xi).exponent() + 1), 0.05) << xi;
  }
}

TEST(ConeDensity, Nonnegative) {
  for (double xi : {pi / 4, pi, 5.0})
    for (double t : log_grid(1e-3, 1e6, 80)) EXPECT_GE(cone_exit_density(spectrum(xi), {1.0, 0.3 * xi}, t), 0.0);
}

TEST(TruncationBound, DominatesTermsAndDecreases) {
  const auto& s = spectrum(pi / 4);
  const ConeQuery q{1.0, pi / 8};
  const double t = 10.0, z = q.r * q.r / (2 * t);
  for (int j = 5; j <= 20; ++j) {
    const double b = truncation_bound(s, j, q, t);
    EXPECT_GE(b, 0.0);
    EXPECT_GE(b, std::fabs(detail::cone_term(s, j, q, z, t, SeriesKind::survival)));
    EXPECT_GE(truncation_bound(s, j, q, t, SeriesKind::density),
              std::fabs(detail::cone_term(s, j, q, z, t, SeriesKind::density)));
  }
  for (int j = 10; j < 40; ++j) EXPECT_LE(truncation_bound(s, j + 1, q, t), truncation_bound(s, j, q, t));
}

TEST(ConeSampler, KolmogorovSmirnovExact) {
  const auto& s = spectrum(pi);
  const ConeQuery q{1.0, pi / 2};
  auto rng = rng_stream(21, 0);
  std::vector<double> xs(100000);
  for (auto& v : xs) v = sample_cone_exit(s, q, rng);
  EXPECT_LT(ks_statistic(xs, [&](double t) { return 1.0 - cone_survival(s, q, t); }), ks_critical(xs.size()));
}

TEST(ConeSampler, TabulatedLawMatchesSeries) {
  auto data = std::make_shared<const ConeSpectralData>(wedge_spectrum(pi / 4, 1000));
  const ConeQuery q{1.0, pi / 8};
  const ConeExitLaw law(data, q);
  for (double t : log_grid(1e-3, 4e2, 50)) {
    EXPECT_NEAR(law.survival(t), cone_survival(*data, q, t), 1e-11);
    EXPECT_NEAR(law.density(t), cone_exit_density(*data, q, t), 1e-10 * std::max(1.0, cone_exit_density(*data, q, t)));
  }
  for (double U : {1e-6, 0.01, 0.3, 0.9, 0.999999}) {
    const double t = law.quantile(U);
    EXPECT_NEAR(law.survival(t), U, 1e-9 * std::max(U, 1e-3));
  }
}

TEST(ConeSampler, HalfPlaneEqualsHalfLineInLaw) {
  auto data = std::make_shared<const ConeSpectralData>(wedge_spectrum(pi, 1000));
  const ConeExitLaw law(data, {1.0, pi / 2});
  auto a = rng_stream(22, 0), b = rng_stream(22, 1);
  std::vector<double> xs(100000), ys(100000);
  for (auto& v : xs) v = law.sample(a);
  for (auto& v : ys) v = sample_halfline_exit(1.0, b);
  EXPECT_LT(ks_two_sample(xs, ys), ks_critical(xs.size(), ys.size()));
  EXPECT_LT(ks_statistic(xs, [&](double t) { return 1.0 - law.survival(t); }), ks_critical(xs.size()));
}

TEST(ConeSampler, BrownianScaling) {
  auto data = std::make_shared<const ConeSpectralData>(wedge_spectrum(pi / 4, 1000));
  const ConeExitLaw one(data, {1.0, pi / 8}), two(data, {2.0, pi / 8});
  auto a = rng_stream(23, 0), b = rng_stream(23, 1);
  std::vector<double> xs(100000), ys(100000);
  for (auto& v : xs) v = two.sample(a);
  for (auto& v : ys) v = 4.0 * one.sample(b);
  EXPECT_LT(ks_two_sample(xs, ys), ks_critical(xs.size(), ys.size()));
}

TEST(SpectralCsv, RoundTrip) {
  const auto& s = spectrum(pi / 3);
  const ConeQuery q{1.3, 0.4};
  std::stringstream buf;
  write_spectral_csv(buf, s, q);
  EXPECT_EQ(buf.str().substr(0, 25), "lambda,m_at_x,m_integral\n");
  const auto back = read_spectral_csv(buf);
  EXPECT_EQ(back.size(), s.size());
  for (double t : {0.2, 1.0, 10.0}) EXPECT_NEAR(cone_survival(back, q, t), cone_survival(s, q, t), 1e-13);
  std::stringstream bad("lambda,m\n1,2\n");
  EXPECT_THROW(read_spectral_csv(bad), DomainError);
}
