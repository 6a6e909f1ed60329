#pragma once

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "series_policy.hpp"

namespace ibmexit {

inline double log_gamma(double x) {
  IBMEXIT_REQUIRE(x > 0, DomainError, "log_gamma: argument must be positive");
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // reentrant: std::lgamma writes the global signgam
#else
  return std::lgamma(x);
#endif
}

namespace detail {

constexpr int kKummerTermCap = 200000;

// log of sum_k (A)_k/(B)_k Z^k/k! for A >= 0, B > 0, Z >= 0 (all terms nonnegative).
// The running sum is rescaled so arguments in the hundreds neither overflow nor
// lose the small-term tail.
inline double log_positive_kummer_series(double A, double B, double Z) {
  if (Z == 0.0 || A == 0.0) return 0.0;
  constexpr double kRescale = 1e250;
  const double log_rescale = std::log(kRescale);
  double term = 1.0, sum = 1.0, log_scale = 0.0;
  for (int k = 0; k < kKummerTermCap; ++k) {
    const double ratio = (A + k) / (B + k) * Z / (k + 1);
    term *= ratio;
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += log_rescale;
    }
    if (ratio < 1.0 && term * ratio <= 1e-17 * sum * (1.0 - ratio)) return log_scale + std::log(sum);
  }
  throw ConvergenceError("kummer_1F1: positive series did not converge");
}

struct SeriesValue {
  double value;
  double error;  // rounding estimate from the largest term
};

// Plain Taylor series; the error estimate tracks the largest partial term.
inline SeriesValue taylor_kummer_raw(double a, double b, double z) {
  double term = 1.0, sum = 1.0, biggest = 1.0;
  for (int k = 0; k < kKummerTermCap; ++k) {
    term *= (a + k) / (b + k) * z / (k + 1);
    sum += term;
    biggest = std::fmax(biggest, std::fabs(term));
    if (term == 0.0) break;
    if (k > std::fabs(z) && std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
    if (k + 1 == kKummerTermCap) throw ConvergenceError("kummer_1F1: Taylor series did not converge");
  }
  return {sum, biggest * 2e-16};
}

// Direct series or its Kummer transform e^z 1F1(b-a; b; -z), whichever loses
// fewer digits to cancellation.
inline double taylor_kummer(double a, double b, double z, double abs_tol) {
  SeriesValue best = taylor_kummer_raw(a, b, z);
  if (std::isfinite(z) && std::fabs(z) < 700.0) {
    const SeriesValue t = taylor_kummer_raw(b - a, b, -z);
    const double ez = std::exp(z);
    if (t.error * ez < best.error) best = {t.value * ez, t.error * ez};
  }
  if (best.error > abs_tol && best.error > 1e-10 * std::fabs(best.value))
    throw ConvergenceError("kummer_1F1: cancellation exceeds tolerance");
  return best.value;
}

}  // namespace detail

// Confluent hypergeometric 1F1(a; b; z).  For z < 0 with b - a >= 0 the Kummer
// transformation e^z 1F1(b-a; b; -z) turns the alternating series into a
// positive one, which is used for every negative z in that range.
inline double kummer_1F1(double a, double b, double z, const SeriesPolicy& policy = {}) {
  IBMEXIT_REQUIRE(b > 0, DomainError, "kummer_1F1: b must be positive");
  if (z == 0.0) return 1.0;
  if (z < 0 && b - a >= 0)
    return std::exp(z + detail::log_positive_kummer_series(b - a, b, -z));
  if (z > 0 && a >= 0) return std::exp(detail::log_positive_kummer_series(a, b, z));
  return detail::taylor_kummer(a, b, z, policy.abs_tol);
}

// ln 1F1(a; b; z) for parameter ranges where the value is positive; avoids the
// under/overflow of the plain value for large |z| or large a.
inline double log_kummer_1F1(double a, double b, double z, const SeriesPolicy& policy = {}) {
  IBMEXIT_REQUIRE(b > 0, DomainError, "log_kummer_1F1: b must be positive");
  if (z == 0.0) return 0.0;
  if (z < 0 && b - a >= 0) return z + detail::log_positive_kummer_series(b - a, b, -z);
  if (z > 0 && a >= 0) return detail::log_positive_kummer_series(a, b, z);
  const double v = detail::taylor_kummer(a, b, z, policy.abs_tol);
  IBMEXIT_REQUIRE(v > 0, DomainError, "log_kummer_1F1: value is not positive");
  return std::log(v);
}

inline double normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Upper tail 1 - Phi(x), accurate far into the tail.
inline double normal_sf(double x) { return normal_cdf(-x); }

// p_n(t, u) = (2 pi t)^{-n/2} exp(-u^2 / 2t)
inline double heat_kernel(int n, double t, double u) {
  IBMEXIT_REQUIRE(n >= 1 && t > 0, DomainError, "heat_kernel: need n >= 1 and t > 0");
  return std::pow(2.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-u * u / (2.0 * t));
}

}  // namespace ibmexit
