#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "errors.hpp"
#include "rng.hpp"
#include "roots.hpp"
#include "series_policy.hpp"
#include "special_functions.hpp"

namespace ibmexit {

namespace detail {

constexpr double kPi = std::numbers::pi;

// Survival of Brownian motion started at distance `near` from the closer end
// of the unit interval, at time s.  Large s: eigenfunction series.  Small s:
// the image series integrated term by term over the interval, in erfc form.
inline double unit_interval_survival(double near, double s, const SeriesPolicy& policy) {
  if (near <= 0.0) return 0.0;
  if (s <= 0.0) return 1.0;
  if (s >= policy.switchover_u) {
    double sum = 0.0;
    for (int n = 0; n < policy.max_terms; ++n) {
      const double m = 2.0 * n + 1.0;
      const double decay = std::exp(-m * m * kPi * kPi * s / 2.0) / m;
      sum += decay * std::sin(m * kPi * near);
      if (decay <= 1e-17 * std::fabs(sum) || decay < 1e-300) return std::clamp(4.0 / kPi * sum, 0.0, 1.0);
    }
    throw ConvergenceError("interval_survival: eigen-series exceeded max_terms");
  }
  const double c = std::sqrt(2.0 * s);
  const double x = near;
  double sum = std::erf(x / c) - 0.5 * (std::erfc((1.0 - x) / c) - std::erfc((1.0 + x) / c));
  for (int m = 1; m < policy.max_terms; ++m) {
    const double a = 0.5 * (std::erfc((2 * m - x) / c) - std::erfc((2 * m + 1 - x) / c)) -
                     0.5 * (std::erfc((2 * m + x) / c) - std::erfc((2 * m + 1 + x) / c));
    const double b = 0.5 * (std::erfc((2 * m - 1 + x) / c) - std::erfc((2 * m + x) / c)) -
                     0.5 * (std::erfc((2 * m - 1 - x) / c) - std::erfc((2 * m - x) / c));
    sum += a + b;
    if (std::erfc((2 * m - 1 - x) / c) <= 1e-17 * std::fabs(sum)) return std::clamp(sum, 0.0, 1.0);
  }
  throw ConvergenceError("interval_survival: image series exceeded max_terms");
}

// Exit-time density from `near` for the unit interval at time u.
inline double unit_interval_density(double near, double u, const SeriesPolicy& policy) {
  if (u <= 0.0) return 0.0;
  if (u >= policy.switchover_u) {
    double sum = 0.0;
    for (int n = 0; n < policy.max_terms; ++n) {
      const double m = 2.0 * n + 1.0;
      const double decay = m * std::exp(-m * m * kPi * kPi * u / 2.0);
      sum += decay * std::sin(m * kPi * near);
      if (decay <= 1e-17 * std::fabs(sum) || decay < 1e-300) return std::max(0.0, 2.0 * kPi * sum);
    }
    throw ConvergenceError("interval_exit_density: eigen-series exceeded max_terms");
  }
  const double x = near;
  auto img = [u](double y) { return y * std::exp(-y * y / (2.0 * u)); };
  double sum = img(x) + img(1.0 - x);
  for (int k = 1; k < policy.max_terms; ++k) {
    const double pos = img(x + 2 * k) + img(1.0 - x + 2 * k);
    const double neg = img(x - 2 * k) + img(1.0 - x - 2 * k);
    sum += pos + neg;
    if (std::fabs(pos) + std::fabs(neg) <= 1e-17 * std::fabs(sum)) break;
  }
  return std::max(0.0, sum / (std::sqrt(2.0 * kPi) * u * std::sqrt(u)));
}

inline void check_unit_position(double x, const char* who) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(who) + ": position outside [0, 1]");
}

}  // namespace detail

// P_x(exit from (0,1) after t).
inline double interval_survival(double x, double t, const SeriesPolicy& policy = {}) {
  detail::check_unit_position(x, "interval_survival");
  IBMEXIT_REQUIRE(t >= 0.0, DomainError, "interval_survival: negative time");
  if (x == 0.0 || x == 1.0) return 0.0;
  if (t == 0.0) return 1.0;
  return detail::unit_interval_survival(std::min(x, 1.0 - x), t, policy);
}

// Brownian motion from 0 stays in (-u, v) up to time t.
inline double two_sided_survival(double u, double v, double t, const SeriesPolicy& policy = {}) {
  IBMEXIT_REQUIRE(u >= 0.0 && v >= 0.0 && t >= 0.0, DomainError, "two_sided_survival: negative argument");
  if (u == 0.0 || v == 0.0) return 0.0;
  if (t == 0.0) return 1.0;
  const double width = u + v;
  return detail::unit_interval_survival(std::min(u, v) / width, t / (width * width), policy);
}

// 2 Phi(x / sqrt t) - 1
inline double halfline_survival(double x, double t) {
  IBMEXIT_REQUIRE(x >= 0.0 && t >= 0.0, DomainError, "halfline_survival: negative argument");
  if (x == 0.0) return 0.0;
  if (t == 0.0) return 1.0;
  return std::erf(x / std::sqrt(2.0 * t));
}

inline double halfline_exit_density(double x, double u) {
  IBMEXIT_REQUIRE(x > 0.0, DomainError, "halfline_exit_density: distance must be positive");
  if (u <= 0.0) return 0.0;
  return x / std::sqrt(2.0 * detail::kPi * u * u * u) * std::exp(-x * x / (2.0 * u));
}

inline double interval_exit_density(double x, double u, const SeriesPolicy& policy = {}) {
  IBMEXIT_REQUIRE(x > 0.0 && x < 1.0, DomainError, "interval_exit_density: position must be inside (0, 1)");
  IBMEXIT_REQUIRE(u >= 0.0, DomainError, "interval_exit_density: negative time");
  return detail::unit_interval_density(std::min(x, 1.0 - x), u, policy);
}

namespace detail {

// Solves survival(t) = U for t by Newton on log survival, guarded by a
// bracket whose upper end grows geometrically until survival < U.
template <class Survival, class Density>
double invert_survival(Survival&& survival, Density&& density, double U, double guess) {
  double lo = 1e-12 * guess, hi = std::max(guess, 1e-300);
  if (survival(lo) <= U) return lo;
  while (survival(hi) > U) {
    lo = hi;
    hi *= 4.0;
    if (!std::isfinite(hi)) throw ConvergenceError("exit sampler: could not bracket the quantile");
  }
  const double logU = std::log(U);
  auto fdf = [&](double t) {
    const double S = survival(t);
    if (S <= 0.0) return std::pair<double, double>{-std::numeric_limits<double>::infinity(), 0.0};
    return std::pair<double, double>{std::log(S) - logU, -density(t) / S};
  };
  return newton_bracketed(fdf, Bracket(lo, hi), std::clamp(guess, lo, hi), 1e-13);
}

}  // namespace detail

inline double sample_interval_exit(double x, RngStream& stream, const SeriesPolicy& policy = {}) {
  detail::check_unit_position(x, "sample_interval_exit");
  if (x == 0.0 || x == 1.0) return 0.0;
  const double near = std::min(x, 1.0 - x);
  const double U = stream.uniform();
  const double lead = 2.0 / (detail::kPi * detail::kPi) * std::log(4.0 / detail::kPi * std::sin(detail::kPi * near) / U);
  const double guess = std::max(lead, near * near);
  return detail::invert_survival([&](double t) { return detail::unit_interval_survival(near, t, policy); },
                                 [&](double t) { return detail::unit_interval_density(near, t, policy); }, U, guess);
}

// x^2 / Z^2 is the first hitting time of level x.
inline double sample_halfline_exit(double x, RngStream& stream) {
  IBMEXIT_REQUIRE(x >= 0.0, DomainError, "sample_halfline_exit: negative distance");
  if (x == 0.0) return 0.0;
  double z;
  do z = stream.standard_normal();
  while (z == 0.0);
  return x * x / (z * z);
}

}  // namespace ibmexit
