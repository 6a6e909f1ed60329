#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "bm_laws.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "series_policy.hpp"

namespace ibmexit {

// Law of a positive random time: the inner exit time of a domain, or a
// synthetic stand-in.  Implementations are immutable and safe to share.
class ExitTimeLaw {
 public:
  virtual ~ExitTimeLaw() = default;
  virtual double survival(double t) const = 0;
  virtual double density(double t) const = 0;
  virtual double sample(RngStream& stream) const = 0;
  // Below this time the density is zero or negligible.
  virtual double lower_limit() const = 0;
  // Representative time scale (used to seed quadrature breakpoints).
  virtual double scale() const = 0;
  // A time beyond which the survival is negligible (below ~1e-300 or
  // capped at 1e40 for heavy tails).
  virtual double upper_limit() const {
    double t = std::max(scale(), lower_limit()) * 2.0;
    while (t < 1e40 && survival(t) > 1e-300) t *= 4.0;
    return std::min(t, 1e40);
  }
};

class HalfLineExitLaw final : public ExitTimeLaw {
 public:
  explicit HalfLineExitLaw(double x) : x_(x) {
    IBMEXIT_REQUIRE(x > 0, DomainError, "half-line start must be at positive distance");
  }
  double survival(double t) const override { return halfline_survival(x_, t); }
  double density(double t) const override { return halfline_exit_density(x_, t); }
  double sample(RngStream& s) const override { return sample_halfline_exit(x_, s); }
  double lower_limit() const override { return x_ * x_ / 1500.0; }
  double scale() const override { return x_ * x_; }
  double upper_limit() const override { return 1e40 * x_ * x_; }

 private:
  double x_;
};

class IntervalExitLaw final : public ExitTimeLaw {
 public:
  explicit IntervalExitLaw(double x, SeriesPolicy policy = {}) : x_(x), policy_(policy) {
    IBMEXIT_REQUIRE(x > 0 && x < 1, DomainError, "interval start must lie in (0, 1)");
    policy_.validate();
  }
  double survival(double t) const override { return interval_survival(x_, t, policy_); }
  double density(double t) const override { return interval_exit_density(x_, t, policy_); }
  double sample(RngStream& s) const override { return sample_interval_exit(x_, s, policy_); }
  double lower_limit() const override {
    const double near = std::min(x_, 1.0 - x_);
    return near * near / 1500.0;
  }
  double scale() const override { return std::min(x_, 1.0 - x_) * 0.5; }
  double upper_limit() const override { return 2.0 * 700.0 / (detail::kPi * detail::kPi); }
  double position() const { return x_; }

 private:
  double x_;
  SeriesPolicy policy_;
};

// Pareto(p) on [1, inf): density p u^{-p-1}.
class ParetoLaw final : public ExitTimeLaw {
 public:
  explicit ParetoLaw(double p) : p_(p) { IBMEXIT_REQUIRE(p > 0, DomainError, "Pareto exponent must be positive"); }
  double survival(double t) const override { return t <= 1.0 ? 1.0 : std::pow(t, -p_); }
  double density(double t) const override { return t < 1.0 ? 0.0 : p_ * std::pow(t, -p_ - 1.0); }
  double sample(RngStream& s) const override { return std::pow(s.uniform(), -1.0 / p_); }
  double lower_limit() const override { return 1.0; }
  double scale() const override { return 1.0; }
  double upper_limit() const override { return std::min(1e40, std::pow(10.0, 300.0 / p_)); }

 private:
  double p_;
};

// Exponential(c): density c e^{-c u}.
class ExponentialLaw final : public ExitTimeLaw {
 public:
  explicit ExponentialLaw(double c) : c_(c) { IBMEXIT_REQUIRE(c > 0, DomainError, "rate must be positive"); }
  double survival(double t) const override { return t <= 0.0 ? 1.0 : std::exp(-c_ * t); }
  double density(double t) const override { return t < 0.0 ? 0.0 : c_ * std::exp(-c_ * t); }
  double sample(RngStream& s) const override { return -std::log(s.uniform()) / c_; }
  double lower_limit() const override { return 1e-20 / c_; }
  double scale() const override { return 1.0 / c_; }
  double upper_limit() const override { return 700.0 / c_; }

 private:
  double c_;
};

}  // namespace ibmexit
