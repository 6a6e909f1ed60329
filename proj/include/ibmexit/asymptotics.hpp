#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "exit_law.hpp"
#include "ibm.hpp"
#include "json.hpp"
#include "quadrature.hpp"
#include "roots.hpp"

namespace ibmexit {

enum class TailKind { pure_power, power_log, stretched_exp };

inline std::string to_string(TailKind k) {
  switch (k) {
    case TailKind::pure_power: return "pure_power";
    case TailKind::power_log: return "power_log";
    case TailKind::stretched_exp: return "stretched_exp";
  }
  return "?";
}

inline TailKind parse_tail_kind(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "pure_power") return TailKind::pure_power;
  if (s == "power_log") return TailKind::power_log;
  if (s == "stretched_exp") return TailKind::stretched_exp;
  throw DomainError("unknown tail model '" + s + "'");
}

// pure_power: value ~ A t^{-q}; power_log: value ~ A t^{-1} ln t;
// stretched_exp: log value ~ -c t^{1/3}.
struct TailModel {
  TailKind kind = TailKind::pure_power;
  double exponent = std::numeric_limits<double>::quiet_NaN();
};

inline TailModel predicted_regime(double p) {
  IBMEXIT_REQUIRE(p > 0 && std::isfinite(p), DomainError, "predicted_regime: need p > 0");
  // angles typed to ~10 digits put p a few 1e-12 away from 1
  constexpr double kCritical = 1e-8;
  if (std::fabs(p - 1.0) <= kCritical) return {TailKind::power_log, 1.0};
  if (p < 1.0) return {TailKind::pure_power, p};
  return {TailKind::pure_power, 0.5 * (p + 1.0)};
}

struct TailFit {
  TailKind model = TailKind::pure_power;
  // q for pure_power, the power of ln t for power_log, c for stretched_exp
  double exponent_or_coefficient = 0.0;
  double amplitude = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

inline nlohmann::ordered_json to_json(const TailFit& f) {
  nlohmann::ordered_json params;
  switch (f.model) {
    case TailKind::pure_power: params["exponent"] = f.exponent_or_coefficient; break;
    case TailKind::power_log: params["log_power"] = f.exponent_or_coefficient; break;
    case TailKind::stretched_exp: params["coefficient"] = f.exponent_or_coefficient; break;
  }
  params["amplitude"] = f.amplitude;
  nlohmann::ordered_json j;
  j["model"] = to_string(f.model);
  j["params"] = params;
  j["window"] = {f.t_min, f.t_max};
  j["r2"] = f.r_squared;
  return j;
}

// Top two decades of t where value > 10 stderr (all positive values when the
// curve carries no stderr).
inline std::pair<double, double> default_fit_window(const SurvivalCurve& curve) {
  double hi = 0.0;
  for (const auto& p : curve.points) {
    const bool usable = p.t > 0 && p.value > 0 && (!p.stderr_ || p.value > 10.0 * *p.stderr_);
    if (usable) hi = std::max(hi, p.t);
  }
  IBMEXIT_REQUIRE(hi > 0, DomainError, "fit window: no usable points");
  double lo = hi / 100.0;
  for (const auto& p : curve.points)
    if (p.t > 0 && p.t >= lo) {
      lo = p.t;
      break;
    }
  return {lo, hi};
}

namespace detail {

struct LinearFit {
  double slope, intercept;
};

inline LinearFit weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  IBMEXIT_REQUIRE(sxx > 0, DomainError, "fit_tail: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace detail

// Weighted least squares in transformed coordinates.  r^2 is always measured
// on log(value) so the three models are comparable on the same data.  Weights
// are (value/stderr)^2, the inverse variance of log(value), when every point in
// the window has a positive stderr.
inline TailFit fit_tail(const SurvivalCurve& curve, TailKind kind,
                        std::optional<std::pair<double, double>> window = std::nullopt) {
  const auto [lo, hi] = window ? *window : default_fit_window(curve);
  IBMEXIT_REQUIRE(lo < hi, DomainError, "fit_tail: empty window");
  std::vector<double> ts, logv, w;
  bool weighted = true;
  for (const auto& p : curve.points) {
    if (p.t < lo || p.t > hi) continue;
    IBMEXIT_REQUIRE(p.value > 0, DomainError, "fit_tail: nonpositive value in window");
    IBMEXIT_REQUIRE(p.t > 0, DomainError, "fit_tail: nonpositive time in window");
    ts.push_back(p.t);
    logv.push_back(std::log(p.value));
    if (p.stderr_ && *p.stderr_ > 0)
      w.push_back((p.value / *p.stderr_) * (p.value / *p.stderr_));
    else
      weighted = false;
  }
  IBMEXIT_REQUIRE(ts.size() >= 5, DomainError, "fit_tail: need at least 5 points in the window");
  if (!weighted) w.assign(ts.size(), 1.0);

  const std::size_t n = ts.size();
  std::vector<double> x(n), y(n), pred(n);
  TailFit fit;
  fit.model = kind;
  fit.t_min = ts.front();
  fit.t_max = ts.back();
  fit.points = n;
  switch (kind) {
    case TailKind::pure_power: {
      for (std::size_t i = 0; i < n; ++i) x[i] = std::log(ts[i]), y[i] = logv[i];
      const auto l = detail::weighted_line(x, y, w);
      fit.exponent_or_coefficient = -l.slope;
      fit.amplitude = std::exp(l.intercept);
      for (std::size_t i = 0; i < n; ++i) pred[i] = l.intercept + l.slope * x[i];
      break;
    }
    case TailKind::power_log: {
      IBMEXIT_REQUIRE(ts.front() > 1.0, DomainError, "fit_tail: power_log needs t > 1");
      for (std::size_t i = 0; i < n; ++i) x[i] = std::log(std::log(ts[i])), y[i] = logv[i] + std::log(ts[i]);
      const auto l = detail::weighted_line(x, y, w);
      fit.exponent_or_coefficient = l.slope;
      fit.amplitude = std::exp(l.intercept);
      for (std::size_t i = 0; i < n; ++i) pred[i] = l.intercept + l.slope * x[i] - std::log(ts[i]);
      break;
    }
    case TailKind::stretched_exp: {
      for (std::size_t i = 0; i < n; ++i) x[i] = std::cbrt(ts[i]), y[i] = -logv[i];
      const auto l = detail::weighted_line(x, y, w);
      fit.exponent_or_coefficient = l.slope;
      fit.amplitude = std::exp(-l.intercept);
      for (std::size_t i = 0; i < n; ++i) pred[i] = -(l.intercept + l.slope * x[i]);
      break;
    }
  }
  double sw = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) sw += w[i], my += w[i] * logv[i];
  my /= sw;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += w[i] * (logv[i] - pred[i]) * (logv[i] - pred[i]);
    ss_tot += w[i] * (logv[i] - my) * (logv[i] - my);
  }
  fit.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

// P(eta_(-xi1, xi2) > t) for Pareto(p) inner times on [1, inf).
inline double synthetic_eta_survival(double p, double t, const IbmQuadratureOptions& opt = {}) {
  IBMEXIT_REQUIRE(p > 0 && t > 0, DomainError, "synthetic_eta_survival: need p, t > 0");
  return ibm_survival_quadrature(ParetoLaw(p), t, opt);
}

struct ConvolutionTailRow {
  double t;
  double sum_tail;     // P(xi1 + xi2 > t)
  double single_tail;  // P(xi > t)
  double ratio;        // -log P(xi1 + xi2 > t) / (c t)
};

// Exponential(c) inner times: P(xi1 + xi2 > t) = (1 + ct) e^{-ct}.
inline std::vector<ConvolutionTailRow> convolution_tail_check(double c, const std::vector<double>& t_grid) {
  IBMEXIT_REQUIRE(c > 0, DomainError, "convolution_tail_check: need c > 0");
  std::vector<ConvolutionTailRow> rows;
  for (double t : t_grid) {
    IBMEXIT_REQUIRE(t > 0, DomainError, "convolution_tail_check: need t > 0");
    const double ct = c * t;
    const double log_sum = std::log1p(ct) - ct;
    rows.push_back({t, std::exp(log_sum), std::exp(-ct), -log_sum / ct});
  }
  return rows;
}

// -log P(X <= eps) ~ B eps^{-p}  <=>  -log E e^{-lambda X} ~ K lambda^{p/(p+1)}.
inline double debruijn_constant(double B, double p) {
  return (p + 1.0) * std::pow(B, 1.0 / (p + 1.0)) * std::pow(p, -p / (p + 1.0));
}

// 3 (c/2)^{2/3}, the constant for X = (xi1 + xi2)^{-2} with exponential(c) xi.
inline double convolution_laplace_constant(double c) { return 3.0 * std::pow(c / 2.0, 2.0 / 3.0); }

struct DeBruijnResult {
  double numeric;
  double predicted;
  double ratio() const { return numeric / predicted; }
};

namespace detail {

// -log int exp(phi(s)) ds over (lo, hi) for a unimodal log-integrand,
// integrated relative to its peak so nothing underflows.
template <class Phi>
double neg_log_unimodal_integral(Phi&& phi, double lo, double hi, double guess) {
  const auto peak = minimize([&](double s) { return -phi(s); }, Bracket(std::max(lo, guess * 1e-3), std::min(hi, guess * 1e3)));
  const double top = -peak.value;
  auto g = [&](double s) { return std::exp(phi(s) - top); };
  const double brk[] = {peak.x};
  QuadratureOptions opt{0.0, 1e-12, 4000};
  auto r = integrate_adaptive(g, lo, std::min(hi, peak.x * 1e3), opt, brk);
  if (!r.converged) throw QuadratureError("log-domain integral did not converge", r.value, r.error);
  return -(top + std::log(r.value));
}

}  // namespace detail

// numeric = -log E exp(-lambda/(xi1 + xi2)^2), xi1 + xi2 ~ Gamma(2, c).
inline DeBruijnResult debruijn_check(double c, double lambda) {
  IBMEXIT_REQUIRE(c > 0 && lambda >= 0, DomainError, "debruijn_check: need c > 0, lambda >= 0");
  const double predicted = convolution_laplace_constant(c) * std::cbrt(lambda);
  if (lambda == 0.0) return {0.0, predicted};
  // gamma(2, c) density c^2 s e^{-cs}; peak of the weighted integrand near (2 lambda/c)^{1/3}
  const double guess = std::max(std::cbrt(2.0 * lambda / c), 1.0 / c);
  auto phi = [&](double s) { return 2.0 * std::log(c) + std::log(s) - c * s - lambda / (s * s); };
  return {detail::neg_log_unimodal_integral(phi, 0.0, std::numeric_limits<double>::infinity(), guess), predicted};
}

// Density gamma u^{-2} e^{-alpha/sqrt u} on u > 0 (gamma = alpha^2/2 normalizes);
// numeric = -log E e^{-lambda X}, integrated in a = log u.
inline DeBruijnResult small_ball_laplace_check(double alpha, double lambda) {
  IBMEXIT_REQUIRE(alpha > 0 && lambda >= 0, DomainError, "small_ball_laplace_check: need alpha > 0");
  const double predicted = 3.0 * std::pow(alpha, 2.0 / 3.0) * std::pow(2.0, -2.0 / 3.0) * std::cbrt(lambda);
  if (lambda == 0.0) return {0.0, predicted};
  const double log_gamma_c = 2.0 * std::log(alpha) - std::log(2.0);
  auto phi = [&](double a) { return log_gamma_c - a - alpha * std::exp(-0.5 * a) - lambda * std::exp(a); };
  // peak where alpha/2 e^{-a/2} = lambda e^a (ignoring the -a term)
  const double a_star = (2.0 / 3.0) * std::log(alpha / (2.0 * lambda));
  const auto peak = minimize([&](double a) { return -phi(a); }, Bracket(a_star - 30.0, a_star + 30.0));
  const double top = -peak.value;
  auto g = [&](double a) { return std::exp(phi(a) - top); };
  const double brk[] = {peak.x};
  QuadratureOptions opt{0.0, 1e-12, 4000};
  auto r = integrate_adaptive(g, peak.x - 60.0, peak.x + 60.0, opt, brk);
  if (!r.converged) throw QuadratureError("small_ball_laplace_check: quadrature", r.value, r.error);
  return {-(top + std::log(r.value)), predicted};
}

struct StretchedCoefficients {
  double proof_constant;  // (3/2) pi^{2/3} lambda^{2/3}
  double text_constant;   // (3/2) lambda^{2/3}
};

inline StretchedCoefficients stretched_coefficient(double lambda_D) {
  IBMEXIT_REQUIRE(lambda_D > 0, DomainError, "stretched_coefficient: need lambda > 0");
  const double l23 = std::pow(lambda_D, 2.0 / 3.0);
  return {1.5 * std::pow(std::numbers::pi, 2.0 / 3.0) * l23, 1.5 * l23};
}

struct VariationalResult {
  double numeric;
  double closed_form;
  double minimizer;
};

// min_{L > 0} [c L + pi^2 t / (2 L^2)] by 1-D minimization in log L.
inline VariationalResult variational_check(double c, double t) {
  IBMEXIT_REQUIRE(c > 0 && t > 0, DomainError, "variational_check: need c, t > 0");
  const double k = std::numbers::pi * std::numbers::pi * t / 2.0;
  auto h = [&](double logL) {
    const double L = std::exp(logL);
    return c * L + k / (L * L);
  };
  const auto m = minimize(h, Bracket(-50.0, 50.0), 1e-14);
  const double closed = 1.5 * std::pow(std::numbers::pi, 2.0 / 3.0) * std::pow(c, 2.0 / 3.0) * std::cbrt(t);
  return {m.value, closed, std::exp(m.x)};
}

}  // namespace ibmexit
