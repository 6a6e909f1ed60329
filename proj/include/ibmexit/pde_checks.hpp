#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bm_laws.hpp"
#include "errors.hpp"
#include "exit_law.hpp"
#include "ibm.hpp"
#include "json.hpp"
#include "quadrature.hpp"
#include "roots.hpp"

namespace ibmexit {

// Clamped beam on (0,1): phi'''' = alpha^4 phi, phi = phi' = 0 at both ends.
struct BeamEigenpair {
  int k = 0;
  double alpha = 0.0;
  double lambda = 0.0;  // alpha^4
  double c = 0.0;       // normalization multiplying the raw sin/sinh form
  long double alpha_ext = 0.0L;  // root polished in extended precision

  // |cos(alpha) cosh(alpha) - 1| in extended precision.  The product is
  // ill-conditioned (cosh amplifies the rounding of alpha), so this stays
  // below 1e-10 only for the first few roots.
  double characteristic_residual() const {
    return static_cast<double>(std::fabs(std::cos(alpha_ext) * std::cosh(alpha_ext) - 1.0L));
  }
  // The well-conditioned form |cos(alpha) - 1/cosh(alpha)|.
  double scaled_residual() const { return std::fabs(std::cos(alpha) - 1.0 / std::cosh(alpha)); }
};

namespace detail {

// e^{-alpha} times the raw eigenfunction, with every hyperbolic product
// folded into decaying exponentials so nothing overflows for large alpha.
inline double beam_scaled_shape(double alpha, double x) {
  const double E = std::exp(-alpha);
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double ep = std::exp(alpha * (x - 1.0));   // e^{-alpha} e^{alpha x}
  const double em = std::exp(-alpha * (1.0 + x));  // e^{-alpha} e^{-alpha x}
  return E * std::cos(alpha * (1.0 - x)) + 0.5 * (std::exp(-alpha * x) + std::exp(-alpha * (2.0 - x))) +
         0.5 * (1.0 - E * E) * std::sin(alpha * x) - 0.5 * (1.0 + E * E) * std::cos(alpha * x) -
         sa * 0.5 * (ep - em) - ca * 0.5 * (ep + em);
}

inline double beam_characteristic(double a) { return std::cos(a) - 1.0 / std::cosh(a); }

}  // namespace detail

// k-th root of cos(alpha) cosh(alpha) = 1, bracketed in [k pi, (k+1) pi].
inline double beam_root(int k) {
  IBMEXIT_REQUIRE(k >= 1, DomainError, "beam_root: k >= 1");
  const double pi = std::numbers::pi;
  return find_root(detail::beam_characteristic, Bracket(k * pi, (k + 1) * pi), 1e-15);
}

inline BeamEigenpair beam_eigenpair(int k) {
  BeamEigenpair e;
  e.k = k;
  e.alpha = beam_root(k);
  long double a = e.alpha;
  for (int i = 0; i < 4; ++i) {
    const long double h = std::cos(a) * std::cosh(a) - 1.0L;
    const long double dh = -std::sin(a) * std::cosh(a) + std::cos(a) * std::sinh(a);
    a -= h / dh;
  }
  e.alpha_ext = a;
  e.lambda = std::pow(e.alpha, 4);
  auto sq = [&](double x) {
    const double v = detail::beam_scaled_shape(e.alpha, x);
    return v * v;
  };
  const double norm2 = integrate(sq, 0.0, 1.0, 1e-13);
  e.c = std::exp(-e.alpha) / std::sqrt(norm2);
  return e;
}

inline std::vector<BeamEigenpair> beam_eigenvalues(int K) {
  IBMEXIT_REQUIRE(K >= 1, DomainError, "beam_eigenvalues: K >= 1");
  std::vector<BeamEigenpair> out;
  out.reserve(K);
  for (int k = 1; k <= K; ++k) out.push_back(beam_eigenpair(k));
  return out;
}

inline double beam_eigenfunction(const BeamEigenpair& e, double x) {
  IBMEXIT_REQUIRE(x >= 0.0 && x <= 1.0, DomainError, "beam_eigenfunction: x outside [0,1]");
  return e.c * std::exp(e.alpha) * detail::beam_scaled_shape(e.alpha, x);
}

inline double beam_eigenfunction_integral(const BeamEigenpair& e) {
  return integrate([&](double x) { return beam_eigenfunction(e, x); }, 0.0, 1.0, 1e-13);
}

// P_x(tau_(0,1)(Z) > t), the same computation as the interval instance of
// ibm_survival_quadrature.
inline double g_interval(double t, double x, const IbmQuadratureOptions& opt = {}) {
  IBMEXIT_REQUIRE(t > 0, DomainError, "g_interval: need t > 0");
  return ibm_survival_quadrature(IntervalExitLaw(x), t, opt);
}

struct LaplaceSample {
  double lambda;
  double x;
  double value;
};

// int_0^inf e^{-lambda t} g(t,x) dt = (1/lambda) int_0^40 e^{-w} g(w/lambda, x) dw.
inline LaplaceSample laplace_g(double lambda, double x, double rel_tol = 1e-8) {
  IBMEXIT_REQUIRE(lambda > 0, DomainError, "laplace_g: need lambda > 0");
  const IntervalExitLaw law(x);
  IbmQuadratureOptions inner{0.1 * rel_tol, false, 4000};
  auto h = [&](double w) { return std::exp(-w) * ibm_survival_quadrature(law, w / lambda, inner); };
  QuadratureOptions opt{0.0, rel_tol, 200};
  const double brk[] = {1.0, 5.0};
  auto r = integrate_adaptive(h, 0.0, 40.0, opt, brk);
  if (!r.converged) throw QuadratureError("laplace_g: tolerance not met", r.value / lambda, r.error / lambda);
  return {lambda, x, r.value / lambda};
}

// Independent route: for Brownian motion leaving (-u, v) from 0,
// E e^{-lambda eta} = cosh(k(v-u)/2)/cosh(k(u+v)/2), k = sqrt(2 lambda), so
// lambda ghat = 1 - int int f(u) f(v) E e^{-lambda eta} du dv.
inline double laplace_g_closed_form(double lambda, double x, double rel_tol = 1e-10) {
  IBMEXIT_REQUIRE(lambda > 0, DomainError, "laplace_g_closed_form: need lambda > 0");
  const IntervalExitLaw law(x);
  const double k = std::sqrt(2.0 * lambda);
  auto kernel = [k](double u, double v) {
    return std::exp(-k * std::min(u, v)) * (1.0 + std::exp(-k * std::fabs(v - u))) / (1.0 + std::exp(-k * (u + v)));
  };
  auto r = detail::symmetric_double_integral(law, kernel, {-std::log(k)}, rel_tol, true, 4000);
  if (!r.converged) throw QuadratureError("laplace_g_closed_form: tolerance not met", r.value, r.error);
  return (1.0 - r.value) / lambda;
}

// sum_{n <= K} [int phi_n / (lambda + a lambda_n)] phi_n(x): what ghat would be
// if g solved a d^4g/dx^4 = dg/dt with clamped boundary data.
inline double spectral_g_hat(double lambda, double x, double a, const std::vector<BeamEigenpair>& pairs,
                             std::size_t K) {
  IBMEXIT_REQUIRE(lambda > 0 && a > 0, DomainError, "spectral_g_hat: need lambda, a > 0");
  IBMEXIT_REQUIRE(K <= pairs.size(), DomainError, "spectral_g_hat: not enough eigenpairs");
  double sum = 0.0;
  for (std::size_t n = 0; n < K; ++n)
    sum += beam_eigenfunction_integral(pairs[n]) / (lambda + a * pairs[n].lambda) * beam_eigenfunction(pairs[n], x);
  return sum;
}

inline double spectral_g_hat(double lambda, double x, double a, int K) {
  return spectral_g_hat(lambda, x, a, beam_eigenvalues(K), static_cast<std::size_t>(K));
}

inline std::vector<double> logspace(double lo, double hi, int count) {
  IBMEXIT_REQUIRE(lo > 0 && hi > lo && count >= 2, DomainError, "logspace: bad arguments");
  std::vector<double> v(count);
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) v[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return v;
}

struct FalsifyGridPoint {
  double t, x;
  double space_derivative;  // order 4 (or 2 for the control) in x
  double time_derivative;
};

struct FalsifyReport {
  std::string model;
  int order = 4;
  std::vector<double> a_grid;
  std::vector<double> residuals;
  double min_residual = 0.0;
  double best_a = 0.0;
  // unconstrained least-squares optimum (negative when the fit prefers a < 0)
  double a_star = 0.0;
  double residual_at_a_star = 0.0;
  std::vector<FalsifyGridPoint> grid;
};

inline nlohmann::ordered_json to_json(const FalsifyReport& r) {
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const auto& p : r.grid)
    grid.push_back({{"t", p.t}, {"x", p.x}, {"space_derivative", p.space_derivative}, {"time_derivative", p.time_derivative}});
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["a_grid"] = r.a_grid;
  j["min_residual"] = r.min_residual;
  j["best_a"] = r.best_a;
  j["a_star"] = r.a_star;
  j["residual_at_a_star"] = r.residual_at_a_star;
  j["grid"] = grid;
  return j;
}

struct FalsifyOptions {
  double h = 0.05;           // x step
  double time_step = 0.05;   // relative: delta = time_step * t
};

// Normalized RMS residual ||a D_x^order G - D_t G|| / ||D_t G|| over the grid,
// minimized over a_grid.  D_x by 5-point (order 4) or 3-point (order 2)
// central differences, D_t by the 5-point central difference.
template <class G>
FalsifyReport falsify_harness(G&& field, int order, std::string model, const std::vector<double>& a_grid,
                              const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                              const FalsifyOptions& opt = {}) {
  IBMEXIT_REQUIRE(order == 2 || order == 4, DomainError, "falsify: order must be 2 or 4");
  IBMEXIT_REQUIRE(!a_grid.empty() && !t_grid.empty() && !x_grid.empty(), DomainError, "falsify: empty grid");
  const double h = opt.h;
  FalsifyReport rep;
  rep.model = std::move(model);
  rep.order = order;
  rep.a_grid = a_grid;
  for (double t : t_grid) {
    IBMEXIT_REQUIRE(t > 0, DomainError, "falsify: t must be positive");
    for (double x : x_grid) {
      double dx;
      if (order == 4)
        dx = (field(t, x - 2 * h) - 4 * field(t, x - h) + 6 * field(t, x) - 4 * field(t, x + h) + field(t, x + 2 * h)) /
             (h * h * h * h);
      else
        dx = (field(t, x - h) - 2 * field(t, x) + field(t, x + h)) / (h * h);
      const double d = opt.time_step * t;
      const double dt =
          (-field(t + 2 * d, x) + 8 * field(t + d, x) - 8 * field(t - d, x) + field(t - 2 * d, x)) / (12 * d);
      rep.grid.push_back({t, x, dx, dt});
    }
  }
  double dd = 0, dtd = 0, tt = 0;
  for (const auto& p : rep.grid) {
    dd += p.space_derivative * p.space_derivative;
    dtd += p.space_derivative * p.time_derivative;
    tt += p.time_derivative * p.time_derivative;
  }
  IBMEXIT_REQUIRE(tt > 0, DomainError, "falsify: time derivative vanishes on the grid");
  auto residual = [&](double a) {
    double s = 0;
    for (const auto& p : rep.grid) {
      const double r = a * p.space_derivative - p.time_derivative;
      s += r * r;
    }
    return std::sqrt(s / tt);
  };
  rep.min_residual = std::numeric_limits<double>::infinity();
  for (double a : a_grid) {
    const double r = residual(a);
    rep.residuals.push_back(r);
    if (r < rep.min_residual) rep.min_residual = r, rep.best_a = a;
  }
  rep.a_star = dd > 0 ? dtd / dd : 0.0;
  rep.residual_at_a_star = residual(rep.a_star);
  return rep;
}

inline const std::vector<double>& default_falsify_t_grid() {
  static const std::vector<double> g{0.5, 1.0, 2.0, 4.0};
  return g;
}
inline const std::vector<double>& default_falsify_x_grid() {
  static const std::vector<double> g{0.3, 0.4, 0.5, 0.6, 0.7};
  return g;
}

// Tests a d^4g/dx^4 = dg/dt against the IBM survival function g.
inline FalsifyReport theorem2_falsify(const std::vector<double>& a_grid, const std::vector<double>& t_grid,
                                      const std::vector<double>& x_grid, const FalsifyOptions& opt = {}) {
  for (double x : x_grid)
    IBMEXIT_REQUIRE(x >= 0.2 && x <= 0.8, DomainError, "theorem2_falsify: x grid must lie in [0.2, 0.8]");
  IbmQuadratureOptions q{1e-11, false, 4000};
  auto g = [&](double t, double x) { return g_interval(t, x, q); };
  return falsify_harness(g, 4, "ibm_fourth_order", a_grid, t_grid, x_grid, opt);
}

// Control: Brownian survival v(t,x) = P_x(eta_(0,1) > t) against a v'' = v_t.
inline FalsifyReport heat_control_falsify(const std::vector<double>& a_grid, const std::vector<double>& t_grid,
                                          const std::vector<double>& x_grid, const FalsifyOptions& opt = {}) {
  auto v = [](double t, double x) { return interval_survival(x, t); };
  return falsify_harness(v, 2, "brownian_second_order", a_grid, t_grid, x_grid, opt);
}

}  // namespace ibmexit
