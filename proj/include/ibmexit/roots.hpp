#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "errors.hpp"

namespace ibmexit {

struct Bracket {
  double lo;
  double hi;
  Bracket(double lo_, double hi_) : lo(lo_), hi(hi_) {
    IBMEXIT_REQUIRE(lo < hi, BracketError, "Bracket: need lo < hi");
  }
};

// Brent's method (inverse quadratic interpolation with bisection fallback).
// The returned root always lies inside the initial bracket.
template <class F>
double find_root(F&& f, Bracket br, double tol = 1e-12, int max_iter = 500) {
  double a = br.lo, b = br.hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::isnan(fa) || std::isnan(fb) || (fa > 0) == (fb > 0))
    throw BracketError("find_root: no sign change on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::fabs(p);
      if (2.0 * p < std::fmin(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::fabs(d) > tol1) ? d : std::copysign(tol1, xm);
    fb = f(b);
  }
  throw ConvergenceError("find_root: iteration cap reached");
}

// Newton's method kept inside a shrinking bracket; fdf returns {f, f'}.
// Falls back to bisection whenever a step leaves the bracket or stalls.
template <class FdF>
double newton_bracketed(FdF&& fdf, Bracket br, double x0, double rel_tol = 1e-13, int max_iter = 200) {
  double lo = br.lo, hi = br.hi;
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  (void)dlo;
  (void)dhi;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw BracketError("newton_bracketed: no sign change");
  const bool increasing = fhi > 0;
  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  for (int iter = 0; iter < max_iter; ++iter) {
    auto [fx, dfx] = fdf(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == increasing)
      hi = x;
    else
      lo = x;
    double next = (dfx != 0.0 && std::isfinite(dfx)) ? x - fx / dfx : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= rel_tol * std::fabs(next) || hi - lo <= rel_tol * std::fabs(hi)) return next;
    x = next;
  }
  return x;
}

struct MinimumResult {
  double x;
  double value;
};

// Brent's derivative-free minimizer on [lo, hi].
template <class F>
MinimumResult minimize(F&& f, Bracket br, double tol = 1e-12, int max_iter = 500) {
  constexpr double golden = 0.3819660112501051;
  double a = br.lo, b = br.hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::fabs(x) + 1e-300;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) return {x, fx};
    bool golden_step = true;
    if (std::fabs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0) p = -p;
      q = std::fabs(q);
      const double etemp = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= xm) ? a - x : b - x;
      d = golden * e;
    }
    const double u = (std::fabs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx};
}

}  // namespace ibmexit
