#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ibmexit {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_subdivisions = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod rule with its embedded 10-point Gauss rule.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980393684, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7, 9).
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod_21(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[10];
  double gauss = 0.0;
  double res_abs = std::fabs(kronrod);
  std::array<double, 10> f1{}, f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    kronrod += kKronrodWeights[j] * (f1[j] + f2[j]);
    res_abs += kKronrodWeights[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = 0.5 * kronrod;
  double res_asc = kKronrodWeights[10] * std::fabs(fc - mean);
  for (int j = 0; j < 10; ++j)
    res_asc += kKronrodWeights[j] * (std::fabs(f1[j] - mean) + std::fabs(f2[j] - mean));
  const double value = kronrod * half;
  res_abs *= std::fabs(half);
  res_asc *= std::fabs(half);
  double err = std::fabs((kronrod - gauss) * half);
  if (res_asc != 0.0 && err != 0.0) err = res_asc * std::fmin(1.0, std::pow(200.0 * err / res_asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (res_abs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::fmax(50.0 * eps * res_abs, err);
  if (!std::isfinite(value)) err = std::numeric_limits<double>::infinity();
  return {lo, hi, value, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod on a finite interval: the segment with the
// largest error estimate is bisected until the total error meets
// max(abs_tol, rel_tol*|value|).  Optional interior breakpoints seed the
// initial partition.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi, const QuadratureOptions& opt = {},
                                    std::span<const double> breakpoints = {}) {
  QuadratureResult out;
  if (lo == hi) {
    out.converged = true;
    return out;
  }
  const double sign = hi > lo ? 1.0 : -1.0;
  if (hi < lo) std::swap(lo, hi);
  std::vector<double> cuts{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto s = detail::gauss_kronrod_21(f, cuts[i], cuts[i + 1]);
    total += s.value;
    total_err += s.error;
    heap.push(s);
    out.evaluations += 21;
  }
  int splits = 0;
  while (total_err > std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(total)) && splits < opt.max_subdivisions) {
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;  // interval at machine resolution
    heap.pop();
    auto left = detail::gauss_kronrod_21(f, worst.lo, mid);
    auto right = detail::gauss_kronrod_21(f, mid, worst.hi);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  // Re-sum from scratch so incremental drift does not leak into the result.
  double value = 0.0, err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sign * value;
  out.error = err;
  out.subdivisions = splits;
  out.converged = err <= std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(value));
  return out;
}

// Integral over [lo, hi] where either end may be infinite; infinite ends are
// mapped to a finite range by x = lo + s/(1-s).
template <class F>
QuadratureResult integrate_result(F&& f, double lo, double hi, const QuadratureOptions& opt = {}) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (lo == -inf && hi == inf) {
    QuadratureOptions half = opt;
    half.abs_tol *= 0.5;
    auto a = integrate_result(f, -inf, 0.0, half);
    auto b = integrate_result(f, 0.0, inf, half);
    return {a.value + b.value, a.error + b.error, a.evaluations + b.evaluations,
            a.subdivisions + b.subdivisions, a.converged && b.converged};
  }
  if (hi == inf) {
    auto g = [&](double s) {
      if (s >= 1.0) return 0.0;
      const double w = 1.0 - s;
      const double v = f(lo + s / w) / (w * w);
      return std::isfinite(v) ? v : 0.0;
    };
    return integrate_adaptive(g, 0.0, 1.0, opt);
  }
  if (lo == -inf) {
    auto g = [&](double s) {
      if (s >= 1.0) return 0.0;
      const double w = 1.0 - s;
      const double v = f(hi - s / w) / (w * w);
      return std::isfinite(v) ? v : 0.0;
    };
    return integrate_adaptive(g, 0.0, 1.0, opt);
  }
  return integrate_adaptive(f, lo, hi, opt);
}

// Throwing front end: the estimate is returned only if its error estimate
// meets tol (absolute).
template <class F>
double integrate(F&& f, double lo, double hi, double tol = 1e-10) {
  QuadratureOptions opt;
  opt.abs_tol = tol;
  auto r = integrate_result(f, lo, hi, opt);
  if (!r.converged)
    throw QuadratureError("integrate: tolerance " + std::to_string(tol) + " not met, error estimate " +
                              std::to_string(r.error),
                          r.value, r.error);
  return r.value;
}

}  // namespace ibmexit
