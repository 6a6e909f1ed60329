#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bm_laws.hpp"
#include "cone.hpp"
#include "errors.hpp"
#include "exit_law.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace ibmexit {

struct HalfLine {
  double x;
};
struct Interval {
  double x;
};
struct Wedge {
  WedgeSpec spec;
  ConeQuery q;
};
struct CustomCone {
  std::shared_ptr<const ConeSpectralData> data;
  ConeQuery q;
};
using DomainSpec = std::variant<HalfLine, Interval, Wedge, CustomCone>;

inline DomainSpec half_line(double x) { return HalfLine{x}; }
inline DomainSpec interval(double x) { return Interval{x}; }
inline DomainSpec wedge(WedgeSpec spec, ConeQuery q) { return Wedge{spec, q}; }
inline DomainSpec custom_cone(std::shared_ptr<const ConeSpectralData> data, ConeQuery q) {
  return CustomCone{std::move(data), q};
}

// Both inner exit times tau^+ and tau^- of the domain share this law.
inline std::shared_ptr<const ExitTimeLaw> make_exit_law(const DomainSpec& d, const SeriesPolicy& policy = {}) {
  struct Visitor {
    const SeriesPolicy& policy;
    std::shared_ptr<const ExitTimeLaw> operator()(const HalfLine& h) const {
      return std::make_shared<HalfLineExitLaw>(h.x);
    }
    std::shared_ptr<const ExitTimeLaw> operator()(const Interval& i) const {
      return std::make_shared<IntervalExitLaw>(i.x, policy);
    }
    std::shared_ptr<const ExitTimeLaw> operator()(const Wedge& w) const {
      IBMEXIT_REQUIRE(w.q.theta > 0 && w.q.theta < w.spec.angle && w.q.r > 0, DomainError,
                      "wedge query must lie strictly inside the wedge");
      SeriesPolicy cone = policy;
      cone.max_terms = std::max(policy.max_terms, cone_policy().max_terms);
      auto data = std::make_shared<const ConeSpectralData>(wedge_spectrum(w.spec, cone.max_terms));
      return std::make_shared<ConeExitLaw>(std::move(data), w.q, cone);
    }
    std::shared_ptr<const ExitTimeLaw> operator()(const CustomCone& c) const {
      IBMEXIT_REQUIRE(c.data != nullptr && c.q.r > 0, DomainError, "custom cone needs data and r > 0");
      SeriesPolicy cone = policy;
      cone.max_terms = std::max(policy.max_terms, c.data->size());
      return std::make_shared<ConeExitLaw>(c.data, c.q, cone);
    }
  };
  return std::visit(Visitor{policy}, d);
}

struct SurvivalPoint {
  double t;
  double value;
  std::optional<double> stderr_;
  std::optional<std::uint64_t> n;
};

struct SurvivalCurve {
  std::vector<SurvivalPoint> points;

  std::size_t size() const { return points.size(); }
  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      IBMEXIT_REQUIRE(i == 0 || points[i].t > points[i - 1].t, DomainError, "SurvivalCurve: t must increase");
      IBMEXIT_REQUIRE(points[i].value >= 0.0 && points[i].value <= 1.0, DomainError,
                      "SurvivalCurve: value outside [0, 1]");
    }
  }
};

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  unsigned stream_count = 1;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// CSV with header `t,value,stderr,n`; absent optional fields are left empty.
inline void write_csv(std::ostream& out, const SurvivalCurve& curve) {
  out << "t,value,stderr,n\n";
  for (const auto& p : curve.points) {
    out << format_double(p.t) << ',' << format_double(p.value) << ',';
    if (p.stderr_) out << format_double(*p.stderr_);
    out << ',';
    if (p.n) out << *p.n;
    out << '\n';
  }
}

inline SurvivalCurve read_csv(std::istream& in) {
  SurvivalCurve curve;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      IBMEXIT_REQUIRE(line == "t,value,stderr,n", DomainError, "survival CSV: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    while (fields.size() < 4) fields.emplace_back();
    SurvivalPoint p{std::stod(fields[0]), std::stod(fields[1]), std::nullopt, std::nullopt};
    if (!fields[2].empty()) p.stderr_ = std::stod(fields[2]);
    if (!fields[3].empty()) p.n = std::stoull(fields[3]);
    curve.points.push_back(p);
  }
  IBMEXIT_REQUIRE(header, DomainError, "survival CSV: missing header");
  return curve;
}

struct IbmQuadratureOptions {
  double rel_tol = 1e-9;
  // Also evaluate the full-square form and require agreement.
  bool check_full_square = true;
  int max_subdivisions = 4000;
};

struct IbmQuadratureResult {
  double value = 0.0;
  double error = 0.0;
  double full_square = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Integrates kernel(u, v) f(u) f(v) over the quadrant in logarithmic
// variables u = e^a, v = e^b, so algebraic tails become exponentially
// decaying and the essential singularity at 0 is resolved by adaptivity.
// `triangle` integrates v > u and doubles (the kernel must be symmetric);
// otherwise the whole square is used.
template <class Kernel>
QuadratureResult symmetric_double_integral(const ExitTimeLaw& law, Kernel&& kernel, std::vector<double> breaks,
                                           double rel_tol, bool triangle, int max_subdivisions) {
  const double a_lo = std::log(law.lower_limit());
  const double a_hi = std::log(law.upper_limit());
  breaks.push_back(std::log(law.scale()));
  QuadratureOptions inner_opt{1e-300, 0.1 * rel_tol, max_subdivisions};
  QuadratureOptions outer_opt{1e-300, rel_tol, max_subdivisions};
  double inner_failure = 0.0;
  auto outer = [&](double a) {
    const double u = std::exp(a);
    const double fu = law.density(u);
    if (fu == 0.0) return 0.0;
    auto inner = [&](double b) {
      const double v = std::exp(b);
      const double fv = law.density(v);
      return fv == 0.0 ? 0.0 : v * fv * kernel(u, v);
    };
    const double start = triangle ? a : a_lo;
    auto r = integrate_adaptive(inner, start, a_hi, inner_opt, breaks);
    if (!r.converged) inner_failure = std::max(inner_failure, r.error / std::max(std::fabs(r.value), 1e-300));
    return (triangle ? 2.0 : 1.0) * u * fu * r.value;
  };
  auto res = integrate_adaptive(outer, a_lo, a_hi, outer_opt, breaks);
  if (inner_failure > 100.0 * rel_tol) res.converged = false;
  return res;
}

inline QuadratureResult ibm_double_integral(const ExitTimeLaw& law, double t, double rel_tol, bool triangle,
                                            int max_subdivisions) {
  auto kernel = [t](double u, double v) { return two_sided_survival(u, v, t); };
  return symmetric_double_integral(law, kernel, {0.5 * std::log(t), std::log(t)}, rel_tol, triangle,
                                   max_subdivisions);
}

}  // namespace detail

// P_x(tau_D(Z) > t) = 2 int_0^inf int_u^inf P(eta_(-u,v) > t) f(u) f(v) dv du.
inline IbmQuadratureResult ibm_survival_quadrature_detailed(const ExitTimeLaw& law, double t,
                                                            const IbmQuadratureOptions& opt = {}) {
  IBMEXIT_REQUIRE(t >= 0.0, DomainError, "ibm_survival_quadrature: negative time");
  IbmQuadratureResult out;
  if (t == 0.0) {
    out.value = 1.0;
    out.full_square = 1.0;
    return out;
  }
  const auto tri = detail::ibm_double_integral(law, t, opt.rel_tol, true, opt.max_subdivisions);
  if (!tri.converged) throw QuadratureError("ibm_survival_quadrature: tolerance not met", tri.value, tri.error);
  out.value = std::clamp(tri.value, 0.0, 1.0);
  out.error = tri.error;
  if (opt.check_full_square) {
    const auto sq = detail::ibm_double_integral(law, t, opt.rel_tol, false, opt.max_subdivisions);
    out.full_square = sq.value;
    const double allowed = 10.0 * (tri.error + sq.error) + 100.0 * opt.rel_tol * std::fabs(tri.value);
    if (!sq.converged || std::fabs(sq.value - tri.value) > allowed)
      throw QuadratureError("ibm_survival_quadrature: triangle and full-square forms disagree", tri.value,
                            std::fabs(sq.value - tri.value));
  }
  return out;
}

inline double ibm_survival_quadrature(const ExitTimeLaw& law, double t, const IbmQuadratureOptions& opt = {}) {
  return ibm_survival_quadrature_detailed(law, t, opt).value;
}

inline double ibm_survival_quadrature(const DomainSpec& d, double t, const IbmQuadratureOptions& opt = {},
                                      const SeriesPolicy& policy = {}) {
  return ibm_survival_quadrature(*make_exit_law(d, policy), t, opt);
}

namespace detail {

template <class T>
T reduce_pairwise(std::vector<T> parts) {
  while (parts.size() > 1) {
    std::vector<T> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      T merged = parts[i];
      merged.merge(parts[i + 1]);
      next.push_back(merged);
    }
    if (parts.size() % 2 == 1) next.push_back(parts.back());
    parts = std::move(next);
  }
  return parts.front();
}

struct GridAccumulator {
  std::vector<MeanAccumulator> cells;
  void merge(const GridAccumulator& o) {
    if (cells.empty()) {
      cells = o.cells;
      return;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].merge(o.cells[i]);
  }
};

}  // namespace detail

// Rao-Blackwellized Monte Carlo: each replicate draws the two inner exit
// times and contributes P(eta_(-xi1, xi2) > t) for every t on the grid.
// Replicates are split into `streams` contiguous blocks, block b using
// RngStream(seed, b); the block results are merged pairwise in block order.
inline SurvivalCurve ibm_survival_mc(const ExitTimeLaw& law, std::span<const double> t_grid, std::uint64_t N,
                                     std::uint64_t seed, unsigned streams = 1, unsigned max_threads = 0) {
  IBMEXIT_REQUIRE(N >= 1, DomainError, "ibm_survival_mc: need at least one sample");
  IBMEXIT_REQUIRE(!t_grid.empty(), DomainError, "ibm_survival_mc: empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    IBMEXIT_REQUIRE(t_grid[i] >= 0 && (i == 0 || t_grid[i] > t_grid[i - 1]), DomainError,
                    "ibm_survival_mc: time grid must be nonnegative and increasing");
  streams = std::max(1u, streams);
  auto parts = run_blocks<detail::GridAccumulator>(
      N, streams,
      [&](unsigned b, std::uint64_t begin, std::uint64_t end) {
        detail::GridAccumulator acc;
        acc.cells.resize(t_grid.size());
        RngStream rng(seed, b);
        for (std::uint64_t i = begin; i < end; ++i) {
          const double xi1 = law.sample(rng);
          const double xi2 = law.sample(rng);
          for (std::size_t k = 0; k < t_grid.size(); ++k) acc.cells[k].add(two_sided_survival(xi1, xi2, t_grid[k]));
        }
        return acc;
      },
      max_threads);
  const auto total = detail::reduce_pairwise(std::move(parts));
  SurvivalCurve curve;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const auto& c = total.cells[k];
    curve.points.push_back({t_grid[k], c.mean, t_grid[k] == 0.0 ? 0.0 : c.stderr_of_mean(), c.n});
  }
  return curve;
}

inline SurvivalCurve ibm_survival_mc(const DomainSpec& d, std::span<const double> t_grid, std::uint64_t N,
                                     std::uint64_t seed, unsigned streams = 1, const SeriesPolicy& policy = {}) {
  return ibm_survival_mc(*make_exit_law(d, policy), t_grid, N, seed, streams);
}

// Conditioning on the outer path instead: simulate Y on a grid of step dt,
// take M = max(0, max Y) and m = max(0, max -Y), and average S(M) S(m) where
// S is the inner survival function.  Carries O(sqrt dt) bias from the
// discrete maximum.
inline McEstimate ibm_path_check(const ExitTimeLaw& law, double t, std::uint64_t N, double dt, std::uint64_t seed,
                                 unsigned streams = 1, unsigned max_threads = 0) {
  IBMEXIT_REQUIRE(dt > 0 && t >= 0 && N >= 1, DomainError, "ibm_path_check: need dt > 0, t >= 0, N >= 1");
  streams = std::max(1u, streams);
  McEstimate out;
  out.n = N;
  out.seed = seed;
  out.stream_count = streams;
  if (t == 0.0) {
    out.value = 1.0;
    return out;
  }
  const auto steps = static_cast<std::uint64_t>(std::max(1.0, std::round(t / dt)));
  const double sd = std::sqrt(t / static_cast<double>(steps));
  auto parts = run_blocks<MeanAccumulator>(
      N, streams,
      [&](unsigned b, std::uint64_t begin, std::uint64_t end) {
        MeanAccumulator acc;
        RngStream rng(seed, b);
        for (std::uint64_t i = begin; i < end; ++i) {
          double y = 0.0, hi = 0.0, lo = 0.0;
          for (std::uint64_t s = 0; s < steps; ++s) {
            y += sd * rng.standard_normal();
            hi = std::max(hi, y);
            lo = std::min(lo, y);
          }
          acc.add(law.survival(hi) * law.survival(-lo));
        }
        return acc;
      },
      max_threads);
  const auto total = detail::reduce_pairwise(std::move(parts));
  out.value = total.mean;
  out.stderr_ = total.stderr_of_mean();
  return out;
}

inline McEstimate ibm_path_check(const DomainSpec& d, double t, std::uint64_t N, double dt, std::uint64_t seed,
                                 unsigned streams = 1, const SeriesPolicy& policy = {}) {
  return ibm_path_check(*make_exit_law(d, policy), t, N, dt, seed, streams);
}

// A smooth bounded initial condition with (optionally) its second derivative.
struct TestFunction {
  std::function<double(double)> value;
  std::function<double(double)> second_derivative;
};

// u(t, x) = E_x f(Z_t) = 2 int_0^inf [int f(w) p_1(y, w - x) dw] p_1(t, y) dy,
// inner integral in the standardized variable w = x + sqrt(y) z.
inline double semigroup_u(const TestFunction& f, double t, double x, double tol = 1e-13) {
  IBMEXIT_REQUIRE(t > 0, DomainError, "semigroup_u: need t > 0");
  constexpr double z_cut = 12.0;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  QuadratureOptions opt{tol, 0.0, 2000};
  auto heat = [&](double y) {
    if (y == 0.0) return f.value(x);
    const double sy = std::sqrt(y);
    auto g = [&](double z) { return f.value(x + sy * z) * inv_sqrt_2pi * std::exp(-0.5 * z * z); };
    const double breaks[] = {0.0};
    auto r = integrate_adaptive(g, -z_cut, z_cut, opt, breaks);
    if (!r.converged) throw QuadratureError("semigroup_u: inner integral", r.value, r.error);
    return r.value;
  };
  const double sqrt_t = std::sqrt(t);
  auto outer = [&](double w) {
    // y = sqrt(t) w, so 2 p_1(t, y) dy = 2 phi(w) dw
    return 2.0 * inv_sqrt_2pi * std::exp(-0.5 * w * w) * heat(sqrt_t * w);
  };
  const double breaks[] = {1.0, 3.0};
  auto r = integrate_adaptive(outer, 0.0, z_cut, opt, breaks);
  if (!r.converged) throw QuadratureError("semigroup_u: outer integral", r.value, r.error);
  return r.value;
}

// R = (1/8) d^4u/dx^4 - du/dt + (1/2)(2 pi t)^{-1/2} f''(x), by finite
// differences of step h in both x and t.  With include_source = false the
// last term is dropped.
inline double theorem1_residual(const TestFunction& f, double t, double x, double h, bool include_source = true,
                                double tol = 1e-13) {
  IBMEXIT_REQUIRE(t > h && h > 0, DomainError, "theorem1_residual: need 0 < h < t");
  auto u = [&](double tt, double xx) { return semigroup_u(f, tt, xx, tol); };
  const double d4 = (u(t, x - 2 * h) - 4 * u(t, x - h) + 6 * u(t, x) - 4 * u(t, x + h) + u(t, x + 2 * h)) /
                    (h * h * h * h);
  const double dt = (u(t + h, x) - u(t - h, x)) / (2 * h);
  double r = d4 / 8.0 - dt;
  if (include_source) {
    const double lap = f.second_derivative ? f.second_derivative(x)
                                           : (f.value(x + h) - 2 * f.value(x) + f.value(x - h)) / (h * h);
    r += 0.5 / std::sqrt(2.0 * std::numbers::pi * t) * lap;
  }
  return r;
}

// Richardson extrapolation over {h, h/2} of the O(h^2) residual.
inline double theorem1_residual_extrapolated(const TestFunction& f, double t, double x, double h,
                                             bool include_source = true, double tol = 1e-13) {
  const double coarse = theorem1_residual(f, t, x, h, include_source, tol);
  const double fine = theorem1_residual(f, t, x, 0.5 * h, include_source, tol);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace ibmexit
