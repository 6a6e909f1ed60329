#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bm_laws.hpp"
#include "errors.hpp"
#include "exit_law.hpp"
#include "rng.hpp"
#include "roots.hpp"
#include "series_policy.hpp"
#include "special_functions.hpp"

namespace ibmexit {

struct WedgeSpec {
  double angle;

  explicit WedgeSpec(double xi) : angle(xi) {
    IBMEXIT_REQUIRE(xi > 0 && xi < 2 * std::numbers::pi, DomainError, "wedge angle must lie in (0, 2 pi)");
  }
  double exponent() const { return std::numbers::pi / (2.0 * angle); }
};

struct ConeQuery {
  double r;
  double theta;
};

struct SpectralTriple {
  double lambda;
  double m_at_x;
  double m_integral;
};

// Data-free envelope for the eigenfunction factors: |integral of m_j| <=
// sqrt(measure) and sup |m_j|^2 <= sup_constant * lambda_j^{(n-1)/2}.
struct EigenEnvelope {
  double measure;
  double sup_constant;
};

// The wedge term cap: near r^2/2t = 700 the series needs a few hundred terms.
inline SeriesPolicy cone_policy() {
  SeriesPolicy p;
  p.max_terms = 1000;
  return p;
}

class ConeSpectralData {
 public:
  // Evaluates m_j at a direction coordinate; absent for tabulated data, in
  // which case the stored m_at_x values are used and the query direction is
  // ignored.
  using Eigenfunction = std::function<double(int j, double theta)>;

  ConeSpectralData(int dimension, std::vector<SpectralTriple> triples, Eigenfunction eigenfunction = {},
                   std::optional<EigenEnvelope> envelope = std::nullopt)
      : n_(dimension), triples_(std::move(triples)), eigenfunction_(std::move(eigenfunction)), envelope_(envelope) {
    IBMEXIT_REQUIRE(n_ >= 2, DomainError, "cone dimension must be at least 2");
    IBMEXIT_REQUIRE(!triples_.empty(), DomainError, "spectral data is empty");
    const double shift = 0.5 * n_ - 1.0;
    for (std::size_t j = 0; j < triples_.size(); ++j) {
      IBMEXIT_REQUIRE(triples_[j].lambda > 0, DomainError, "eigenvalues must be positive");
      IBMEXIT_REQUIRE(j == 0 || triples_[j].lambda >= triples_[j - 1].lambda, DomainError,
                      "eigenvalues must be nondecreasing");
      const double gamma = std::sqrt(triples_[j].lambda + shift * shift);
      const double a = gamma - shift;
      gamma_.push_back(gamma);
      a_.push_back(a);
      log_ratio_.push_back(log_gamma(0.5 * (a + n_)) - log_gamma(a + 0.5 * n_));
    }
  }

  int dimension() const { return n_; }
  int size() const { return static_cast<int>(triples_.size()); }
  // 1-based accessors, matching the series index j.
  const SpectralTriple& triple(int j) const { return triples_.at(j - 1); }
  double gamma(int j) const { return gamma_.at(j - 1); }
  double a(int j) const { return a_.at(j - 1); }
  // ln[Gamma((a_j + n)/2) / Gamma(a_j + n/2)]
  double log_gamma_ratio(int j) const { return log_ratio_.at(j - 1); }
  double B(int j) const { return std::exp(log_ratio_.at(j - 1)) * triple(j).m_integral; }
  double exponent() const { return 0.5 * a_.front(); }
  bool has_eigenfunction() const { return static_cast<bool>(eigenfunction_); }
  const std::optional<EigenEnvelope>& envelope() const { return envelope_; }

  double m_at(int j, const ConeQuery& q) const { return eigenfunction_ ? eigenfunction_(j, q.theta) : triple(j).m_at_x; }

 private:
  int n_;
  std::vector<SpectralTriple> triples_;
  Eigenfunction eigenfunction_;
  std::optional<EigenEnvelope> envelope_;
  std::vector<double> gamma_, a_, log_ratio_;
};

inline ConeSpectralData wedge_spectrum(double xi, int J) {
  const WedgeSpec spec(xi);
  IBMEXIT_REQUIRE(J >= 1, DomainError, "wedge_spectrum: need at least one term");
  const double pi = std::numbers::pi;
  const double norm = std::sqrt(2.0 / xi);
  std::vector<SpectralTriple> triples;
  for (int j = 1; j <= J; ++j) {
    const double lambda = (j * pi / xi) * (j * pi / xi);
    const double integral = (j % 2 == 1) ? norm * 2.0 * xi / (j * pi) : 0.0;
    triples.push_back({lambda, 0.0, integral});
  }
  auto m = [norm, xi](int j, double theta) { return norm * std::sin(j * std::numbers::pi * theta / xi); };
  // sup m_j^2 = 2/xi <= (2/pi) lambda_j^{1/2} since lambda_j^{1/2} >= pi/xi.
  return ConeSpectralData(2, std::move(triples), m, EigenEnvelope{xi, 2.0 / pi});
}

inline ConeSpectralData wedge_spectrum(const WedgeSpec& spec, int J) { return wedge_spectrum(spec.angle, J); }

// Rows `lambda,m_at_x,m_integral`, one per eigenvalue in ascending order.
inline ConeSpectralData read_spectral_csv(std::istream& in, int dimension = 2) {
  std::string line;
  IBMEXIT_REQUIRE(static_cast<bool>(std::getline(in, line)), DomainError, "spectral CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  IBMEXIT_REQUIRE(line == "lambda,m_at_x,m_integral", DomainError, "spectral CSV: unexpected header '" + line + "'");
  std::vector<SpectralTriple> triples;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    SpectralTriple t{};
    IBMEXIT_REQUIRE(static_cast<bool>(fields >> t.lambda >> t.m_at_x >> t.m_integral), DomainError,
                    "spectral CSV: malformed row " + std::to_string(row));
    triples.push_back(t);
  }
  return ConeSpectralData(dimension, std::move(triples));
}

inline ConeSpectralData read_spectral_csv(const std::string& path, int dimension = 2) {
  std::ifstream in(path);
  IBMEXIT_REQUIRE(in.good(), DomainError, "spectral CSV: cannot open " + path);
  return read_spectral_csv(in, dimension);
}

// Tabulates the triples with m_at_x evaluated at the query direction.
inline void write_spectral_csv(std::ostream& out, const ConeSpectralData& spec, const ConeQuery& q) {
  out << "lambda,m_at_x,m_integral\n" << std::setprecision(17);
  for (int j = 1; j <= spec.size(); ++j)
    out << spec.triple(j).lambda << ',' << spec.m_at(j, q) << ',' << spec.triple(j).m_integral << '\n';
}

enum class SeriesKind { survival, density };

namespace detail {

inline void check_query(const ConeQuery& q, double t) {
  IBMEXIT_REQUIRE(q.r > 0, DomainError, "cone query radius must be positive");
  IBMEXIT_REQUIRE(t > 0, DomainError, "cone evaluation needs t > 0");
}

// Upper bound for |coefficient of term j| = |integral m_j| * |m_j(x)|.
inline double coefficient_envelope(const ConeSpectralData& spec, int j, const ConeQuery& q) {
  if (const auto& env = spec.envelope()) {
    const double lam = spec.triple(j).lambda;
    return std::sqrt(env->measure * env->sup_constant * std::pow(lam, 0.5 * (spec.dimension() - 1)));
  }
  return std::fabs(spec.triple(j).m_integral * spec.m_at(j, q));
}

// Term j of the cone survival series or its time derivative series.  The
// density term uses d/dz[z^a M(a,c,-z)] = a z^{a-1} M(a+1,c,-z), which equals
// the termwise-differentiated form with the derivative identity for 1F1 but
// has no cancellation between its two pieces.
inline double cone_term(const ConeSpectralData& spec, int j, const ConeQuery& q, double z, double t, SeriesKind kind) {
  const double coeff = spec.triple(j).m_integral * spec.m_at(j, q);
  if (coeff == 0.0) return 0.0;
  const double alpha = 0.5 * spec.a(j);
  const double b = spec.a(j) + 0.5 * spec.dimension();
  if (kind == SeriesKind::survival) {
    const double logmag = spec.log_gamma_ratio(j) + alpha * std::log(z) + log_kummer_1F1(alpha, b, -z);
    return coeff * std::exp(logmag);
  }
  const double logmag = spec.log_gamma_ratio(j) + alpha * std::log(z) + log_kummer_1F1(alpha + 1.0, b, -z);
  return coeff * alpha * std::exp(logmag) / t;
}

}  // namespace detail

// Bound on |term j| of the survival series (or of the density series), from the integral
// representation of 1F1 behind the bound x^a 1F1(a, c, -x) <=
// x^k Gamma(c)Gamma(a-k)/(Gamma(a)Gamma(c-a)) (any integer 0 < k < a).  Two
// rigorous forms are combined: that bound at the best k >= n + 4, and the same
// integral with (1 - u/x)^{c-a-1} <= exp(-(c-a-1)u/x) kept, which gives
// x^a 1F1(a, c, -x) <= Gamma(c)/Gamma(c-a) (1 + (c-a-1)/x)^{-a} and is the
// sharper one when x is large.  Valid once a_j > 2(n + 4); below that the term
// itself is returned.
inline double truncation_bound(const ConeSpectralData& spec, int j, const ConeQuery& q, double t,
                               SeriesKind kind = SeriesKind::survival) {
  detail::check_query(q, t);
  const double z = q.r * q.r / (2.0 * t);
  const int k_min = spec.dimension() + 4;
  const double alpha = 0.5 * spec.a(j);
  if (!(spec.a(j) > 2.0 * k_min)) return std::fabs(detail::cone_term(spec, j, q, z, t, kind));
  const double env = detail::coefficient_envelope(spec, j, q);
  if (env == 0.0) return 0.0;
  const int k_max = static_cast<int>(std::ceil(alpha)) - 1;
  const double beta = spec.a(j) + 0.5 * spec.dimension() - alpha - 1.0;  // c - a - 1
  auto log_bound = [&](int k) {
    const double lz = k * std::log(z);
    if (kind == SeriesKind::survival) return lz + log_gamma(alpha - k) - log_gamma(alpha);
    const double first = std::log(alpha) + log_gamma(alpha - k);
    const double second = log_gamma(alpha + 1.0 - k);
    const double hi = std::max(first, second);
    return lz + hi + std::log1p(std::exp(std::min(first, second) - hi)) - log_gamma(alpha) - std::log(t);
  };
  // The survival form decreases in k while k < alpha - 1 - z.
  const int k_star = std::clamp(static_cast<int>(std::ceil(alpha - 1.0 - z)), k_min, k_max);
  double best = log_bound(k_star);
  if (k_star > k_min) best = std::min(best, log_bound(k_star - 1));
  if (k_star < k_max) best = std::min(best, log_bound(k_star + 1));
  if (kind == SeriesKind::survival) {
    best = std::min(best, -alpha * std::log1p(beta / z));
  } else if (beta - 1.0 >= 0.0) {
    // alpha z^alpha 1F1(alpha+1, c, -z) / t with c - (alpha+1) - 1 = beta - 1
    best = std::min(best, std::log(alpha * beta / (z * t)) - (alpha + 1.0) * std::log1p((beta - 1.0) / z));
  }
  return env * std::exp(best);
}

namespace detail {

inline double cone_series(const ConeSpectralData& spec, const ConeQuery& q, double t, const SeriesPolicy& policy,
                          SeriesKind kind) {
  check_query(q, t);
  policy.validate();
  const double z = q.r * q.r / (2.0 * t);
  const int cap = std::min(spec.size(), policy.max_terms);
  double sum = 0.0, biggest = 0.0, prev = INFINITY;
  for (int j = 1; j <= cap; ++j) {
    const double term = cone_term(spec, j, q, z, t, kind);
    sum += term;
    biggest = std::max(biggest, std::fabs(term));
    double scale = std::max(std::fabs(sum), 1e-4 * biggest);
    if (kind == SeriesKind::survival) scale = std::min(1.0, scale);
    const double tol = policy.abs_tol * scale;
    // Small terms alone prove nothing (m_j can vanish at the query point), so
    // stopping also needs the tail bound, which only exists past a_j > 2(n+4).
    if (j >= 2 && std::fabs(term) <= tol && std::fabs(prev) <= tol && spec.a(j) > 2.0 * (spec.dimension() + 4)) {
      if (truncation_bound(spec, j, q, t, kind) <= tol) {
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * biggest;
        const double slack = std::max(10.0 * policy.abs_tol * (kind == SeriesKind::density ? 1.0 / t : 1.0), noise);
        if (sum < -slack) throw TruncationError("cone series: negative value beyond clipping slack");
        if (kind == SeriesKind::survival && sum > 1.0 + slack)
          throw TruncationError("cone series: survival above 1 beyond clipping slack");
        return kind == SeriesKind::survival ? std::clamp(sum, 0.0, 1.0) : std::max(sum, 0.0);
      }
    }
    prev = term;
  }
  throw TruncationError("cone series: not converged within " + std::to_string(cap) + " terms at r^2/2t = " +
                        std::to_string(z));
}

}  // namespace detail

// Survival of planar (or general) cone Brownian motion; r^2/2t > 700 is the
// documented small-time regime where the value is 1 to tolerance.
inline double cone_survival(const ConeSpectralData& spec, const ConeQuery& q, double t,
                            const SeriesPolicy& policy = cone_policy()) {
  detail::check_query(q, t);
  if (q.r * q.r / (2.0 * t) > 700.0) return 1.0;
  return detail::cone_series(spec, q, t, policy, SeriesKind::survival);
}

inline double cone_exit_density(const ConeSpectralData& spec, const ConeQuery& q, double t,
                                const SeriesPolicy& policy = cone_policy()) {
  detail::check_query(q, t);
  if (q.r * q.r / (2.0 * t) > 700.0) return 0.0;
  return detail::cone_series(spec, q, t, policy, SeriesKind::density);
}

// Exact inverse-CDF sampler: every draw solves the series equation directly.
inline double sample_cone_exit(const ConeSpectralData& spec, const ConeQuery& q, RngStream& stream,
                               const SeriesPolicy& policy = cone_policy()) {
  const double U = stream.uniform();
  const double t_lo = q.r * q.r / 1400.0;
  const double lead = std::fabs(spec.B(1) * spec.m_at(1, q)) * std::pow(0.5 * q.r * q.r, 0.5 * spec.a(1));
  const double guess = std::max(std::pow(lead / U, 2.0 / spec.a(1)), 2.0 * t_lo);
  return detail::invert_survival([&](double t) { return cone_survival(spec, q, t, policy); },
                                 [&](double t) { return cone_exit_density(spec, q, t, policy); }, U, guess);
}

namespace detail {

// Piecewise Chebyshev-Lobatto interpolant on equal panels of a log-time axis.
class LogTimeTable {
 public:
  static constexpr int kOrder = 16;

  LogTimeTable() = default;
  template <class F>
  LogTimeTable(double t_lo, double t_hi, double panel_width, F&& f) : s_lo_(std::log(t_lo)) {
    const double span = std::log(t_hi) - s_lo_;
    panels_ = std::max(1, static_cast<int>(std::ceil(span / panel_width)));
    width_ = span / panels_;
    values_.resize(static_cast<std::size_t>(panels_) * kOrder + 1);
    for (int p = 0; p < panels_; ++p)
      for (int i = (p == 0 ? 0 : 1); i <= kOrder; ++i) values_[p * kOrder + i] = f(std::exp(node(p, i)));
  }

  double s_lo() const { return s_lo_; }
  double s_hi() const { return s_lo_ + panels_ * width_; }
  int panels() const { return panels_; }
  double panel_start(int p) const { return s_lo_ + p * width_; }
  double width() const { return width_; }
  double at_node(int p, int i) const { return values_[p * kOrder + i]; }

  double operator()(double s) const {
    int p = static_cast<int>((s - s_lo_) / width_);
    p = std::clamp(p, 0, panels_ - 1);
    return in_panel(p, s);
  }

  double in_panel(int p, double s) const {
    const double x = 2.0 * (s - panel_start(p)) / width_ - 1.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= kOrder; ++i) {
      const double xi = -std::cos(std::numbers::pi * i / kOrder);
      const double diff = x - xi;
      if (diff == 0.0) return at_node(p, i);
      double w = (i % 2 == 0) ? 1.0 : -1.0;
      if (i == 0 || i == kOrder) w *= 0.5;
      w /= diff;
      num += w * at_node(p, i);
      den += w;
    }
    return num / den;
  }

 private:
  // Node i of panel p; i = 0 is the left end and is shared with the right end
  // (i = kOrder) of panel p - 1.
  double node(int p, int i) const {
    return panel_start(p) + 0.5 * width_ * (1.0 - std::cos(std::numbers::pi * i / kOrder));
  }

  double s_lo_ = 0.0, width_ = 1.0;
  int panels_ = 0;
  std::vector<double> values_;
};

}  // namespace detail

// Cone exit law with survival and density tabulated on a log-time grid
// between r^2/1400 and 500 r^2; outside that range the series is evaluated
// directly.  Built once per (spectral data, query) for quadrature and
// Monte Carlo use.
class ConeExitLaw final : public ExitTimeLaw {
 public:
  ConeExitLaw(std::shared_ptr<const ConeSpectralData> spec, ConeQuery q, SeriesPolicy policy = cone_policy())
      : spec_(std::move(spec)), q_(q), policy_(policy) {
    detail::check_query(q_, 1.0);
    t_lo_ = q_.r * q_.r / 1400.0;
    t_hi_ = 500.0 * q_.r * q_.r;
    survival_ = detail::LogTimeTable(t_lo_, t_hi_, kPanelWidth, [&](double t) { return cone_survival(*spec_, q_, t, policy_); });
    density_ = detail::LogTimeTable(t_lo_, t_hi_, kPanelWidth, [&](double t) { return cone_exit_density(*spec_, q_, t, policy_); });
  }

  double survival(double t) const override {
    if (t <= t_lo_) return 1.0;
    if (t >= t_hi_) return cone_survival(*spec_, q_, t, policy_);
    return std::clamp(survival_(std::log(t)), 0.0, 1.0);
  }
  double density(double t) const override {
    if (t <= t_lo_) return 0.0;
    if (t >= t_hi_) return cone_exit_density(*spec_, q_, t, policy_);
    return std::max(0.0, density_(std::log(t)));
  }
  double lower_limit() const override { return t_lo_; }
  double scale() const override { return q_.r * q_.r; }

  double sample(RngStream& stream) const override { return quantile(stream.uniform()); }

  // Survival quantile: the t with survival(t) = U.
  double quantile(double U) const {
    constexpr int right = detail::LogTimeTable::kOrder;
    if (U >= survival_.at_node(0, 0)) return t_lo_;
    const int last = survival_.panels() - 1;
    if (U > survival_.at_node(last, right)) {
      // First panel whose right-end survival is at or below U.
      int lo = 0, hi = last;
      while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (survival_.at_node(mid, right) > U) lo = mid + 1; else hi = mid;
      }
      const int p = lo;
      const double a = survival_.panel_start(p);
      const double b = a + survival_.width();
      auto g = [&](double s) { return survival_.in_panel(p, s) - U; };
      if (g(b) >= 0.0) return std::exp(b);
      if (g(a) <= 0.0) return std::exp(a);
      return std::exp(find_root(g, Bracket(a, b), 1e-14));
    }
    const double guess = t_hi_ * std::pow(survival_.at_node(last, right) / U, 1.0 / spec_->exponent());
    return detail::invert_survival([&](double t) { return cone_survival(*spec_, q_, t, policy_); },
                                   [&](double t) { return cone_exit_density(*spec_, q_, t, policy_); }, U, guess);
  }

  static constexpr double kPanelWidth = 0.25;

  const ConeSpectralData& spectral_data() const { return *spec_; }
  const ConeQuery& query() const { return q_; }

 private:
  std::shared_ptr<const ConeSpectralData> spec_;
  ConeQuery q_;
  SeriesPolicy policy_;
  double t_lo_, t_hi_;
  detail::LogTimeTable survival_, density_;
};

}  // namespace ibmexit
