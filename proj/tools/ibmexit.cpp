// Command-line front end: survive / verify / density / eigen / laplace.
#include <ibmexit.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <algorithm>
#include <map>
#include <set>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

using json = nlohmann::ordered_json;
using namespace ibmexit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// lin:min:max:count or log:min:max:count
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4 || (parts[0] != "lin" && parts[0] != "log"))
    throw UsageError("grid '" + spec + "' must look like lin:min:max:count or log:min:max:count");
  double lo, hi;
  long count;
  try {
    lo = std::stod(parts[1]);
    hi = std::stod(parts[2]);
    count = std::stol(parts[3]);
  } catch (const std::exception&) {
    throw UsageError("grid '" + spec + "' has non-numeric fields");
  }
  if (count < 2) throw UsageError("grid '" + spec + "': count must be at least 2");
  if (!(hi > lo)) throw UsageError("grid '" + spec + "': max must exceed min");
  std::vector<double> g(count);
  if (parts[0] == "lin") {
    for (long i = 0; i < count; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  } else {
    if (lo <= 0) throw UsageError("grid '" + spec + "': log grid needs min > 0");
    for (long i = 0; i < count; ++i)
      g[i] = std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * static_cast<double>(i) / (count - 1));
    g.front() = lo;
    g.back() = hi;
  }
  return g;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("cannot parse number '" + item + "'");
    }
  }
  if (v.empty()) throw UsageError("empty list");
  return v;
}

struct RunConfig {
  std::string command;
  std::string domain = "half-line";
  double x = 1.0;
  double angle = std::numbers::pi;
  double r = 1.0;
  double theta = -1.0;  // negative: half the opening angle
  std::string spectral_csv;
  int dimension = 2;
  std::string t_grid = "log:1e1:1e4:25";
  std::string method;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
  unsigned streams = 1;
  double dt = 1e-3;
  std::string fit;
  double tol = 1e-9;
  std::string output;
  std::string suite;
  std::string angles = "0.7853981634,1.5707963268,3.1415926536";
  int count = 5;
  std::string u_grid = "log:1e-3:10:50";
  std::string x_grid = "lin:0:1:101";
  std::string lambda_grid = "log:1e-1:1e3:9";
};

// A flag bound to a RunConfig field, also settable from the JSON config file.
struct Binding {
  std::string key;
  CLI::Option* option;
  std::function<void(const json&)> set;
  std::function<json()> get;
};

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& help, RunConfig& cfg)
      : sub_(app.add_subcommand(name, help)), cfg_(cfg), name_(name) {
    sub_->add_option("--config", config_file_, "JSON file with flag values (flags win)");
  }

  template <class T>
  Command& bind(const std::string& key, T& field, const std::string& help) {
    auto* opt = sub_->add_option("--" + key, field, help);
    bindings_.push_back({key, opt, [&field](const json& j) { field = j.get<T>(); }, [&field] { return json(field); }});
    return *this;
  }

  CLI::App* app() const { return sub_; }
  const std::string& name() const { return name_; }

  bool given(const std::string& key) const {
    for (const auto& b : bindings_)
      if (b.key == key) return b.option->count() > 0 || from_file_.count(key) > 0;
    return false;
  }

  void apply_config_file() {
    if (config_file_.empty()) return;
    std::ifstream in(config_file_);
    if (!in) throw UsageError("cannot open config file " + config_file_);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string key = it.key();
      std::replace(key.begin(), key.end(), '_', '-');
      auto b = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding& x) { return x.key == key; });
      if (b == bindings_.end()) throw UsageError("config file: unknown key '" + it.key() + "' for " + name_);
      if (b->option->count() > 0) continue;
      try {
        b->set(it.value());
      } catch (const json::exception&) {
        throw UsageError("config file: wrong type for '" + it.key() + "'");
      }
      from_file_.insert(key);
    }
  }

  json effective() const {
    json j;
    j["command"] = name_;
    for (const auto& b : bindings_) j[b.key] = b.get();
    return j;
  }

 private:
  CLI::App* sub_;
  RunConfig& cfg_;
  std::string name_;
  std::string config_file_;
  std::vector<Binding> bindings_;
  std::set<std::string> from_file_;
};

void bind_domain(Command& c, RunConfig& cfg) {
  c.bind("domain", cfg.domain, "half-line | interval | wedge | custom-cone")
      .bind("x", cfg.x, "start point (distance for half-line, position in (0,1) for interval)")
      .bind("angle", cfg.angle, "wedge opening angle")
      .bind("r", cfg.r, "cone start radius")
      .bind("theta", cfg.theta, "wedge start direction (default: half the angle)")
      .bind("spectral-csv", cfg.spectral_csv, "custom cone data, header lambda,m_at_x,m_integral")
      .bind("dimension", cfg.dimension, "custom cone dimension");
}

DomainSpec domain_from(const RunConfig& cfg) {
  if (cfg.domain == "half-line") return half_line(cfg.x);
  if (cfg.domain == "interval") return interval(cfg.x);
  if (cfg.domain == "wedge") {
    const double theta = cfg.theta < 0 ? 0.5 * cfg.angle : cfg.theta;
    return wedge(WedgeSpec(cfg.angle), ConeQuery{cfg.r, theta});
  }
  if (cfg.domain == "custom-cone") {
    if (cfg.spectral_csv.empty()) throw UsageError("custom-cone needs --spectral-csv");
    auto data = std::make_shared<const ConeSpectralData>(read_spectral_csv(cfg.spectral_csv, cfg.dimension));
    return custom_cone(std::move(data), ConeQuery{cfg.r, 0.0});
  }
  throw UsageError("unknown domain '" + cfg.domain + "'");
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_header(std::ostream& out, const json& config) { out << "# config: " << config.dump() << '\n'; }

// --- survive ---------------------------------------------------------------

int cmd_survive(const RunConfig& cfg, const json& config) {
  const auto grid = parse_grid(cfg.t_grid);
  if (cfg.samples < 1) throw UsageError("--samples must be at least 1");
  if (cfg.streams < 1) throw UsageError("--streams must be at least 1");
  if (!(cfg.tol > 0)) throw UsageError("--tol must be positive");
  if (!(cfg.dt > 0)) throw UsageError("--dt must be positive");
  const auto law = make_exit_law(domain_from(cfg));
  SurvivalCurve curve;
  const std::string method = cfg.method.empty() ? "quadrature" : cfg.method;
  if (method == "quadrature") {
    IbmQuadratureOptions opt;
    opt.rel_tol = cfg.tol;
    for (double t : grid) curve.points.push_back({t, t == 0.0 ? 1.0 : ibm_survival_quadrature(*law, t, opt), {}, {}});
  } else if (method == "mc") {
    curve = ibm_survival_mc(*law, grid, cfg.samples, cfg.seed, cfg.streams);
  } else if (method == "path") {
    for (double t : grid) {
      const auto e = ibm_path_check(*law, t, cfg.samples, cfg.dt, cfg.seed, cfg.streams);
      curve.points.push_back({t, e.value, e.stderr_, e.n});
    }
  } else {
    throw UsageError("unknown method '" + method + "' (quadrature | mc | path)");
  }
  Output out(cfg.output);
  write_header(out.stream(), config);
  write_csv(out.stream(), curve);
  if (!cfg.fit.empty()) {
    const auto fit = fit_tail(curve, parse_tail_kind(cfg.fit));
    std::cout << "# fit: " << to_json(fit).dump() << '\n';
  }
  return kExitOk;
}

// --- verify ----------------------------------------------------------------

struct Report {
  json criteria = json::array();
  bool all_pass = true;
  void add(const std::string& name, bool pass, json details) {
    json c;
    c["name"] = name;
    c["pass"] = pass;
    c["details"] = std::move(details);
    criteria.push_back(std::move(c));
    all_pass = all_pass && pass;
  }
};

std::string short_number(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

// Regime check shared by the wedge and synthetic suites.
void regime_check(Report& rep, const std::string& name, double p, const SurvivalCurve& curve,
                  std::pair<double, double> window, double tol) {
  const auto predicted = predicted_regime(p);
  const auto pure = fit_tail(curve, TailKind::pure_power, window);
  json d;
  d["p"] = p;
  d["predicted"] = to_string(predicted.kind);
  d["pure_power"] = to_json(pure);
  if (predicted.kind == TailKind::pure_power) {
    d["expected_exponent"] = predicted.exponent;
    d["tolerance"] = tol;
    rep.add(name, std::fabs(pure.exponent_or_coefficient - predicted.exponent) <= tol, d);
    return;
  }
  const auto plog = fit_tail(curve, TailKind::power_log, window);
  d["power_log"] = to_json(plog);
  // value t / ln t over the top decade
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& pt : curve.points)
    if (pt.t >= window.second / 10.0 && pt.t <= window.second) {
      const double s = pt.value * pt.t / std::log(pt.t);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  const double mid = 0.5 * (lo + hi);
  const double spread = (hi - lo) / (2.0 * mid);
  d["top_decade_relative_spread"] = spread;
  rep.add(name, plog.r_squared > pure.r_squared && spread <= 0.10, d);
}

SurvivalCurve quadrature_curve(const ExitTimeLaw& law, const std::vector<double>& grid) {
  SurvivalCurve c;
  for (double t : grid) c.points.push_back({t, ibm_survival_quadrature(law, t), {}, {}});
  return c;
}

// Older spellings of the suite names, still accepted on the command line.
std::string canonical_suite(const std::string& name) {
  static const std::map<std::string, std::string> legacy{{"theorem11", "semigroup_residual"},
                                                         {"theorem12", "falsify"},
                                                         {"theorem13", "regimes"},
                                                         {"theorem31", "pareto"}};
  const auto it = legacy.find(name);
  return it == legacy.end() ? name : it->second;
}

constexpr const char* kSuiteNames = "beam | regimes | pareto | semigroup_residual | falsify | tauberian | stretched";

int cmd_verify(const RunConfig& cfg, const json& config, const Command& cmd) {
  Report rep;
  const std::string suite = canonical_suite(cfg.suite);
  if (suite == "beam") {
    if (cfg.count < 1) throw UsageError("--count must be at least 1");
    const auto pairs = beam_eigenvalues(cfg.count);
    for (const auto& e : pairs) {
      const double res = e.characteristic_residual();
      const double norm = integrate([&](double y) { return std::pow(beam_eigenfunction(e, y), 2); }, 0.0, 1.0, 1e-12);
      json d{{"alpha", e.alpha}, {"lambda", e.lambda}, {"residual", res}, {"norm", norm}};
      rep.add("eigenpair_" + std::to_string(e.k), res < 1e-10 && std::fabs(norm - 1.0) < 1e-8, d);
    }
  } else if (suite == "regimes") {
    const auto grid = cmd.given("t-grid") ? parse_grid(cfg.t_grid) : parse_grid("log:1e2:1e4:20");
    for (double xi : parse_list(cfg.angles)) {
      const WedgeSpec spec(xi);
      const auto law = make_exit_law(wedge(spec, ConeQuery{1.0, 0.5 * xi}));
      const double p = spec.exponent();
      const double tol = p < 1 ? 0.05 : 0.07;
      regime_check(rep, "wedge_" + short_number(xi), p, quadrature_curve(*law, grid), {grid.front(), grid.back()},
                   tol);
    }
  } else if (suite == "pareto") {
    const auto grid = cmd.given("t-grid") ? parse_grid(cfg.t_grid) : parse_grid("log:1e2:1e6:25");
    for (double p : {0.5, 1.0, 2.0}) {
      SurvivalCurve c;
      for (double t : grid) c.points.push_back({t, synthetic_eta_survival(p, t), {}, {}});
      regime_check(rep, "pareto_" + short_number(p), p, c, {grid.front(), grid.back()}, 0.03);
    }
  } else if (suite == "semigroup_residual") {
    TestFunction f{[](double y) { return std::exp(-y * y); },
                   [](double y) { return (4 * y * y - 2) * std::exp(-y * y); }};
    const double with = theorem1_residual_extrapolated(f, 1.0, 0.5, 0.02, true);
    const double without = theorem1_residual_extrapolated(f, 1.0, 0.5, 0.02, false);
    rep.add("residual_small", std::fabs(with) <= 1e-4, {{"residual", with}});
    rep.add("source_required", std::fabs(without) >= 10 * std::fabs(with), {{"residual_without_source", without}});
  } else if (suite == "falsify") {
    const auto a_grid = logspace(1e-3, 1e3, 60);
    const auto g = theorem2_falsify(a_grid, default_falsify_t_grid(), default_falsify_x_grid());
    const auto v = heat_control_falsify(a_grid, default_falsify_t_grid(), default_falsify_x_grid());
    rep.add("fourth_order_rejected", g.min_residual > 0.05, to_json(g));
    rep.add("heat_control", std::fabs(v.a_star - 0.5) <= 0.02 && v.residual_at_a_star < 0.02, to_json(v));
  } else if (suite == "tauberian") {
    const auto d = debruijn_check(1.0, 1e6);
    rep.add("debruijn_ratio", d.ratio() >= 0.90 && d.ratio() <= 1.05,
            {{"numeric", d.numeric}, {"predicted", d.predicted}, {"ratio", d.ratio()}});
    const double a = debruijn_constant(1.0, 0.5), b = convolution_laplace_constant(1.0);
    rep.add("constant_identity", std::fabs(a - b) <= 1e-14, {{"debruijn", a}, {"convolution", b}});
    for (auto [c, t] : {std::pair{1.0, 1e3}, std::pair{2.0, 1e4}}) {
      const auto vr = variational_check(c, t);
      rep.add("variational_" + short_number(c), std::fabs(vr.numeric - vr.closed_form) <= 1e-8,
              {{"numeric", vr.numeric}, {"closed_form", vr.closed_form}});
    }
  } else if (suite == "stretched") {
    const auto grid = parse_grid("log:10:200:20");
    const IntervalExitLaw law(0.5);
    const auto fit = fit_tail(quadrature_curve(law, grid), TailKind::stretched_exp, std::pair{10.0, 200.0});
    const auto k = stretched_coefficient(std::numbers::pi * std::numbers::pi / 2.0);
    const double c = fit.exponent_or_coefficient;
    rep.add("proof_constant", std::fabs(c / k.proof_constant - 1) <= 0.15 && std::fabs(c / k.text_constant - 1) > 0.15,
            {{"fit", to_json(fit)}, {"proof_constant", k.proof_constant}, {"text_constant", k.text_constant}});
  } else {
    throw UsageError("unknown suite '" + suite + "' (" + kSuiteNames + ")");
  }
  json out;
  out["config"] = config;
  out["suite"] = suite;
  out["criteria"] = rep.criteria;
  out["pass"] = rep.all_pass;
  Output o(cfg.output);
  o.stream() << out.dump(2) << '\n';
  return rep.all_pass ? kExitOk : kExitCheckFailed;
}

// --- tabulations ------------------------------------------------------------

int cmd_density(const RunConfig& cfg, const json& config) {
  const auto grid = parse_grid(cfg.u_grid);
  const auto law = make_exit_law(domain_from(cfg));
  Output out(cfg.output);
  write_header(out.stream(), config);
  out.stream() << "u,density\n";
  for (double u : grid) out.stream() << format_double(u) << ',' << format_double(law->density(u)) << '\n';
  return kExitOk;
}

int cmd_eigen(const RunConfig& cfg, const json& config) {
  if (cfg.count < 1) throw UsageError("--count must be at least 1");
  const auto grid = parse_grid(cfg.x_grid);
  const auto pairs = beam_eigenvalues(cfg.count);
  Output out(cfg.output);
  write_header(out.stream(), config);
  json alphas = json::array();
  for (const auto& e : pairs) alphas.push_back(e.alpha);
  out.stream() << "# alpha: " << alphas.dump() << '\n' << 'x';
  for (const auto& e : pairs) out.stream() << ",phi_" << e.k;
  out.stream() << '\n';
  for (double y : grid) {
    out.stream() << format_double(y);
    for (const auto& e : pairs) out.stream() << ',' << format_double(beam_eigenfunction(e, std::clamp(y, 0.0, 1.0)));
    out.stream() << '\n';
  }
  return kExitOk;
}

int cmd_laplace(const RunConfig& cfg, const json& config) {
  const auto grid = parse_grid(cfg.lambda_grid);
  const std::string method = cfg.method.empty() ? "quadrature" : cfg.method;
  if (method != "quadrature" && method != "closed-form")
    throw UsageError("unknown method '" + method + "' (quadrature | closed-form)");
  Output out(cfg.output);
  write_header(out.stream(), config);
  out.stream() << "lambda,value\n";
  for (double l : grid) {
    const double v = method == "quadrature" ? laplace_g(l, cfg.x).value : laplace_g_closed_form(l, cfg.x);
    out.stream() << format_double(l) << ',' << format_double(v) << '\n';
  }
  return kExitOk;
}

void error_line(const std::string& kind, int code, const std::string& message) {
  json e;
  e["error"] = kind;
  e["exit_code"] = code;
  e["message"] = message;
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterated Brownian motion exit-time toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;

  Command survive(app, "survive", "tabulate P(exit time of iterated BM > t)", cfg);
  bind_domain(survive, cfg);
  survive.bind("t-grid", cfg.t_grid, "lin|log:min:max:count")
      .bind("method", cfg.method, "quadrature | mc | path")
      .bind("samples", cfg.samples, "Monte Carlo replicates")
      .bind("seed", cfg.seed, "RNG seed")
      .bind("streams", cfg.streams, "worker/stream count (part of the determinism contract)")
      .bind("dt", cfg.dt, "outer path step for --method path")
      .bind("fit", cfg.fit, "pure-power | power-log | stretched-exp")
      .bind("tol", cfg.tol, "relative quadrature tolerance")
      .bind("output", cfg.output, "output file (default stdout)");

  Command verify(app, "verify", "run a named check suite and report JSON", cfg);
  verify.bind("suite", cfg.suite, kSuiteNames)
      .bind("angles", cfg.angles, "comma-separated wedge angles")
      .bind("count", cfg.count, "number of beam eigenpairs")
      .bind("t-grid", cfg.t_grid, "lin|log:min:max:count")
      .bind("seed", cfg.seed, "RNG seed (unused by deterministic suites)")
      .bind("streams", cfg.streams, "stream count (unused by deterministic suites)")
      .bind("output", cfg.output, "output file (default stdout)");

  Command density(app, "density", "tabulate the inner exit-time density", cfg);
  bind_domain(density, cfg);
  density.bind("u-grid", cfg.u_grid, "lin|log:min:max:count")
      .bind("seed", cfg.seed, "RNG seed (unused)")
      .bind("streams", cfg.streams, "stream count (unused)")
      .bind("output", cfg.output, "output file (default stdout)");

  Command eigen(app, "eigen", "tabulate clamped-beam eigenfunctions", cfg);
  eigen.bind("count", cfg.count, "number of eigenfunctions")
      .bind("x-grid", cfg.x_grid, "lin|log:min:max:count")
      .bind("seed", cfg.seed, "RNG seed (unused)")
      .bind("streams", cfg.streams, "stream count (unused)")
      .bind("output", cfg.output, "output file (default stdout)");

  Command laplace(app, "laplace", "tabulate the Laplace transform of the interval survival function", cfg);
  laplace.bind("x", cfg.x, "position in (0,1)")
      .bind("lambda-grid", cfg.lambda_grid, "lin|log:min:max:count")
      .bind("method", cfg.method, "quadrature | closed-form")
      .bind("seed", cfg.seed, "RNG seed (unused)")
      .bind("streams", cfg.streams, "stream count (unused)")
      .bind("output", cfg.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    for (Command* c : {&survive, &verify, &density, &eigen, &laplace}) {
      if (!c->app()->parsed()) continue;
      c->apply_config_file();
      cfg.command = c->name();
      const json config = c->effective();
      if (c == &survive) return cmd_survive(cfg, config);
      if (c == &verify) return cmd_verify(cfg, config, *c);
      if (c == &density) return cmd_density(cfg, config);
      if (c == &eigen) return cmd_eigen(cfg, config);
      return cmd_laplace(cfg, config);
    }
  } catch (const UsageError& e) {
    error_line("usage", kExitUsage, e.what());
    return kExitUsage;
  } catch (const BracketError& e) {
    error_line("numerical", kExitNumerical, e.what());
    return kExitNumerical;
  } catch (const DomainError& e) {
    error_line("usage", kExitUsage, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    error_line("numerical", kExitNumerical, e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
