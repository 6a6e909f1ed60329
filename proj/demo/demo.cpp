// Walk-through of the library: survival of iterated Brownian motion in a few
// domains, three ways of computing it, and the tail fits that classify it.
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "ibmexit.hpp"

using namespace ibmexit;

int main() {
  constexpr double pi = std::numbers::pi;

  std::puts("== half-line, start at distance 1 ==");
  const auto half = make_exit_law(half_line(1.0));
  std::printf("%8s %12s %20s %14s\n", "t", "quadrature", "rb-mc (+- se)", "path dt=0.01");
  const std::vector<double> ts{1.0, 10.0, 100.0};
  const auto mc = ibm_survival_mc(*half, ts, 200000, 42, 4);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto path = ibm_path_check(*half, ts[i], 2000, 1e-2, 43, 4);
    std::printf("%8g %12.6f %11.6f +- %.6f %14.6f\n", ts[i], ibm_survival_quadrature(*half, ts[i]),
                mc.points[i].value, *mc.points[i].stderr_, path.value);
  }

  std::puts("\n== tail regimes in wedges (quadrature over t in [1e2, 1e4]) ==");
  std::vector<double> grid;
  for (int i = 0; i < 15; ++i) grid.push_back(std::pow(10.0, 2.0 + 2.0 * i / 14));
  for (double xi : {pi / 4, pi / 2, pi}) {
    const WedgeSpec spec(xi);
    const auto law = make_exit_law(wedge(spec, {1.0, xi / 2}));
    SurvivalCurve c;
    for (double t : grid) c.points.push_back({t, ibm_survival_quadrature(*law, t), std::nullopt, std::nullopt});
    const auto predicted = predicted_regime(spec.exponent());
    const auto fit = fit_tail(c, predicted.kind, std::pair{grid.front(), grid.back()});
    std::printf("angle %.4f  p = %.3f  predicted %-10s fitted %s\n", xi, spec.exponent(), to_string(predicted.kind).c_str(),
                to_json(fit)["params"].dump().c_str());
  }

  std::puts("\n== unit interval from the midpoint: stretched-exponential decay ==");
  SurvivalCurve g;
  for (double t : {10.0, 20.0, 50.0, 100.0, 200.0}) g.points.push_back({t, g_interval(t, 0.5), std::nullopt, std::nullopt});
  const auto s = fit_tail(g, TailKind::stretched_exp, std::pair{10.0, 200.0});
  const auto k = stretched_coefficient(pi * pi / 2);
  std::printf("fitted coefficient %.3f; candidates %.3f and %.3f\n", s.exponent_or_coefficient, k.proof_constant,
              k.text_constant);

  std::puts("\n== clamped-beam eigenvalues ==");
  for (const auto& e : beam_eigenvalues(4))
    std::printf("k=%d alpha=%.10f lambda=%.4f  |cos a cosh a - 1| = %.1e\n", e.k, e.alpha, e.lambda,
                e.characteristic_residual());

  std::puts("\n== does g solve a fourth-order heat equation? ==");
  const auto a = logspace(1e-3, 1e3, 60);
  const auto r = theorem2_falsify(a, default_falsify_t_grid(), default_falsify_x_grid());
  const auto v = heat_control_falsify(a, default_falsify_t_grid(), default_falsify_x_grid());
  std::printf("fourth order: best residual %.3f (a = %.3g)\n", r.min_residual, r.best_a);
  std::printf("brownian control, second order: a* = %.4f, residual %.1e\n", v.a_star, v.residual_at_a_star);
}
