// Stock-only versus optioned books on a random desk instance, then the same
// comparison through a simulated crash.
#include <cstdio>

#include "covaropt/covaropt.hpp"

using namespace covaropt;

namespace {

P1Problem desk_problem(const Instance& inst, const DistressEvent& event, bool options, double rho_bar) {
  const Index n = static_cast<Index>(inst.options.size());
  const Index m = inst.model.size();
  const Vector mid = inst.mid_prices();
  P1Problem prob{inst.model, inst.greeks(), mid, mid, {event}, Vector::Constant(1, rho_bar), 0.05, 0.95,
                 RiskMode::normal, Admissible::fresh(n, m, 1.0, 0.1, options ? 0.1 : 0.0), std::nullopt};
  if (options) prob.omega.option_cap = 0.3;
  return prob;
}

void report(const char* name, const Instance& inst, const DistressEvent& event, const P1Solution& s) {
  if (!s.optimal()) {
    std::printf("  %-9s %s\n", name, to_string(s.status));
    return;
  }
  const Portfolio pf{s.y, s.x};
  const auto greeks = inst.greeks();
  const auto mc = covar_mc_oracle(spectral_reform(inst.model, event, greeks, pf), 0.95, 200000, 11);
  std::printf("  %-9s return %8.5f  sd %7.5f  CoVaR %8.5f  (MC %8.5f +- %.5f)\n", name, s.expected_return,
              s.std_dev, s.covar(0), mc.value, mc.std_error);
}

}  // namespace

int main() {
  const Instance inst = generate_instance(10, 25, 7);
  const IndexSet sia = identify_sia(inst.correlation, 5);
  const DistressEvent event = DistressEvent::at_var(inst.model, sia, 0.95);

  const auto bounds = controllability_bounds(inst.model, event, 0.95);
  std::printf("distressed stocks:");
  for (Index i : sia) std::printf(" %ld", static_cast<long>(i));
  std::printf("\nlowest CoVaR of a fully invested stock book: %.5f (distressed part %.5f, rest %.5f)\n\n", bounds.min_covar(),
              bounds.bound_i, bounds.bound_j);

  for (double rho : {0.03, 0.02, 0.01}) {
    std::printf("CoVaR bound %.3f\n", rho);
    report("stocks", inst, event, solve_p1(desk_problem(inst, event, false, rho)));
    report("optioned", inst, event, solve_p1(desk_problem(inst, event, true, rho)));
  }

  GarchSpec garch;
  garch.stocks.assign(6, GjrGarch{4e-5, 0.05, 0.10, 0.85, 0.05});
  DccSpec dcc;
  dcc.beta1 = 0.05;
  dcc.beta2 = 0.90;
  dcc.uncond_corr = Matrix::Constant(6, 6, 0.3);
  dcc.uncond_corr.diagonal().setOnes();
  FeedConfig cfg;
  cfg.history = 156;
  cfg.horizon = 40;
  cfg.spread = 0.02;
  cfg.crash_weeks = 20;
  cfg.crash_shock = -0.7;
  const BacktestFeed feed = simulate_feed(garch, dcc, cfg, 2003);

  std::printf("\nsimulated crash, %d trading weeks\n", cfg.horizon);
  std::printf("  %-18s %9s %9s %9s %9s\n", "strategy", "final", "mean", "std", "max dd");
  Strategy control = Strategy::optioned_control();
  control.n_sia = 3;
  for (const Strategy& s : {Strategy::stock(), Strategy::stock_control(), Strategy::optioned(), control}) {
    const BacktestReport r = run_backtest(s, feed, true);
    std::printf("  %-18s %9.4f %9.4f %9.4f %9.4f\n", r.strategy.c_str(), r.values(r.values.size() - 1),
                r.metrics.mean, r.metrics.std_dev, r.metrics.max_drawdown);
  }
  return 0;
}
