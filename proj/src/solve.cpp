#include "gtsolve/solve.hpp"

#include <cmath>

namespace gtsolve {

namespace {

void merge_records(std::vector<EquilibriumRecord>& into,
                   std::vector<EquilibriumRecord>&& found, int attempt) {
  for (auto& rec : found) {
    rec.restarts = attempt;
    bool dup = false;
    for (const auto& have : into) {
      if ((have.sigma - rec.sigma).lpNorm<Eigen::Infinity>() < 1e-6) {
        dup = true;
        break;
      }
    }
    if (!dup) into.push_back(std::move(rec));
  }
}

Eigen::VectorXd uniform_profile(const AgentIndexing& ix) {
  Eigen::VectorXd sigma(ix.total_dim);
  for (int n = 0; n < ix.agents(); ++n) {
    sigma.segment(ix.offset(n), ix.length(n))
        .setConstant(1.0 / ix.length(n));
  }
  return sigma;
}

}  // namespace

SolveResult solve_game(const GameView& view, const SolveConfig& cfg) {
  SolveResult out;
  std::mt19937_64 rng(cfg.seed);
  TraceConfig tc = cfg.trace;

  PathState first;
  bool have_first = false;
  if (cfg.ipa_quickstart && view.kind() == StrategyKind::Mixed) {
    IpaResult ir = ipa_run(view, uniform_profile(view.indexing()), cfg.ipa);
    out.ipa_iterations = ir.iterations;
    if (ir.converged && ir.regret <= tc.regret_tol) {
      EquilibriumRecord rec;
      rec.sigma = ir.sigma;
      rec.regret = ir.regret;
      rec.crossing_index = 0;
      rec.steps = 0;
      rec.restarts = 0;
      out.equilibria.push_back(std::move(rec));
      out.quickstart_direct = true;
      return out;
    }
    first = quickstart_from_profile(view, ir.sigma);
    have_first = true;
  }

  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    PathState start;
    if (attempt == 0 && have_first) {
      start = std::move(first);
    } else if (cfg.start_factory) {
      start = cfg.start_factory(view, rng);
    } else {
      start = initial_state_normal(view, rng);
    }
    tc.seed = rng();
    TraceResult res = trace(view, std::move(start), tc);
    out.steps += res.steps;
    out.last_status = res.status;
    out.restarts = attempt;
    merge_records(out.equilibria, std::move(res.equilibria), attempt);
    bool complete = res.status == TraceStatus::ReachedThreshold ||
                    res.status == TraceStatus::FoundFirst;
    if (complete && !out.equilibria.empty()) break;
  }
  return out;
}

}  // namespace gtsolve
