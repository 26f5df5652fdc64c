#include "gtsolve/maid_solve.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "gtsolve/extensive_start.hpp"

namespace gtsolve {
namespace {

// Shrinks the diagram to one relevance component: decisions outside the
// component become chance variables carrying their current rules, agents
// owning no remaining decision are dropped along with their utility terms.
Maid freeze_others(const Maid& maid, const DecisionRules& rules,
                   const std::vector<int>& component) {
  std::vector<char> keep(static_cast<std::size_t>(maid.size()), 0);
  for (int d : component) keep[static_cast<std::size_t>(d)] = 1;

  Maid sub = maid;
  std::vector<int> agent_map(static_cast<std::size_t>(maid.agents), -1);
  int agents = 0;
  for (int v = 0; v < sub.size(); ++v) {
    MaidVariable& var = sub.vars[static_cast<std::size_t>(v)];
    if (var.kind != MaidVariable::Kind::Decision) continue;
    if (!keep[static_cast<std::size_t>(v)]) {
      var.kind = MaidVariable::Kind::Chance;
      var.table = rules.tables[static_cast<std::size_t>(v)];
      var.owner = -1;
      continue;
    }
    int& slot = agent_map[static_cast<std::size_t>(var.owner)];
    if (slot < 0) slot = agents++;
    var.owner = slot;
  }
  sub.agents = agents;
  std::vector<UtilityTerm> terms;
  for (const UtilityTerm& t : sub.utilities) {
    int owner = agent_map[static_cast<std::size_t>(t.owner)];
    if (owner < 0) continue;
    terms.push_back(t);
    terms.back().owner = owner;
  }
  sub.utilities = std::move(terms);
  return sub;
}

}  // namespace

MaidSolveResult solve_maid(const Maid& maid, const MaidSolveConfig& cfg) {
  validate_maid(maid);
  const RelevanceGraph graph =
      cfg.graph ? *cfg.graph : approx_relevance_graph(maid);

  MaidSolveResult out;
  out.components = relevance_scc_decompose(maid, graph);
  out.solved = true;
  out.rules = uniform_rules(maid);

  SolveConfig solve_cfg = cfg.solve;
  if (!solve_cfg.start_factory) solve_cfg.start_factory = sequence_start_factory();

  for (std::size_t ci = 0; ci < out.components.size(); ++ci) {
    const std::vector<int>& component = out.components[ci];
    // the hint's cliques cover the per-agent terminal scopes only when no
    // decision is frozen away
    bool whole_game = component.size() == graph.decisions.size();
    Maid sub = freeze_others(maid, out.rules, component);
    MaidSequenceView view(std::move(sub), cfg.epsilon,
                          whole_game ? cfg.clique_hint
                                     : std::vector<std::vector<int>>{});
    solve_cfg.seed = cfg.solve.seed + static_cast<std::uint64_t>(ci);
    SolveResult r = solve_game(view, solve_cfg);
    out.steps += r.steps;
    out.restarts += r.restarts;
    if (r.equilibria.empty()) {
      out.solved = false;
      break;
    }
    const EquilibriumRecord* best = &r.equilibria.front();
    for (const EquilibriumRecord& e : r.equilibria)
      if (e.regret < best->regret) best = &e;
    DecisionRules solved = view.rules_from_plan(best->sigma);
    for (int d : component)
      out.rules.tables[static_cast<std::size_t>(d)] =
          solved.tables[static_cast<std::size_t>(d)];
  }

  MaidSequenceView full(maid, cfg.epsilon, cfg.clique_hint);
  out.regret = full.max_regret(full.plan_from_rules(out.rules));
  return out;
}

}  // namespace gtsolve
