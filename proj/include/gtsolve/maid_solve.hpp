#pragma once

#include <optional>
#include <vector>

#include "gtsolve/maid.hpp"
#include "gtsolve/solve.hpp"

namespace gtsolve {

struct MaidSolveConfig {
  double epsilon = 1e-4;  // floor on terminal-sequence realization weights
  SolveConfig solve;      // per-component path tracing settings
  // Relevance graph to decompose against; when absent the conservative
  // approximation is computed from the diagram.
  std::optional<RelevanceGraph> graph;
  // Clique hint for the final whole-game check (and for the single joint
  // solve when the graph does not decompose).
  std::vector<std::vector<int>> clique_hint;
};

struct MaidSolveResult {
  DecisionRules rules;
  double regret = 0.0;  // whole-game regret of the assembled rules
  bool solved = false;  // every component produced an equilibrium
  std::vector<std::vector<int>> components;  // decision var ids, solve order
  long steps = 0;                            // summed over components
  int restarts = 0;
};

// Decomposes the diagram into relevance components, solves them in order
// (each component is a smaller diagram in which every other decision is
// frozen at its current rule as a chance variable), and installs the solved
// rules. Components later in the order never influence earlier ones, so the
// frozen placeholder rules for unsolved decisions are harmless.
MaidSolveResult solve_maid(const Maid& maid, const MaidSolveConfig& cfg = {});

}  // namespace gtsolve
