#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>

#include "gtsolve/continuation.hpp"
#include "gtsolve/game_tree.hpp"
#include "gtsolve/maid.hpp"
#include "gtsolve/sequence_form.hpp"

namespace gtsolve {

// Bonus per terminal sequence, stacked like a realization plan. Entries are
// distinct within each agent and scaled so that every gap between two of an
// agent's bonuses exceeds its payoff spread.
struct BonusRay {
  Eigen::VectorXd entries;
  std::vector<double> scale;
};

BonusRay make_bonus_ray(const SequenceViewBase& view, std::mt19937_64& rng);

// Pure profile preferred by the bonus alone, walked bottom up: at each
// information set the owner takes the action whose induced terminal
// sequence carries the largest bonus, with behavior below already fixed and
// chance branches resolved optimistically. The one-hot behavior is
// converted to a plan and clipped into the feasible set.
Eigen::VectorXd perturbed_pure_start(const GameTree& tree,
                                     const SequenceFormSpace& space,
                                     const BonusRay& bonus);

// Same procedure on a structured diagram without expanding the tree:
// decisions are processed downstream first, and each information set ranks
// actions by the largest bonus among consistent completions of the agent's
// terminal-sequence scope, honoring already-fixed later decisions whose
// observations are determined by the completion.
Eigen::VectorXd perturbed_pure_start(const Maid& maid, const MaidIndex& idx,
                                     const SequenceFormSpace& space,
                                     const BonusRay& bonus);

// lambda = 1 anchor built from a clipped pure plan: w = sigma + V(sigma) +
// bonus, with the bonus re-fitted so the state solves F(w, 1) = 0 exactly.
PathState assemble_pure_start(const GameView& view,
                              const Eigen::VectorXd& sigma,
                              const Eigen::VectorXd& bonus_entries);

// Start constructor for solve_game on tree and diagram views.
std::function<PathState(const GameView&, std::mt19937_64&)>
sequence_start_factory();

}  // namespace gtsolve
