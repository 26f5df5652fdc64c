#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>
#include <vector>

#include "gtsolve/game_view.hpp"
#include "gtsolve/strategy.hpp"

namespace gtsolve {

struct SequenceFormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One decision point of an agent: an information set with a fixed action
// count and the agent's own (infoset, action) history leading to it.
struct InfoSetSpec {
  int actions = 0;
  std::vector<std::pair<int, int>> history;
};

// Everything the space builder needs to know about one agent: its decision
// points and the catalog of terminal sequences (chains of (infoset, action)
// pairs that are the agent's full history at some outcome). Terminal chain
// order fixes the agent's coordinate order.
struct AgentCatalog {
  std::vector<InfoSetSpec> infosets;
  std::vector<std::vector<std::pair<int, int>>> terminal_sequences;
};

// Internal lattice of an agent's sequences: terminal chains, every infoset
// history, and all one-step extensions, deduplicated. Drives constraint
// generation, behavior conversions, and the best-response recursion.
struct SequenceLattice {
  struct Node {
    std::vector<std::pair<int, int>> chain;
    int terminal_coord = -1;  // agent-local coordinate when terminal
    std::vector<int> infosets;
    // children[k][a] = node reached by taking action a at infosets[k]
    std::vector<std::vector<int>> children;
    // Canonical linear expression of this sequence's realization weight in
    // the agent's terminal coordinates.
    Eigen::VectorXd rep;
  };
  std::vector<Node> nodes;  // creation order: root first, then terminals
  int root = -1;            // node with the empty chain
};

// Strategy space of stacked realization plans: per agent one slice of
// terminal-sequence probabilities, tied by flow-consistency constraints
// C sigma = c and bounded below by epsilon.
struct SequenceFormSpace {
  AgentIndexing ix;
  double epsilon = 1e-4;
  std::vector<AgentCatalog> catalogs;
  std::vector<SequenceLattice> lattices;
  Eigen::MatrixXd C;  // block diagonal over agents
  Eigen::VectorXd c;
  std::vector<int> row_offset;  // first constraint row of each agent
  std::vector<int> row_count;
  Eigen::VectorXd uniform_plan;  // strictly feasible interior point

  int agents() const { return ix.agents(); }
};

// Per-agent behavior: probs[n][i] is the action distribution at agent n's
// information set i.
struct BehaviorProfile {
  std::vector<std::vector<Eigen::VectorXd>> probs;
};

// Assemble the space: build lattices, emit consistency rows (one per extra
// representation of each partial sequence) plus one normalization row per
// agent, and cache the uniform-behavior plan. Throws SequenceFormError on a
// malformed catalog or when epsilon leaves the feasible set empty.
SequenceFormSpace build_space(std::vector<AgentCatalog> catalogs,
                              double epsilon);

// Products of behavior probabilities along each terminal chain.
Eigen::VectorXd behavior_to_plan(const SequenceFormSpace& space,
                                 const BehaviorProfile& behavior);

// Ratios of extended realization probabilities, computed leaf upward. When
// a denominator underflows (possible only at epsilon = 0) the distribution
// at that infoset is uniform and `well_defined` is false.
struct BehaviorResult {
  BehaviorProfile behavior;
  bool well_defined = true;
};
BehaviorResult plan_to_behavior(const SequenceFormSpace& space,
                                const Eigen::VectorXd& sigma);

// Exact Euclidean projection onto {C sigma = c, sigma >= epsilon} by a
// primal active-set method started from the cached interior point. `hint`
// seeds the initial active set with the complement of a nearby support.
Retraction retract_polytope(const SequenceFormSpace& space,
                            const Eigen::VectorXd& w,
                            const SupportSignature* hint = nullptr);

// Orthogonal projector onto the null space of the active rows: all equality
// rows plus the bound rows of coordinates outside the support.
Eigen::MatrixXd polytope_retraction_jacobian(const SequenceFormSpace& space,
                                             const SupportSignature& sig);

// Maximum of cost . sigma_n over agent n's slice of the feasible set, by a
// bottom-up concave piecewise-linear recursion on the sequence lattice.
double epsilon_best_response(const SequenceFormSpace& space, int agent,
                             const Eigen::VectorXd& cost);

// Shared GameView plumbing for sequence-form strategy spaces; subclasses
// supply the deviation function and its Jacobian.
class SequenceViewBase : public GameView {
 public:
  explicit SequenceViewBase(SequenceFormSpace space)
      : space_(std::move(space)) {}

  const AgentIndexing& indexing() const override { return space_.ix; }
  StrategyKind kind() const override { return StrategyKind::SequenceForm; }
  double lower_bound() const override { return space_.epsilon; }

  Retraction retract(const Eigen::VectorXd& w,
                     const SupportSignature* hint = nullptr) const override {
    return retract_polytope(space_, w, hint);
  }
  Eigen::MatrixXd retraction_jacobian(
      const SupportSignature& sig) const override {
    return polytope_retraction_jacobian(space_, sig);
  }
  std::vector<double> regret(const Eigen::VectorXd& sigma) const override;

  const SequenceFormSpace& space() const { return space_; }

 protected:
  SequenceFormSpace space_;
};

}  // namespace gtsolve
