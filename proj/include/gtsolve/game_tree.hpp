#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "gtsolve/sequence_form.hpp"

namespace gtsolve {

struct GameTreeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TreeNode {
  enum class Kind { Chance, Decision, Leaf };
  Kind kind = Kind::Leaf;
  int owner = -1;              // deciding agent at a decision node
  int infoset = -1;            // agent-local information set id
  std::vector<double> probs;   // chance branch probabilities
  std::vector<int> children;
  Eigen::VectorXd payoffs;     // per-agent payoff at a leaf
};

struct GameTree {
  int agents = 0;
  std::vector<TreeNode> nodes;
  int root = 0;
};

// Structural checks: every node reachable exactly once, chance distributions
// normalized, leaf payoff dimensions, contiguous information set ids with a
// single owner and action count each, and identical own-action histories
// within every information set.
void validate_tree(const GameTree& tree);

// Per-agent decision catalogs (information sets plus deduplicated terminal
// sequences) extracted by walking the tree. Runs the same checks as
// validate_tree.
std::vector<AgentCatalog> catalogs_from_tree(const GameTree& tree);

// Serialization: {"type": "tree", "agents": N, "root": r, "nodes": [...]}
// with per-node kind, owner/infoset, probs, children, and payoffs fields.
GameTree tree_from_json(const std::string& text);
std::string tree_to_json(const GameTree& tree);

// Sequence-form view of an extensive game. Outcomes are cached with their
// chance coefficient and each agent's terminal-sequence coordinate, so the
// deviation vector and its Jacobian are sums over outcomes of products of
// the other agents' plan entries.
class TreeSequenceView final : public SequenceViewBase {
 public:
  TreeSequenceView(GameTree tree, double epsilon);

  const GameTree& tree() const { return tree_; }

  Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const override;
  Eigen::MatrixXd deviation_jacobian(
      const Eigen::VectorXd& sigma) const override;
  double payoff_range(int n) const override;
  bool deviation_is_affine() const override { return tree_.agents <= 2; }

 private:
  struct Outcome {
    double coef = 1.0;       // chance probability along the path
    Eigen::VectorXd payoffs;
    std::vector<int> coord;  // agent-local terminal sequence per agent
  };

  GameTree tree_;
  std::vector<Outcome> outcomes_;
  std::vector<double> range_;
};

}  // namespace gtsolve
