#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtsolve/bayes_net.hpp"
#include "gtsolve/clique_tree.hpp"
#include "gtsolve/game_tree.hpp"
#include "gtsolve/sequence_form.hpp"

namespace gtsolve {

struct MaidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A chance or decision variable of a multi-agent influence diagram. Chance
// variables carry a conditional table laid out like BayesVariable (rows over
// parent assignments in listed order, last parent fastest, own value fastest
// within a row). Decision variables get their tables from strategies.
struct MaidVariable {
  enum class Kind { Chance, Decision };
  Kind kind = Kind::Chance;
  int owner = -1;  // decisions only
  std::vector<int> parents;
  int card = 0;
  Eigen::VectorXd table;  // chance only
};

// A payoff term: the owner receives value's entry at the realized joint
// assignment of value's scope. Utilities never enter the network as
// variables; inference works with their parent scopes directly.
struct UtilityTerm {
  int owner = -1;
  Factor value;
};

struct Maid {
  int agents = 0;
  std::vector<MaidVariable> vars;
  std::vector<UtilityTerm> utilities;
  int size() const { return static_cast<int>(vars.size()); }
};

// One conditional table per decision variable (indexed by variable id,
// empty for chance variables), in the same layout as a chance table.
struct DecisionRules {
  std::vector<Eigen::VectorXd> tables;
};

// Fixed enumeration glue between a Maid and its sequence-form space:
// information sets are (decision, parent assignment) pairs with assignments
// enumerated in factor order over the sorted parent scope, and terminal
// sequences are assignments of the last own decision plus its parents.
struct MaidIndex {
  std::vector<std::vector<int>> decisions;  // per agent, topological order
  std::vector<int> infoset_offset;          // per var id; -1 for chance
  // per decision var id: conditional-table row for each information set
  std::vector<std::vector<std::int64_t>> row_of_infoset;
  std::vector<std::vector<int>> dn_scope;  // per agent, sorted ids
};

// Rejects bad owners, malformed tables, cycles, agents without decisions,
// utility scope mismatches, and within-agent recall violations (every later
// decision must observe each earlier own decision and its parents).
void validate_maid(const Maid& maid);

MaidIndex index_maid(const Maid& maid);

std::vector<AgentCatalog> catalogs_from_maid(const Maid& maid,
                                             const MaidIndex& idx);

void validate_rules(const Maid& maid, const DecisionRules& rules);

DecisionRules uniform_rules(const Maid& maid);

// The network induced by fixing all decision tables.
BayesNet net_for(const Maid& maid, const DecisionRules& rules);

// Per-agent sums of expected utility under the given rules, computed on a
// calibrated clique tree covering every utility scope.
Eigen::VectorXd expected_payoffs(const Maid& maid, const DecisionRules& rules);

// Full balanced game tree over the chance and decision variables in
// topological order; decision nodes reuse the MaidIndex information-set ids.
GameTree maid_to_tree(const Maid& maid);

Maid maid_from_json(const std::string& text);
std::string maid_to_json(const Maid& maid);

// Directed graph over decision variables: an edge d -> d' means d' may
// matter for optimizing the rule at d.
struct RelevanceGraph {
  std::vector<int> decisions;               // all decision var ids, ascending
  std::vector<std::vector<int>> edges_out;  // by position in `decisions`
  bool over_approximated = false;
};

// Conservative rule: edge d -> d' whenever some utility term of d's agent
// has a scope variable reachable from d and another (possibly the same)
// reachable from d', and d' is neither d itself nor one of d's parents.
RelevanceGraph approx_relevance_graph(const Maid& maid);

// Reads the optional "relevance_edges" block ([[from, to], ...] over decision
// variable ids) from a game description; empty when the block is absent.
std::optional<RelevanceGraph> relevance_edges_from_json(const std::string& text,
                                                        const Maid& maid);

// Strongly connected components of the relevance graph in solve order:
// every component appears before any component with an edge into it.
std::vector<std::vector<int>> relevance_scc_decompose(const Maid& maid,
                                                      const RelevanceGraph& g);

// Sequence-form view of a Maid: strategy coordinates are realization
// probabilities of terminal sequences, payoff quantities come from clique
// tree inference on the induced network. A non-empty clique_hint replaces
// triangulation (it must cover every family, every utility scope, and every
// agent's terminal-sequence scope, and form a valid tree).
class MaidSequenceView final : public SequenceViewBase {
 public:
  MaidSequenceView(Maid maid, double epsilon,
                   std::vector<std::vector<int>> clique_hint = {});

  const Maid& maid() const { return maid_; }
  const MaidIndex& index() const { return idx_; }
  // clique structure reused for every calibration
  const std::vector<std::vector<int>>& cliques() const { return structure_; }

  Eigen::VectorXd plan_from_rules(const DecisionRules& rules) const;
  DecisionRules rules_from_plan(const Eigen::VectorXd& sigma) const;

  Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const override;
  Eigen::MatrixXd deviation_jacobian(
      const Eigen::VectorXd& sigma) const override;
  double payoff_range(int n) const override { return range_[n]; }
  bool deviation_is_affine() const override { return maid_.agents <= 2; }

 private:
  CliqueTree calibrated_for(const Eigen::VectorXd& sigma) const;

  Maid maid_;
  MaidIndex idx_;
  std::vector<std::vector<int>> scopes_;  // utility scopes + dn scopes
  std::vector<std::vector<int>> structure_;
  std::vector<int> util_clique_;  // covering clique per utility term
  std::vector<int> dn_clique_;    // covering clique per agent
  std::vector<double> range_;     // conservative per-agent payoff spread
};

}  // namespace gtsolve
