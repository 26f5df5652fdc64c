#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "gtsolve/game_view.hpp"
#include "gtsolve/normal_form.hpp"
#include "gtsolve/strategy.hpp"

namespace gtsolve {

// Game with family-local payoffs: each agent's payoff depends only on its own
// action and its parents' actions. family_payoffs[n] is a flat tensor indexed
// by (own action, parents in listed order), last listed parent varying
// fastest.
struct GraphicalGame {
  std::vector<int> actions;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<double>> family_payoffs;

  int agents() const { return static_cast<int>(actions.size()); }
  AgentIndexing indexing() const { return AgentIndexing::from_lengths(actions); }
  long long family_size(int n) const;  // entries in agent n's table
  double family_payoff(int n, int a, const std::vector<int>& parent_actions) const;

  void validate() const;
};

// Multiply-accumulate counter for the family-table sweeps; reset/read around
// a call to measure its cost. Thread local, so concurrent runs do not mix.
void reset_graphical_op_count();
std::uint64_t graphical_op_count();

Eigen::VectorXd graphical_deviation_vector(const GraphicalGame& g,
                                           const Eigen::VectorXd& sigma);

// Deviation Jacobian assembled from family tables alone: zero blocks for an
// agent against itself, family-restricted sums against parents, and one
// family expectation per row copied across every non-family column.
Eigen::MatrixXd graphical_deviation_jacobian(const GraphicalGame& g,
                                             const Eigen::VectorXd& sigma);

std::vector<double> graphical_expected_payoffs(const GraphicalGame& g,
                                               const Eigen::VectorXd& sigma);

// Dense expansion; throws if the joint action space exceeds `cap` entries.
NormalFormGame flatten_to_normal_form(const GraphicalGame& g,
                                      long long cap = 1000000);

GraphicalGame graphical_from_json(const std::string& text);
std::string graphical_to_json(const GraphicalGame& g);

class GraphicalView : public MixedGameView {
 public:
  explicit GraphicalView(GraphicalGame game);

  const AgentIndexing& indexing() const override { return ix_; }
  Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const override {
    return graphical_deviation_vector(game_, sigma);
  }
  Eigen::MatrixXd deviation_jacobian(const Eigen::VectorXd& sigma) const override {
    return graphical_deviation_jacobian(game_, sigma);
  }
  double payoff_range(int n) const override;
  bool deviation_is_affine() const override { return game_.agents() == 2; }
  const GraphicalGame& game() const { return game_; }

 private:
  GraphicalGame game_;
  AgentIndexing ix_;
};

}  // namespace gtsolve
