#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gtsolve/game_view.hpp"
#include "gtsolve/strategy.hpp"

namespace gtsolve {

// Dense normal-form game. payoffs[n] is a flat row-major tensor over the
// joint action space, agents in index order with the last agent varying
// fastest.
struct NormalFormGame {
  std::vector<int> actions;                 // actions per agent
  std::vector<std::vector<double>> payoffs; // one tensor per agent

  int agents() const { return static_cast<int>(actions.size()); }
  long long joint_actions() const;
  AgentIndexing indexing() const { return AgentIndexing::from_lengths(actions); }

  // Flat index of a joint action profile.
  long long flat_index(const std::vector<int>& profile) const;
  double payoff(int n, const std::vector<int>& profile) const;

  void validate() const;
};

// Expected payoff of every unilateral pure deviation: entry (n, a) is agent
// n's payoff for playing a against sigma's other slices.
Eigen::VectorXd normal_deviation_vector(const NormalFormGame& g,
                                        const Eigen::VectorXd& sigma);

// Jacobian of the deviation vector in sigma. Blocks for an agent against
// itself are zero; entry ((n,a),(n',a')) weighs joint outcomes with both
// actions fixed by everyone else's probabilities.
Eigen::MatrixXd normal_deviation_jacobian(const NormalFormGame& g,
                                          const Eigen::VectorXd& sigma);

std::vector<double> normal_expected_payoffs(const NormalFormGame& g,
                                            const Eigen::VectorXd& sigma);

NormalFormGame normal_form_from_json(const std::string& text);
std::string normal_form_to_json(const NormalFormGame& g);

class NormalFormView : public MixedGameView {
 public:
  explicit NormalFormView(NormalFormGame game);

  const AgentIndexing& indexing() const override { return ix_; }
  Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const override {
    return normal_deviation_vector(game_, sigma);
  }
  Eigen::MatrixXd deviation_jacobian(const Eigen::VectorXd& sigma) const override {
    return normal_deviation_jacobian(game_, sigma);
  }
  double payoff_range(int n) const override;
  bool deviation_is_affine() const override { return game_.agents() == 2; }
  const NormalFormGame& game() const { return game_; }

 private:
  NormalFormGame game_;
  AgentIndexing ix_;
};

}  // namespace gtsolve
