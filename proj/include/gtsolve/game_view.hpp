#pragma once

#include <Eigen/Dense>

#include <vector>

#include "gtsolve/strategy.hpp"

namespace gtsolve {

enum class StrategyKind { Mixed, SequenceForm };

// Uniform interface to a game for the path-following machinery. A view
// exposes the deviation function V (per-coordinate expected payoff against
// the rest of the profile), its Jacobian with respect to the profile, and
// the retraction onto the feasible strategy set together with its
// cell-constant Jacobian.
class GameView {
 public:
  virtual ~GameView() = default;

  virtual const AgentIndexing& indexing() const = 0;
  int dim() const { return indexing().total_dim; }
  int agents() const { return indexing().agents(); }

  virtual StrategyKind kind() const = 0;
  // Lower bound on profile coordinates (0 for mixed strategies, the
  // perturbation floor for realization plans).
  virtual double lower_bound() const = 0;

  virtual Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const = 0;
  virtual Eigen::MatrixXd deviation_jacobian(
      const Eigen::VectorXd& sigma) const = 0;

  // Projection of an ambient point onto the feasible set. `hint` may carry
  // the signature of a nearby point to warm-start polytope projections.
  virtual Retraction retract(const Eigen::VectorXd& w,
                             const SupportSignature* hint = nullptr) const = 0;
  virtual Eigen::MatrixXd retraction_jacobian(
      const SupportSignature& sig) const = 0;

  // Expected payoff per agent at sigma. Equals the support-weighted sum of
  // deviation entries for both strategy kinds.
  virtual std::vector<double> payoffs(const Eigen::VectorXd& sigma) const;

  // Per-agent regret: best-response value minus current value, best response
  // taken over the agent's own feasible set with everyone else fixed.
  virtual std::vector<double> regret(const Eigen::VectorXd& sigma) const = 0;

  double max_regret(const Eigen::VectorXd& sigma) const;

  // Upper bound on max-minus-min payoff achievable by agent n; used to scale
  // dominating bonuses.
  virtual double payoff_range(int n) const = 0;

  // True when V is affine in sigma (two agents, or pairwise-sum payoffs), in
  // which case the traced path is straight inside each support cell.
  virtual bool deviation_is_affine() const { return false; }
};

// Views over product-of-simplices strategy spaces (normal form, graphical,
// polymatrix). Supplies the shared retraction and regret logic; subclasses
// provide payoffs via deviation().
class MixedGameView : public GameView {
 public:
  StrategyKind kind() const override { return StrategyKind::Mixed; }
  double lower_bound() const override { return 0.0; }

  Retraction retract(const Eigen::VectorXd& w,
                     const SupportSignature* hint = nullptr) const override;
  Eigen::MatrixXd retraction_jacobian(
      const SupportSignature& sig) const override;
  std::vector<double> regret(const Eigen::VectorXd& sigma) const override;
};

}  // namespace gtsolve
