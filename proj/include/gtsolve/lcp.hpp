#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "gtsolve/game_view.hpp"
#include "gtsolve/strategy.hpp"

namespace gtsolve {

struct LcpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-player game in matrix form; A and B are m1 x m2 payoffs to the row and
// column player respectively.
struct BimatrixGame {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

struct LhResult {
  Eigen::VectorXd x;  // row player mixed strategy
  Eigen::VectorXd y;  // column player mixed strategy
  long pivots = 0;
};

// Complementary pivoting on the two best-response polytopes starting from the
// artificial equilibrium, dropping `dropped_label` (0..m1-1 are row actions,
// m1..m1+m2-1 column actions). Lexicographic ratio test makes the pivot
// sequence deterministic and cycle-free. Throws LcpError on ray termination
// or when `max_pivots` is exceeded.
LhResult lemke_howson(const BimatrixGame& g, int dropped_label,
                      long max_pivots = 1000000);

// Pairwise-sum game: agent n's payoff is the sum over q != n of
// sigma_n' blocks[n][q] sigma_q. blocks[n][n] is unused and kept empty.
struct PolymatrixGame {
  std::vector<int> actions;
  std::vector<std::vector<Eigen::MatrixXd>> blocks;

  int agents() const { return static_cast<int>(actions.size()); }
  AgentIndexing indexing() const { return AgentIndexing::from_lengths(actions); }
  void validate() const;
};

// One equilibrium of a polymatrix game. Two agents delegate to lemke_howson
// (label 0); otherwise the stacked complementarity system over strategies and
// per-agent value variables is solved by Lemke pivoting with a unit covering
// vector and lexicographic ratios. Throws LcpError on ray termination.
Eigen::VectorXd solve_polymatrix(const PolymatrixGame& g,
                                 long max_pivots = 1000000);

class PolymatrixView : public MixedGameView {
 public:
  explicit PolymatrixView(PolymatrixGame game);

  const AgentIndexing& indexing() const override { return ix_; }
  Eigen::VectorXd deviation(const Eigen::VectorXd& sigma) const override;
  Eigen::MatrixXd deviation_jacobian(const Eigen::VectorXd& sigma) const override;
  double payoff_range(int n) const override;
  bool deviation_is_affine() const override { return true; }
  const PolymatrixGame& game() const { return game_; }

 private:
  PolymatrixGame game_;
  AgentIndexing ix_;
};

}  // namespace gtsolve
