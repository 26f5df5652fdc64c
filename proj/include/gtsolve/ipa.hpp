#pragma once

#include <Eigen/Dense>

#include "gtsolve/continuation.hpp"
#include "gtsolve/game_view.hpp"
#include "gtsolve/lcp.hpp"

namespace gtsolve {

// Pairwise-sum approximation of a game around sigma_hat: blocks are the
// deviation Jacobian's off-diagonal blocks, and the affine remainder
// (2 - N) V(sigma_hat), implied by the degree identity, is folded into one
// block column per agent so the approximation's deviation map agrees with
// the first-order expansion of V on the simplex product.
PolymatrixGame linearize_about(const GameView& view,
                               const Eigen::VectorXd& sigma_hat);

struct IpaConfig {
  int max_iters = 500;
  double target_regret = 1e-9;
  int stall_window = 30;     // quit after this many iters without progress
  long lcp_pivot_cap = 1000000;
};

struct IpaResult {
  Eigen::VectorXd sigma;     // best point seen, by true regret
  double regret = 0.0;
  int iterations = 0;
  int lcp_solves = 0;
  bool converged = false;    // reached target_regret
};

// Iterated polymatrix approximation: repeatedly solve the linearization and
// move toward its equilibrium with a signed-secant step size. Returns the
// best point seen; a point that already meets target_regret returns after a
// single solve.
IpaResult ipa_run(const GameView& view, const Eigen::VectorXd& sigma0,
                  const IpaConfig& cfg = {});

// Path state at lambda = 1 whose retraction is exactly sigma_hat and whose
// residual is exactly zero: w adjusts V(sigma_hat) + sigma_hat by the
// smallest per-slice shift landing in the retraction preimage of sigma_hat,
// and the bonus absorbs the adjustment. An equilibrium input yields a
// near-zero bonus, so the subsequent trace records it immediately.
PathState quickstart_from_profile(const GameView& view,
                                  const Eigen::VectorXd& sigma_hat);

}  // namespace gtsolve
