#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "gtsolve/game_view.hpp"
#include "gtsolve/strategy.hpp"

namespace gtsolve {

// A point on the solution path of F(w, lambda) = w - R(w) - V(R(w)) - lambda*b.
struct PathState {
  Eigen::VectorXd w;
  double lambda = 1.0;
  Eigen::VectorXd b;
  SupportSignature signature;
};

struct EquilibriumRecord {
  Eigen::VectorXd sigma;
  double regret = 0.0;
  int crossing_index = 0;  // ordinal of the lambda=0 crossing within a trace
  long steps = 0;          // path iterations spent when recorded
  int restarts = 0;        // filled in by the solve driver
};

enum class TraceStatus {
  ReachedThreshold,  // lambda descended past the stop threshold
  FoundFirst,        // stop_after_first was requested and a record was made
  CycleDetected,     // a support cell was revisited
  StepCapExceeded,
  SingularPoint,     // augmented Jacobian lost rank and recovery failed
  NewtonFailure,     // error budget unrecoverable with wobbles disabled
};

struct TraceLogRecord {
  long step;
  double lambda;
  double error;
  std::uint64_t signature_hash;
  const char* event;
};

struct TraceConfig {
  double lambda_stop = -0.2;
  long step_cap = 200000;
  double error_budget = 1e-7;   // invariant bound on ||F|| after a step
  double newton_trigger = 1e-8; // polish when a step leaves more error
  int newton_max_iters = 20;
  bool enable_wobble = true;
  double boundary_nudge = 1e-11;
  double bisect_tol = 1e-10;
  double horizon = 1e12;        // give up searching for a boundary past this
  double regret_tol = 1e-8;     // recorded equilibria must verify this
  bool stop_after_first = false;
  std::uint64_t seed = 0;       // used only for singular-point recovery
  std::function<void(const TraceLogRecord&)> log;
};

struct TraceResult {
  std::vector<EquilibriumRecord> equilibria;
  TraceStatus status = TraceStatus::ReachedThreshold;
  long steps = 0;
  int newton_calls = 0;
  int wobbles = 0;
  int crossings = 0;
  int rejected_crossings = 0;  // crossings whose polished point failed regret
  double final_lambda = 1.0;
};

Eigen::VectorXd continuation_residual(const GameView& view,
                                      const Eigen::VectorXd& w, double lambda,
                                      const Eigen::VectorXd& b);

// Unit tangent of the path at w: the null vector of the m x (m+1) augmented
// Jacobian [I - (DV+I)DR | -b], computed by orthogonal factorization and
// oriented so that det([J; dir^T]) < 0, the sign the start cell induces for
// forward motion. `prev` is only a tie-break for exactly degenerate
// crossings. Returns false when the augmented Jacobian has rank below m.
bool path_direction(const GameView& view, const Retraction& r,
                    const Eigen::VectorXd& b, const Eigen::VectorXd* prev,
                    Eigen::VectorXd* dir);

// Cofactor-based tangent (adj(A) b, det(A)); reference implementation for
// small games. Its determinant convention is positive, so it points
// backward: path_direction returns the opposite orientation.
Eigen::VectorXd adjoint_direction(const GameView& view, const Retraction& r,
                                  const Eigen::VectorXd& b);

// Damped Newton on w at fixed lambda, least-squares steps, accepted only on
// a decrease of ||F||. Returns the final residual norm.
double newton_polish(const GameView& view, Eigen::VectorXd* w, double lambda,
                     const Eigen::VectorXd& b, int max_iters, double target);

// Replacement bonus making the current point lie exactly on the path:
// b := (w - R(w) - V(R(w))) / lambda. Requires lambda != 0.
Eigen::VectorXd wobble_bonus(const GameView& view, const Eigen::VectorXd& w,
                             double lambda);

// Per-agent bonus scaled so its argmax action strictly dominates every
// payoff difference, paired with that pure profile. Ties in the argmax
// break toward the lowest index. Deterministic in u; the randomized start
// below wraps it.
std::pair<Eigen::VectorXd, Eigen::VectorXd> dominant_bonus_profile(
    const GameView& view, const Eigen::VectorXd& u);

// Start of the path at lambda = 1 for mixed-strategy games: a random bonus
// vector scaled per agent so its best action strictly dominates, the
// corresponding pure profile, and w = V(sigma) + b + sigma.
PathState initial_state_normal(const GameView& view, std::mt19937_64& rng);

// Start with bonus scale * e_coord only (two-agent games): the owner plays
// the bonus action and the other agent a pure best response. Mirrors the
// pivoting method's setup for the matching label.
PathState initial_state_single_bonus(const GameView& view, int coord);

// Follow the path from `state` until lambda passes the stop threshold,
// recording an equilibrium at every lambda = 0 crossing (interpolated, then
// polished at fixed lambda = 0 and kept only if its recomputed regret passes
// regret_tol).
TraceResult trace(const GameView& view, PathState state,
                  const TraceConfig& cfg = {});

// uniform double in [0,1) from the top 53 bits; keeps runs reproducible
// across standard library implementations
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace gtsolve
