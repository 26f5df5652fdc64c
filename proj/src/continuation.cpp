#include "gtsolve/continuation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace gtsolve {

namespace {

Eigen::MatrixXd path_jacobian_block(const GameView& view, const Retraction& r) {
  const int m = view.dim();
  Eigen::MatrixXd dr = view.retraction_jacobian(r.signature);
  Eigen::MatrixXd dv = view.deviation_jacobian(r.sigma);
  return Eigen::MatrixXd::Identity(m, m) -
         (dv + Eigen::MatrixXd::Identity(m, m)) * dr;
}

}  // namespace

Eigen::VectorXd continuation_residual(const GameView& view,
                                      const Eigen::VectorXd& w, double lambda,
                                      const Eigen::VectorXd& b) {
  Retraction r = view.retract(w);
  return w - r.sigma - view.deviation(r.sigma) - lambda * b;
}

bool path_direction(const GameView& view, const Retraction& r,
                    const Eigen::VectorXd& b, const Eigen::VectorXd* prev,
                    Eigen::VectorXd* dir) {
  const int m = view.dim();
  Eigen::MatrixXd a = path_jacobian_block(view, r);
  Eigen::MatrixXd jt(m + 1, m);
  jt.topRows(m) = a.transpose();
  jt.row(m) = -b.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jt);
  if (qr.rank() < m) return false;
  // The tangent spans the orthogonal complement of the columns of jt, which
  // is the last column of Q once the first m columns span the range.
  Eigen::VectorXd u = qr.householderQ() * Eigen::VectorXd::Unit(m + 1, m);
  // Orient by the sign of det([J; u^T]): it flips with u and stays invariant
  // along a regular path, including across cell facets where a tangent-dot
  // heuristic can misfire on sharp kinks. The start cell fixes the global
  // convention: there J = [I | -b], and the downward tangent -(b, 1)/s has
  // det = -(1 + |b|^2)/s, so forward means a negative determinant.
  Eigen::MatrixXd full(m + 1, m + 1);
  full.topLeftCorner(m, m) = a;
  full.topRightCorner(m, 1) = -b;
  full.row(m) = u.transpose();
  double det = full.partialPivLu().determinant();
  if (det > 0.0) {
    u = -u;
  } else if (det == 0.0) {
    // Degenerate crossing: fall back to continuity, then to descent.
    if (prev != nullptr) {
      if (prev->dot(u) < 0.0) u = -u;
    } else if (u[m] > 0.0) {
      u = -u;
    }
  }
  *dir = u;
  return true;
}

Eigen::VectorXd adjoint_direction(const GameView& view, const Retraction& r,
                                  const Eigen::VectorXd& b) {
  const int m = view.dim();
  Eigen::MatrixXd a = path_jacobian_block(view, r);
  Eigen::MatrixXd adj(m, m);
  Eigen::MatrixXd minor(m - 1, m - 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      // adj(a)(i, j) is the (j, i) cofactor.
      for (int rr = 0, mr = 0; rr < m; ++rr) {
        if (rr == j) continue;
        for (int cc = 0, mc = 0; cc < m; ++cc) {
          if (cc == i) continue;
          minor(mr, mc) = a(rr, cc);
          ++mc;
        }
        ++mr;
      }
      double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(i, j) = (m == 1) ? sign : sign * minor.determinant();
    }
  }
  Eigen::VectorXd dir(m + 1);
  dir.head(m) = adj * b;
  dir[m] = a.determinant();
  return dir;
}

double newton_polish(const GameView& view, Eigen::VectorXd* w, double lambda,
                     const Eigen::VectorXd& b, int max_iters, double target) {
  const int m = view.dim();
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Retraction r = view.retract(x);
    return x - r.sigma - view.deviation(r.sigma) - lambda * b;
  };
  Eigen::VectorXd f = residual(*w);
  double err = f.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iters && err > target; ++it) {
    Retraction r = view.retract(*w);
    Eigen::MatrixXd a = path_jacobian_block(view, r);
    Eigen::VectorXd step = a.completeOrthogonalDecomposition().solve(f);
    bool accepted = false;
    double alpha = 1.0;
    for (int trial = 0; trial < 8; ++trial) {
      Eigen::VectorXd wt = *w - alpha * step;
      Eigen::VectorXd ft = residual(wt);
      double et = ft.lpNorm<Eigen::Infinity>();
      if (et < err) {
        *w = wt;
        f = ft;
        err = et;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  return err;
}

Eigen::VectorXd wobble_bonus(const GameView& view, const Eigen::VectorXd& w,
                             double lambda) {
  if (std::abs(lambda) < 1e-12) {
    throw std::invalid_argument("wobble_bonus: lambda too close to zero");
  }
  Retraction r = view.retract(w);
  return (w - r.sigma - view.deviation(r.sigma)) / lambda;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> dominant_bonus_profile(
    const GameView& view, const Eigen::VectorXd& u) {
  const AgentIndexing& ix = view.indexing();
  const int m = view.dim();
  Eigen::VectorXd b(m);
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(m);
  for (int n = 0; n < ix.agents(); ++n) {
    const int off = ix.offset(n);
    const int len = ix.length(n);
    int best = 0;
    for (int i = 1; i < len; ++i) {
      if (u[off + i] > u[off + best]) best = i;
    }
    sigma[off + best] = 1.0;
    if (len == 1) {
      b[off] = u[off];
      continue;
    }
    double second = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < len; ++i) {
      if (i != best) second = std::max(second, u[off + i]);
    }
    double gap = std::max(u[off + best] - second, 1e-9);
    // The slack above range+1 keeps the scaled gap agent-specific; a gap of
    // exactly range+1 for every agent lines facet crossings up at the same
    // lambda on symmetric payoffs, a degenerate corner for the path.
    double scale = (view.payoff_range(n) + 1.0 + u[off + best]) / gap;
    for (int i = 0; i < len; ++i) b[off + i] = scale * u[off + i];
  }
  return {b, sigma};
}

PathState initial_state_normal(const GameView& view, std::mt19937_64& rng) {
  const AgentIndexing& ix = view.indexing();
  const int m = view.dim();
  Eigen::VectorXd u(m);
  // Redraw until every agent's bonus argmax clears the runner-up by a
  // margin; this keeps the scale factors, and with them the path lengths,
  // bounded. The cap only matters for adversarial generators.
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (int i = 0; i < m; ++i) u[i] = uniform01(rng);
    bool comfortable = true;
    for (int n = 0; n < ix.agents() && comfortable; ++n) {
      const int off = ix.offset(n);
      const int len = ix.length(n);
      if (len == 1) continue;
      double top = -1.0, second = -1.0;
      for (int i = 0; i < len; ++i) {
        if (u[off + i] > top) {
          second = top;
          top = u[off + i];
        } else if (u[off + i] > second) {
          second = u[off + i];
        }
      }
      if (top - second < 0.05) comfortable = false;
    }
    if (comfortable) break;
  }
  auto [b, sigma] = dominant_bonus_profile(view, u);
  PathState st;
  st.b = std::move(b);
  st.w = view.deviation(sigma) + st.b + sigma;
  st.lambda = 1.0;
  st.signature = view.retract(st.w).signature;
  return st;
}

PathState initial_state_single_bonus(const GameView& view, int coord) {
  const AgentIndexing& ix = view.indexing();
  if (ix.agents() != 2) {
    throw std::invalid_argument("single-bonus start requires two agents");
  }
  const int m = view.dim();
  if (coord < 0 || coord >= m) {
    throw std::out_of_range("single-bonus start: coordinate out of range");
  }
  const int owner = ix.owner(coord);
  const int other = 1 - owner;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b[coord] = view.payoff_range(owner) + 1.0;
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(m);
  sigma[coord] = 1.0;
  // With two agents the responder's deviation payoffs depend only on the
  // owner's slice, so they can be read off before the responder commits.
  Eigen::VectorXd probe = view.deviation(sigma);
  const int ooff = ix.offset(other);
  const int olen = ix.length(other);
  int best = 0;
  for (int i = 1; i < olen; ++i) {
    if (probe[ooff + i] > probe[ooff + best]) best = i;
  }
  sigma[ooff + best] = 1.0;
  PathState st;
  st.b = std::move(b);
  st.w = view.deviation(sigma) + st.b + sigma;
  st.lambda = 1.0;
  st.signature = view.retract(st.w).signature;
  return st;
}

TraceResult trace(const GameView& view, PathState state,
                  const TraceConfig& cfg) {
  const int m = view.dim();
  Eigen::VectorXd w = state.w;
  double lambda = state.lambda;
  Eigen::VectorXd b = state.b;

  TraceResult res;
  res.final_lambda = lambda;

  std::mt19937_64 recovery_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  auto log_event = [&](double err, const SupportSignature& sig,
                       const char* ev) {
    if (cfg.log) cfg.log(TraceLogRecord{res.steps, lambda, err, sig.hash(), ev});
  };

  // A vanishing bonus means the start point is already a candidate
  // equilibrium; score it without tracing.
  if (b.lpNorm<Eigen::Infinity>() < 1e-12) {
    Retraction r0 = view.retract(w);
    double reg = view.max_regret(r0.sigma);
    res.crossings = 1;
    if (reg <= cfg.regret_tol) {
      res.equilibria.push_back({r0.sigma, reg, 1, 0, 0});
    } else {
      res.rejected_crossings = 1;
    }
    return res;
  }

  std::unordered_set<SupportSignature, SupportSignatureHash> visited;
  SupportSignature cell_sig;
  bool have_cell = false;
  long adaptive = 1;
  long steps_remaining = 0;
  bool increased_in_cell = false;
  int clean_streak = 0;
  Eigen::VectorXd prev_dir;

  // One step suffices where the path is a straight line inside the cell:
  // affine deviation maps, or at most one agent mixing.
  auto cell_steps = [&](const Retraction& r) -> long {
    if (view.deviation_is_affine()) return 1;
    const AgentIndexing& ix = view.indexing();
    int mixing = 0;
    for (int n = 0; n < ix.agents(); ++n) {
      if (r.signature.count_range(ix.offset(n), ix.length(n)) > 1) ++mixing;
    }
    return mixing <= 1 ? 1 : adaptive;
  };

  Retraction r = view.retract(w);

  while (true) {
    if (!have_cell || !(r.signature == cell_sig)) {
      if (visited.count(r.signature) > 0) {
        res.status = TraceStatus::CycleDetected;
        break;
      }
      visited.insert(r.signature);
      cell_sig = r.signature;
      have_cell = true;
      steps_remaining = cell_steps(r);
      increased_in_cell = false;
      log_event(0.0, cell_sig, "cell");
    } else if (steps_remaining <= 0) {
      // Still in the cell after the planned sub-steps (a polish pulled the
      // point back, or the cell is unbounded): replan, not a revisit.
      steps_remaining = cell_steps(r);
      increased_in_cell = false;
    }

    Eigen::VectorXd dir;
    if (!path_direction(view, r, b, prev_dir.size() ? &prev_dir : nullptr,
                        &dir)) {
      // Rank loss is typically a facet coincidence; jiggle within the error
      // budget and retry before giving up.
      bool recovered = false;
      for (int attempt = 0; attempt < 2 && !recovered; ++attempt) {
        Eigen::VectorXd wt = w;
        for (int i = 0; i < m; ++i) {
          wt[i] += (uniform01(recovery_rng) - 0.5) * 2e-9;
        }
        Retraction rt = view.retract(wt, &cell_sig);
        if (path_direction(view, rt, b,
                           prev_dir.size() ? &prev_dir : nullptr, &dir)) {
          w = wt;
          r = rt;
          recovered = true;
        }
      }
      if (!recovered) {
        res.status = TraceStatus::SingularPoint;
        break;
      }
    }
    prev_dir = dir;
    Eigen::VectorXd dw = dir.head(m);
    const double dlam = dir[m];

    auto sig_at = [&](const Eigen::VectorXd& x) {
      return view.retract(x, &cell_sig).signature;
    };
    double delta =
        signature_change_distance(sig_at, w, dw, cfg.horizon, cfg.bisect_tol);
    if (!std::isfinite(delta)) {
      // No boundary ahead; span far enough to pass the stop threshold, or a
      // long leg that the step cap will bound.
      delta = (dlam < -1e-12) ? (cfg.lambda_stop - lambda) / dlam + 1.0 : 1e6;
      steps_remaining = std::max<long>(steps_remaining, 1);
    }
    if (delta < 1e-12) delta = 1e-12;

    const double step = delta / static_cast<double>(steps_remaining);
    const double lam_next = lambda + dlam * step;

    Eigen::VectorXd w_next = w + dw * step;
    Retraction r_next = view.retract(w_next, &cell_sig);
    double err = (w_next - r_next.sigma - view.deviation(r_next.sigma) -
                  lam_next * b)
                     .lpNorm<Eigen::Infinity>();
    if (err > cfg.newton_trigger) {
      err = newton_polish(view, &w_next, lam_next, b, cfg.newton_max_iters,
                          cfg.newton_trigger);
      ++res.newton_calls;
      r_next = view.retract(w_next, &cell_sig);
    }

    if (err > cfg.error_budget * 0.5) {
      clean_streak = 0;
    } else if (++clean_streak >= 3) {
      adaptive = std::max<long>(1, adaptive / 2);
      clean_streak = 0;
    }

    if (err > cfg.error_budget) {
      if (!increased_in_cell) {
        // Redo the move from the same point with a finer sub-step grid.
        increased_in_cell = true;
        adaptive = std::min<long>(adaptive * 2, 1 << 20);
        steps_remaining = std::max<long>(steps_remaining * 2, 2);
        continue;
      }
      if (cfg.enable_wobble && std::abs(lam_next) >= 1e-9) {
        b = wobble_bonus(view, w_next, lam_next);
        ++res.wobbles;
        err = 0.0;
        log_event(err, r_next.signature, "wobble");
      } else {
        res.status = TraceStatus::NewtonFailure;
        break;
      }
    }

    bool recorded_now = false;
    if ((lambda > 0.0 && lam_next <= 0.0) ||
        (lambda < 0.0 && lam_next >= 0.0)) {
      // The sub-step crosses lambda = 0: interpolate back along the step,
      // polish at fixed lambda = 0 (the bonus drops out there), and keep the
      // candidate only if its true regret passes. The trace itself continues
      // from the far side untouched.
      const double tstar = -lambda / dlam;
      Eigen::VectorXd wc = w + dw * tstar;
      newton_polish(view, &wc, 0.0, b, cfg.newton_max_iters,
                    cfg.newton_trigger);
      ++res.newton_calls;
      Retraction rc = view.retract(wc, &cell_sig);
      double reg = view.max_regret(rc.sigma);
      ++res.crossings;
      if (reg <= cfg.regret_tol) {
        res.equilibria.push_back({rc.sigma, reg, res.crossings, res.steps, 0});
        recorded_now = true;
        log_event(reg, rc.signature, "record");
      } else {
        ++res.rejected_crossings;
        log_event(reg, rc.signature, "reject");
      }
    }

    w = std::move(w_next);
    lambda = lam_next;
    r = std::move(r_next);
    --steps_remaining;
    ++res.steps;
    res.final_lambda = lambda;

    if (recorded_now && cfg.stop_after_first) {
      res.status = TraceStatus::FoundFirst;
      break;
    }
    if (lambda <= cfg.lambda_stop) {
      res.status = TraceStatus::ReachedThreshold;
      break;
    }
    if (res.steps >= cfg.step_cap) {
      res.status = TraceStatus::StepCapExceeded;
      break;
    }

    if (steps_remaining <= 0 && r.signature == cell_sig) {
      // The planned exit step should have left the cell; if a polish pulled
      // the point back, push it just across the facet so the next iteration
      // sees the neighboring cell.
      w += dw * (cfg.boundary_nudge + 4.0 * cfg.bisect_tol);
      r = view.retract(w, &cell_sig);
    }
    log_event(err, r.signature, "step");
  }

  res.final_lambda = lambda;
  return res;
}

}  // namespace gtsolve
