#include "gtsolve/ipa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtsolve {

PolymatrixGame linearize_about(const GameView& view,
                               const Eigen::VectorXd& sigma_hat) {
  const AgentIndexing& ix = view.indexing();
  const int N = ix.agents();
  if (N < 2) throw std::invalid_argument("linearization needs two or more agents");
  Eigen::MatrixXd jac = view.deviation_jacobian(sigma_hat);
  Eigen::VectorXd v = view.deviation(sigma_hat);

  PolymatrixGame pg;
  pg.actions.resize(N);
  for (int n = 0; n < N; ++n) pg.actions[n] = ix.length(n);
  pg.blocks.assign(N, std::vector<Eigen::MatrixXd>(N));
  for (int n = 0; n < N; ++n) {
    for (int q = 0; q < N; ++q) {
      if (q == n) continue;
      pg.blocks[n][q] =
          jac.block(ix.offset(n), ix.offset(q), ix.length(n), ix.length(q));
    }
  }
  // Fold the affine remainder (2-N) V into one block column per agent; the
  // fold is exact on normalized opponent slices. For two agents it is zero
  // and the approximation is the game itself.
  const double coef = 2.0 - static_cast<double>(N);
  if (coef != 0.0) {
    for (int n = 0; n < N; ++n) {
      const int q0 = (n + 1) % N;
      for (int a = 0; a < ix.length(n); ++a) {
        pg.blocks[n][q0].row(a).array() += coef * v[ix.offset(n) + a];
      }
    }
  }
  return pg;
}

IpaResult ipa_run(const GameView& view, const Eigen::VectorXd& sigma0,
                  const IpaConfig& cfg) {
  IpaResult out;
  Eigen::VectorXd sigma = sigma0;
  out.sigma = sigma;
  out.regret = view.max_regret(sigma);
  if (out.regret <= cfg.target_regret) {
    out.converged = true;
    return out;
  }

  double alpha = 1.0;
  Eigen::VectorXd d_prev;
  int no_improve = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    Eigen::VectorXd p;
    try {
      p = solve_polymatrix(linearize_about(view, sigma), cfg.lcp_pivot_cap);
    } catch (const LcpError&) {
      break;  // ray termination on the approximation: keep the best so far
    }
    ++out.lcp_solves;
    Eigen::VectorXd d = p - sigma;
    if (d_prev.size() > 0) {
      double denom = d_prev.squaredNorm();
      if (denom > 1e-300) {
        // Signed secant: consecutive steps pointing the same way stretch the
        // step, opposing ones shrink it.
        double s = d.dot(d_prev) / denom;
        if (s < 0.999) alpha /= (1.0 - s);
      }
    }
    alpha = std::clamp(alpha, 1e-4, 1.0);
    sigma += alpha * d;  // convex combination, stays feasible
    d_prev = std::move(d);
    ++out.iterations;

    double reg = view.max_regret(sigma);
    if (reg < out.regret) {
      out.regret = reg;
      out.sigma = sigma;
      no_improve = 0;
    } else {
      ++no_improve;
    }
    if (out.regret <= cfg.target_regret) {
      out.converged = true;
      break;
    }
    if (no_improve >= cfg.stall_window) break;
  }
  return out;
}

PathState quickstart_from_profile(const GameView& view,
                                  const Eigen::VectorXd& sigma_hat) {
  if (view.kind() != StrategyKind::Mixed) {
    throw std::invalid_argument(
        "quickstart preimage construction applies to simplex retractions");
  }
  const AgentIndexing& ix = view.indexing();
  Eigen::VectorXd v = view.deviation(sigma_hat);
  Eigen::VectorXd w0 = v + sigma_hat;
  SupportSignature sig = signature_of(sigma_hat, view.lower_bound());

  // Per slice, find the preimage point closest to w0: supported coordinates
  // sit at sigma + c, unsupported ones clamp to min(w0, c). The objective in
  // c is convex piecewise quadratic; bisect its derivative.
  Eigen::VectorXd w = w0;
  for (int n = 0; n < ix.agents(); ++n) {
    const int off = ix.offset(n);
    const int len = ix.length(n);
    double lo = w0.segment(off, len).minCoeff() - 1.0;
    double hi = w0.segment(off, len).maxCoeff() + 1.0;
    for (int i = 0; i < len; ++i) {
      if (sig.test(off + i)) {
        lo = std::min(lo, v[off + i] - 1.0);
        hi = std::max(hi, v[off + i] + 1.0);
      }
    }
    auto slope = [&](double c) {
      double s = 0.0;
      for (int i = 0; i < len; ++i) {
        if (sig.test(off + i)) {
          s += c - v[off + i];
        } else {
          s -= std::max(w0[off + i] - c, 0.0);
        }
      }
      return s;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (slope(mid) >= 0.0)
        hi = mid;
      else
        lo = mid;
    }
    const double c = 0.5 * (lo + hi);
    for (int i = 0; i < len; ++i) {
      if (sig.test(off + i)) {
        w[off + i] = sigma_hat[off + i] + c;
      } else {
        w[off + i] = std::min(w0[off + i], c);
      }
    }
  }

  PathState st;
  st.lambda = 1.0;
  Retraction r = view.retract(w);
  if ((r.sigma - sigma_hat).lpNorm<Eigen::Infinity>() < 1e-12 &&
      r.signature == sig) {
    st.b = w - sigma_hat - v;
  } else {
    // Preimage landed on a facet and tipped over: fall back to a bonus that
    // makes the retracted point itself lie on the path.
    st.b = w - r.sigma - view.deviation(r.sigma);
  }
  st.w = std::move(w);
  st.signature = r.signature;
  return st;
}

}  // namespace gtsolve
