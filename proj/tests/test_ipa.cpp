#include <doctest.h>

#include <random>

#include "gtsolve/ipa.hpp"
#include "gtsolve/normal_form.hpp"
#include "gtsolve/solve.hpp"
#include "oracles.hpp"

using namespace gtsolve;

namespace {

NormalFormGame random_game(const std::vector<int>& actions,
                           std::mt19937_64& rng) {
  NormalFormGame g;
  g.actions = actions;
  long total = 1;
  for (int a : actions) total *= a;
  g.payoffs.assign(actions.size(), {});
  for (std::size_t n = 0; n < actions.size(); ++n) {
    g.payoffs[n].resize(total);
    for (long j = 0; j < total; ++j) g.payoffs[n][j] = uniform01(rng);
  }
  return g;
}

NormalFormGame rps_game() {
  NormalFormGame g;
  g.actions = {3, 3};
  g.payoffs.resize(2);
  const double a[9] = {0, -1, 1, 1, 0, -1, -1, 1, 0};
  for (int i = 0; i < 9; ++i) {
    g.payoffs[0].push_back(a[i]);
    g.payoffs[1].push_back(-a[i]);
  }
  return g;
}

NormalFormGame pd_game() {
  NormalFormGame g;
  g.actions = {2, 2};
  g.payoffs = {{3, 0, 5, 1}, {3, 5, 0, 1}};
  return g;
}

Eigen::VectorXd uniform_profile(const AgentIndexing& ix) {
  Eigen::VectorXd s(ix.total_dim);
  for (int n = 0; n < ix.agents(); ++n)
    s.segment(ix.offset(n), ix.length(n)).setConstant(1.0 / ix.length(n));
  return s;
}

// Random direction with zero sum on every slice, so probes stay on the
// affine hull of the strategy space.
Eigen::VectorXd tangent_direction(const AgentIndexing& ix,
                                  std::mt19937_64& rng) {
  Eigen::VectorXd d(ix.total_dim);
  for (int i = 0; i < ix.total_dim; ++i) d[i] = uniform01(rng) - 0.5;
  for (int n = 0; n < ix.agents(); ++n) {
    auto seg = d.segment(ix.offset(n), ix.length(n));
    seg.array() -= seg.mean();
  }
  return d;
}

}  // namespace

TEST_CASE("linearization matches deviations to first order on the simplex") {
  std::mt19937_64 rng(107);
  NormalFormGame g = random_game({2, 3, 2}, rng);
  NormalFormView view(g);
  const AgentIndexing& ix = view.indexing();

  Eigen::VectorXd sigma = uniform_profile(ix);
  for (int i = 0; i < ix.total_dim; ++i) sigma[i] += 0.02 * (uniform01(rng) - 0.5);
  Retraction r = view.retract(sigma);
  sigma = r.sigma;

  PolymatrixGame pg = linearize_about(view, sigma);
  pg.validate();
  PolymatrixView pv(pg);

  // Value agreement at the expansion point.
  Eigen::VectorXd v_true = view.deviation(sigma);
  Eigen::VectorXd v_lin = pv.deviation(sigma);
  CHECK((v_true - v_lin).lpNorm<Eigen::Infinity>() < 1e-10);

  // Slope agreement along simplex tangent directions.
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd d = tangent_direction(ix, rng);
    Eigen::VectorXd lhs = pv.deviation(sigma + d) - pv.deviation(sigma);
    Eigen::VectorXd rhs = view.deviation_jacobian(sigma) * d;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("two agent linearization is the game itself") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 5; ++trial) {
    NormalFormGame g = random_game({3, 3}, rng);
    NormalFormView view(g);
    Eigen::VectorXd sigma = uniform_profile(view.indexing());
    PolymatrixGame pg = linearize_about(view, sigma);
    Eigen::MatrixXd jac = view.deviation_jacobian(sigma);
    CHECK((pg.blocks[0][1] - jac.block(0, 3, 3, 3)).norm() == 0.0);
    CHECK((pg.blocks[1][0] - jac.block(3, 0, 3, 3)).norm() == 0.0);
    // Solving the approximation solves the original game exactly.
    Eigen::VectorXd p = solve_polymatrix(pg, 100000);
    CHECK(view.max_regret(p) < 1e-8);
  }
}

TEST_CASE("ipa returns immediately at an equilibrium") {
  NormalFormGame g = rps_game();
  NormalFormView view(g);
  IpaResult res = ipa_run(view, uniform_profile(view.indexing()));
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.lcp_solves == 0);
  CHECK(res.regret <= 1e-9);
}

TEST_CASE("ipa solves two agent games in one linearization") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 10; ++trial) {
    NormalFormGame g = random_game({4, 3}, rng);
    NormalFormView view(g);
    IpaResult res = ipa_run(view, uniform_profile(view.indexing()));
    CHECK(res.converged);
    CHECK(res.regret <= 1e-9);
    CHECK(res.lcp_solves <= 3);
    CHECK(view.max_regret(res.sigma) == res.regret);
  }
}

TEST_CASE("ipa improves three agent games and never returns worse than start") {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 5; ++trial) {
    NormalFormGame g = random_game({2, 2, 2}, rng);
    NormalFormView view(g);
    Eigen::VectorXd s0 = uniform_profile(view.indexing());
    double r0 = view.max_regret(s0);
    IpaConfig cfg;
    cfg.max_iters = 100;
    IpaResult res = ipa_run(view, s0, cfg);
    CHECK(res.regret <= r0 + 1e-15);
    CHECK(res.iterations <= 100);
    CHECK(validate_mixed(res.sigma, view.indexing(), 0.0, 1e-9));
  }
}

TEST_CASE("quickstart at an interior equilibrium has zero bonus") {
  NormalFormGame g = rps_game();
  NormalFormView view(g);
  Eigen::VectorXd sigma = uniform_profile(view.indexing());
  PathState st = quickstart_from_profile(view, sigma);
  CHECK(st.lambda == 1.0);
  CHECK(st.b.lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(continuation_residual(view, st.w, st.lambda, st.b).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((view.retract(st.w).sigma - sigma).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("quickstart retracts back to the requested profile") {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    NormalFormGame g = random_game({3, 4}, rng);
    NormalFormView view(g);
    const AgentIndexing& ix = view.indexing();
    // Random profile with a random support pattern.
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(ix.total_dim);
    for (int n = 0; n < ix.agents(); ++n) {
      int len = ix.length(n);
      int keep = 1 + static_cast<int>(uniform01(rng) * len) % len;
      double total = 0.0;
      for (int i = 0; i < keep; ++i) {
        double x = 0.05 + uniform01(rng);
        sigma[ix.offset(n) + i] = x;
        total += x;
      }
      sigma.segment(ix.offset(n), len) /= total;
    }
    PathState st = quickstart_from_profile(view, sigma);
    Retraction r = view.retract(st.w);
    CHECK((r.sigma - sigma).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(continuation_residual(view, st.w, st.lambda, st.b).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("quickstart at a vertex matches the dominant bonus shape") {
  NormalFormGame g = pd_game();
  NormalFormView view(g);
  Eigen::VectorXd sigma(4);
  sigma << 0.0, 1.0, 0.0, 1.0;  // both defect
  PathState st = quickstart_from_profile(view, sigma);
  CHECK((view.retract(st.w).sigma - sigma).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(continuation_residual(view, st.w, st.lambda, st.b).lpNorm<Eigen::Infinity>() < 1e-12);
  // Supported coordinates carry nonnegative bonus, unsupported none.
  CHECK(st.b[1] >= -1e-12);
  CHECK(st.b[3] >= -1e-12);
}

TEST_CASE("solver returns the quickstart answer when it already meets tolerance") {
  NormalFormGame g = rps_game();
  NormalFormView view(g);
  SolveConfig cfg;
  cfg.ipa_quickstart = true;
  SolveResult res = solve_game(view, cfg);
  CHECK(res.quickstart_direct);
  CHECK(res.steps == 0);
  CHECK(res.ipa_iterations == 0);
  REQUIRE(res.equilibria.size() == 1);
  CHECK(res.equilibria[0].regret <= 1e-8);
  CHECK((res.equilibria[0].sigma - uniform_profile(view.indexing()))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("solver hands a near converged quickstart to the tracer") {
  // Perturbed matching cycle: the unique equilibrium stays fully mixed, so
  // floating point regret lands near but not exactly at zero.
  std::mt19937_64 rng(137);
  NormalFormGame g = rps_game();
  for (auto& table : g.payoffs)
    for (double& u : table) u += 0.01 * (uniform01(rng) - 0.5);
  NormalFormView view(g);
  SolveConfig cfg;
  cfg.ipa_quickstart = true;
  cfg.ipa.target_regret = 0.0;  // unreachable, forces the path fallback
  SolveResult res = solve_game(view, cfg);
  CHECK(!res.quickstart_direct);
  REQUIRE(!res.equilibria.empty());
  for (const auto& rec : res.equilibria) CHECK(rec.regret <= 1e-8);
}

TEST_CASE("solver finds equilibria on random games with restarts available") {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 3; ++trial) {
    NormalFormGame g = random_game({2, 2, 2}, rng);
    NormalFormView view(g);
    SolveConfig cfg;
    cfg.seed = 1000 + trial;
    SolveResult res = solve_game(view, cfg);
    REQUIRE(!res.equilibria.empty());
    for (const auto& rec : res.equilibria) {
      CHECK(rec.regret <= 1e-8);
      CHECK(validate_mixed(rec.sigma, view.indexing(), 0.0, 1e-7));
    }
  }
}

TEST_CASE("solver reports exhaustion when every attempt is cut short") {
  std::mt19937_64 rng(149);
  NormalFormGame g = random_game({3, 3}, rng);
  NormalFormView view(g);
  SolveConfig cfg;
  cfg.trace.step_cap = 2;
  cfg.max_restarts = 3;
  SolveResult res = solve_game(view, cfg);
  CHECK(res.equilibria.empty());
  CHECK(res.restarts == 3);
  CHECK(res.last_status == TraceStatus::StepCapExceeded);
}
