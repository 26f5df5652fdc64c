#include <Eigen/Dense>

#include <random>
#include <vector>

#include "doctest.h"
#include "gtsolve/graphical.hpp"
#include "oracles.hpp"

using namespace gtsolve;

namespace {

// Ring of `n` agents, each seeing its two neighbors.
GraphicalGame random_ring(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  GraphicalGame g;
  g.actions.assign(n, k);
  g.parents.resize(n);
  g.family_payoffs.resize(n);
  for (int i = 0; i < n; ++i) {
    g.parents[i] = {(i + n - 1) % n, (i + 1) % n};
    g.family_payoffs[i].resize(static_cast<std::size_t>(k) * k * k);
    for (double& v : g.family_payoffs[i]) v = dist(rng);
  }
  g.validate();
  return g;
}

Eigen::VectorXd random_mixed(const AgentIndexing& ix, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  Eigen::VectorXd s(ix.total_dim);
  for (int n = 0; n < ix.agents(); ++n) {
    double sum = 0.0;
    for (int i = 0; i < ix.length(n); ++i) {
      s[ix.offset(n) + i] = dist(rng);
      sum += s[ix.offset(n) + i];
    }
    s.segment(ix.offset(n), ix.length(n)) /= sum;
  }
  return s;
}

}  // namespace

TEST_CASE("graphical deviations agree with the dense expansion") {
  std::mt19937_64 rng(31);
  GraphicalGame g = random_ring(5, 2, rng);
  NormalFormGame dense = flatten_to_normal_form(g);
  AgentIndexing ix = g.indexing();

  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd s = random_mixed(ix, rng);
    Eigen::VectorXd local = graphical_deviation_vector(g, s);
    Eigen::VectorXd full = normal_deviation_vector(dense, s);
    CHECK((local - full).lpNorm<Eigen::Infinity>() < 1e-12);

    Eigen::MatrixXd jl = graphical_deviation_jacobian(g, s);
    Eigen::MatrixXd jf = normal_deviation_jacobian(dense, s);
    CHECK((jl - jf).lpNorm<Eigen::Infinity>() < 1e-12);

    std::vector<double> pl = graphical_expected_payoffs(g, s);
    std::vector<double> pf = normal_expected_payoffs(dense, s);
    for (int n = 0; n < g.agents(); ++n) {
      CHECK(pl[n] == doctest::Approx(pf[n]).epsilon(1e-12));
    }
  }
}

TEST_CASE("graphical jacobian matches finite differences") {
  std::mt19937_64 rng(37);
  GraphicalGame g = random_ring(4, 3, rng);
  Eigen::VectorXd s = random_mixed(g.indexing(), rng);
  Eigen::MatrixXd jac = graphical_deviation_jacobian(g, s);
  auto f = [&](const Eigen::VectorXd& x) {
    return graphical_deviation_vector(g, x);
  };
  Eigen::MatrixXd fd = oracle::fd_jacobian(f, s, 1e-6);
  CHECK((jac - fd).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("graphical deviation obeys the degree identity") {
  std::mt19937_64 rng(39);
  GraphicalGame g = random_ring(6, 3, rng);
  Eigen::VectorXd s = random_mixed(g.indexing(), rng);
  Eigen::VectorXd v = graphical_deviation_vector(g, s);
  Eigen::MatrixXd jac = graphical_deviation_jacobian(g, s);
  double n1 = static_cast<double>(g.agents() - 1);
  CHECK((jac * s - n1 * v).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("deviation cost scales with family tables, not the joint space") {
  std::mt19937_64 rng(41);
  GraphicalGame g = random_ring(8, 2, rng);
  Eigen::VectorXd s = random_mixed(g.indexing(), rng);

  reset_graphical_op_count();
  graphical_deviation_vector(g, s);
  std::uint64_t ops = graphical_op_count();

  // Each agent sweeps its own table once per action: 8 agents x 2 actions
  // x 4 parent entries plus bookkeeping. The dense tensor would touch
  // 8 x 2^8 = 2048 entries per agent slice.
  std::uint64_t table_work = 0;
  for (int n = 0; n < g.agents(); ++n) {
    table_work += static_cast<std::uint64_t>(g.family_size(n));
  }
  CHECK(ops >= table_work);
  CHECK(ops <= 8 * table_work);
}

TEST_CASE("validation rejects malformed structure") {
  GraphicalGame g;
  g.actions = {2, 2};
  g.parents = {{1}, {0}};
  g.family_payoffs = {{1, 2, 3, 4}, {1, 2, 3, 4}};
  CHECK_NOTHROW(g.validate());

  GraphicalGame self = g;
  self.parents[0] = {0};
  CHECK_THROWS(self.validate());

  GraphicalGame dup = g;
  dup.parents = {{1, 1}, {0}};
  dup.family_payoffs[0].resize(8);
  CHECK_THROWS(dup.validate());

  GraphicalGame bad_size = g;
  bad_size.family_payoffs[1].resize(3);
  CHECK_THROWS(bad_size.validate());

  GraphicalGame out_of_range = g;
  out_of_range.parents[1] = {5};
  CHECK_THROWS(out_of_range.validate());
}

TEST_CASE("flatten refuses joint spaces over the cap") {
  GraphicalGame g;
  int n = 24;
  g.actions.assign(n, 2);
  g.parents.resize(n);
  g.family_payoffs.resize(n);
  for (int i = 0; i < n; ++i) {
    g.parents[i] = {(i + 1) % n};
    g.family_payoffs[i].assign(4, 0.0);
  }
  CHECK_THROWS(flatten_to_normal_form(g));
}

TEST_CASE("json round trip preserves structure") {
  std::mt19937_64 rng(43);
  GraphicalGame g = random_ring(4, 2, rng);
  GraphicalGame h = graphical_from_json(graphical_to_json(g));
  CHECK(h.actions == g.actions);
  CHECK(h.parents == g.parents);
  REQUIRE(h.family_payoffs.size() == g.family_payoffs.size());
  for (std::size_t i = 0; i < g.family_payoffs.size(); ++i) {
    for (std::size_t j = 0; j < g.family_payoffs[i].size(); ++j) {
      CHECK(h.family_payoffs[i][j] == doctest::Approx(g.family_payoffs[i][j]));
    }
  }
}
