#include "gtsolve/maid_solve.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

using namespace gtsolve;

namespace {

Eigen::VectorXd random_values(std::mt19937_64& rng, std::int64_t count) {
  Eigen::VectorXd v(count);
  for (std::int64_t i = 0; i < count; ++i) v(i) = 2.0 * uniform01(rng) - 1.0;
  return v;
}

UtilityTerm term_over(const Maid& maid, int owner, std::vector<int> scope,
                      std::mt19937_64& rng) {
  std::vector<int> cards;
  for (int p : scope) cards.push_back(maid.vars[static_cast<std::size_t>(p)].card);
  UtilityTerm t;
  t.owner = owner;
  t.value = Factor::zeros(scope, cards);
  t.value.table = random_values(rng, t.value.table.size());
  return t;
}

// Three binary decisions in a line, each agent sees every earlier move, so
// optimal play is plain backward induction.
Maid layered_maid(std::mt19937_64& rng) {
  Maid m;
  m.agents = 3;
  m.vars.resize(3);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 2, {}};
  m.vars[1] = {MaidVariable::Kind::Decision, 1, {0}, 2, {}};
  m.vars[2] = {MaidVariable::Kind::Decision, 2, {0, 1}, 2, {}};
  m.utilities.push_back(term_over(m, 0, {0, 1}, rng));
  m.utilities.push_back(term_over(m, 1, {1, 2}, rng));
  m.utilities.push_back(term_over(m, 2, {0, 2}, rng));
  return m;
}

// Agent 0 moves first and last; the middle move belongs to agent 1 and both
// opening moves are simultaneous, so the opening pair must be solved jointly.
Maid two_stage_maid(std::mt19937_64& rng) {
  Maid m;
  m.agents = 2;
  m.vars.resize(3);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 2, {}};
  m.vars[1] = {MaidVariable::Kind::Decision, 1, {}, 2, {}};
  m.vars[2] = {MaidVariable::Kind::Decision, 0, {0, 1}, 2, {}};
  m.utilities.push_back(term_over(m, 0, {0, 1, 2}, rng));
  m.utilities.push_back(term_over(m, 1, {0, 1, 2}, rng));
  return m;
}

// One chance variable downstream of both decisions; agent 1 observes agent
// 0's move.
Maid observed_move_maid(std::mt19937_64& rng) {
  Maid m;
  m.agents = 2;
  m.vars.resize(3);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 2, {}};
  m.vars[1] = {MaidVariable::Kind::Decision, 1, {0}, 2, {}};
  Eigen::VectorXd table(8);
  table << 0.3, 0.7, 0.8, 0.2, 0.6, 0.4, 0.1, 0.9;
  m.vars[2] = {MaidVariable::Kind::Chance, -1, {0, 1}, 2, table};
  m.utilities.push_back(term_over(m, 0, {0, 1, 2}, rng));
  m.utilities.push_back(term_over(m, 1, {0, 1, 2}, rng));
  return m;
}

}  // namespace

TEST_CASE("a fully observed line of decisions solves by backward induction") {
  for (std::uint64_t seed : {3u, 11u, 42u}) {
    std::mt19937_64 rng(seed);
    Maid maid = layered_maid(rng);

    MaidSolveConfig cfg;
    cfg.solve.seed = seed;
    MaidSolveResult r = solve_maid(maid, cfg);

    REQUIRE(r.solved);
    // downstream decisions first
    REQUIRE(r.components.size() == 3);
    CHECK(r.components[0] == std::vector<int>{2});
    CHECK(r.components[1] == std::vector<int>{1});
    CHECK(r.components[2] == std::vector<int>{0});
    CHECK(r.regret <= 1e-8);

    // generic payoffs make every optimal move strict, so rules are
    // near-pure after the floor clipping
    validate_rules(maid, r.rules);
    for (int d = 0; d < 3; ++d) {
      const Eigen::VectorXd& t = r.rules.tables[static_cast<std::size_t>(d)];
      for (std::int64_t row = 0; row * 2 < t.size(); ++row)
        CHECK(t.segment(row * 2, 2).maxCoeff() > 0.99);
    }
  }
}

TEST_CASE("simultaneous openers are solved jointly after the closing move") {
  for (std::uint64_t seed : {5u, 19u}) {
    std::mt19937_64 rng(seed);
    Maid maid = two_stage_maid(rng);

    MaidSolveConfig cfg;
    cfg.solve.seed = seed + 100;
    MaidSolveResult r = solve_maid(maid, cfg);

    REQUIRE(r.solved);
    REQUIRE(r.components.size() == 2);
    CHECK(r.components[0] == std::vector<int>{2});
    CHECK(r.components[1] == std::vector<int>{0, 1});
    CHECK(r.regret <= 1e-8);
  }
}

TEST_CASE("a user supplied relevance graph forces one joint solve") {
  std::mt19937_64 rng(7);
  Maid maid = observed_move_maid(rng);

  RelevanceGraph g;
  g.decisions = {0, 1};
  g.edges_out = {{1}, {0}};

  MaidSolveConfig cfg;
  cfg.graph = g;
  cfg.solve.seed = 7;
  MaidSolveResult r = solve_maid(maid, cfg);

  REQUIRE(r.solved);
  REQUIRE(r.components.size() == 1);
  CHECK(r.components[0] == std::vector<int>{0, 1});
  CHECK(r.regret <= 1e-8);
}

TEST_CASE("relevance edges are read from the game description when present") {
  std::mt19937_64 rng(9);
  Maid maid = two_stage_maid(rng);
  std::string plain = maid_to_json(maid);

  CHECK(!relevance_edges_from_json(plain, maid).has_value());

  std::string with_edges = plain.substr(0, plain.rfind('}')) +
                           ",\"relevance_edges\": [[0, 2], [1, 2], [0, 1]]}";
  auto g = relevance_edges_from_json(with_edges, maid);
  REQUIRE(g.has_value());
  CHECK(!g->over_approximated);
  CHECK(g->decisions == std::vector<int>{0, 1, 2});
  CHECK(g->edges_out[0] == std::vector<int>{1, 2});
  CHECK(g->edges_out[1] == std::vector<int>{2});
  CHECK(g->edges_out[2].empty());

  std::string bad_endpoint = plain.substr(0, plain.rfind('}')) +
                             ",\"relevance_edges\": [[0, 7]]}";
  CHECK_THROWS_AS(relevance_edges_from_json(bad_endpoint, maid), MaidError);

  std::mt19937_64 rng2(9);
  Maid chancey = observed_move_maid(rng2);
  std::string chance_endpoint =
      maid_to_json(chancey).substr(0, maid_to_json(chancey).rfind('}')) +
      ",\"relevance_edges\": [[0, 2]]}";
  CHECK_THROWS_AS(relevance_edges_from_json(chance_endpoint, chancey),
                  MaidError);
}
