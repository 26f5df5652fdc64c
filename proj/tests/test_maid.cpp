#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "gtsolve/game_tree.hpp"
#include "gtsolve/maid.hpp"

using namespace gtsolve;

namespace {

using Chain = std::vector<std::pair<int, int>>;

Eigen::VectorXd random_rows(std::mt19937_64& rng, int rows, int card) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd t(rows * card);
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int a = 0; a < card; ++a) {
      t(r * card + a) = u(rng);
      sum += t(r * card + a);
    }
    for (int a = 0; a < card; ++a) t(r * card + a) /= sum;
  }
  return t;
}

int rows_of(const Maid& m, const MaidVariable& v) {
  int rows = 1;
  for (int p : v.parents) rows *= m.vars[static_cast<std::size_t>(p)].card;
  return rows;
}

// two stages for the first agent around one move of the second, with the
// last decision observing both earlier ones and payoffs over all three
Maid two_stage_maid(std::mt19937_64& rng) {
  Maid m;
  m.agents = 2;
  m.vars.resize(3);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 2, {}};
  m.vars[1] = {MaidVariable::Kind::Decision, 1, {}, 2, {}};
  m.vars[2] = {MaidVariable::Kind::Decision, 0, {0, 1}, 2, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 2; ++n) {
    UtilityTerm t;
    t.owner = n;
    t.value = Factor::zeros({0, 1, 2}, {2, 2, 2});
    for (int k = 0; k < 8; ++k) t.value.table(k) = u(rng);
    m.utilities.push_back(std::move(t));
  }
  return m;
}

// random small diagram: perfect recall is kept by making every later own
// decision observe the previous one and everything it observed
Maid random_maid(std::mt19937_64& rng, int agents, int chance_vars,
                 int extra_decisions) {
  std::uniform_int_distribution<int> card_pick(2, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Maid m;
  m.agents = agents;

  std::vector<int> kinds;  // -1 chance, else owning agent
  for (int n = 0; n < agents; ++n) kinds.push_back(n);
  for (int i = 0; i < chance_vars; ++i) kinds.push_back(-1);
  for (int i = 0; i < extra_decisions; ++i)
    kinds.push_back(static_cast<int>(rng() % static_cast<unsigned>(agents)));
  std::shuffle(kinds.begin(), kinds.end(), rng);

  std::vector<std::vector<int>> req(static_cast<std::size_t>(agents));
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    MaidVariable v;
    v.card = card_pick(rng);
    int id = static_cast<int>(i);
    if (kinds[i] < 0) {
      v.kind = MaidVariable::Kind::Chance;
      for (int p = 0; p < id; ++p)
        if (v.parents.size() < 2 && rng() % 3 == 0) v.parents.push_back(p);
      v.table = random_rows(rng, rows_of(m, v), v.card);
    } else {
      v.kind = MaidVariable::Kind::Decision;
      v.owner = kinds[i];
      v.parents = req[static_cast<std::size_t>(v.owner)];
      for (int p = 0; p < id; ++p)
        if (rng() % 3 == 0 &&
            std::find(v.parents.begin(), v.parents.end(), p) ==
                v.parents.end())
          v.parents.push_back(p);
      std::sort(v.parents.begin(), v.parents.end());
      auto& r = req[static_cast<std::size_t>(v.owner)];
      r = v.parents;
      r.push_back(id);
      std::sort(r.begin(), r.end());
    }
    m.vars.push_back(std::move(v));
  }

  int total = m.size();
  for (int n = 0; n < agents; ++n) {
    int terms = 1 + static_cast<int>(rng() % 2);
    for (int t = 0; t < terms; ++t) {
      std::vector<int> scope;
      for (int v = 0; v < total; ++v)
        if (scope.size() < 3 && rng() % 3 == 0) scope.push_back(v);
      if (scope.empty()) scope.push_back(static_cast<int>(rng() %
                                          static_cast<unsigned>(total)));
      std::vector<int> cards;
      for (int v : scope) cards.push_back(m.vars[static_cast<std::size_t>(v)].card);
      UtilityTerm term;
      term.owner = n;
      term.value = Factor::zeros(scope, cards);
      for (Eigen::Index k = 0; k < term.value.table.size(); ++k)
        term.value.table(k) = u(rng);
      m.utilities.push_back(std::move(term));
    }
  }
  return m;
}

DecisionRules random_decision_rules(std::mt19937_64& rng, const Maid& m) {
  DecisionRules rules;
  rules.tables.resize(static_cast<std::size_t>(m.size()));
  for (int v = 0; v < m.size(); ++v)
    if (m.vars[static_cast<std::size_t>(v)].kind ==
        MaidVariable::Kind::Decision)
      rules.tables[static_cast<std::size_t>(v)] = random_rows(
          rng, rows_of(m, m.vars[static_cast<std::size_t>(v)]),
          m.vars[static_cast<std::size_t>(v)].card);
  return rules;
}

BehaviorProfile random_behavior(std::mt19937_64& rng,
                                const SequenceFormSpace& space) {
  BehaviorProfile bp;
  bp.probs.resize(static_cast<std::size_t>(space.agents()));
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int n = 0; n < space.agents(); ++n) {
    const auto& cat = space.catalogs[static_cast<std::size_t>(n)];
    auto& bn = bp.probs[static_cast<std::size_t>(n)];
    bn.resize(cat.infosets.size());
    for (std::size_t i = 0; i < cat.infosets.size(); ++i) {
      Eigen::VectorXd b(cat.infosets[i].actions);
      for (int a = 0; a < b.size(); ++a) b(a) = u(rng);
      bn[i] = b / b.sum();
    }
  }
  return bp;
}

// coordinate permutation between two catalogs of the same agent, matched by
// the (infoset, action) chains of the terminal sequences
std::vector<int> coord_map(const AgentCatalog& from, const AgentCatalog& to) {
  std::map<Chain, int> pos;
  for (std::size_t i = 0; i < to.terminal_sequences.size(); ++i)
    pos[to.terminal_sequences[i]] = static_cast<int>(i);
  std::vector<int> perm;
  for (const Chain& ch : from.terminal_sequences) {
    REQUIRE(pos.count(ch) == 1);
    perm.push_back(pos.at(ch));
  }
  return perm;
}

// expected utility per agent by walking every full assignment once
Eigen::VectorXd enumerate_payoffs(const Maid& m, const DecisionRules& rules) {
  int nv = m.size();
  std::vector<int> vals(static_cast<std::size_t>(nv), 0);
  Eigen::VectorXd pay = Eigen::VectorXd::Zero(m.agents);
  while (true) {
    double p = 1.0;
    for (int v = 0; v < nv; ++v) {
      const MaidVariable& var = m.vars[static_cast<std::size_t>(v)];
      long long row = 0;
      for (int q : var.parents)
        row = row * m.vars[static_cast<std::size_t>(q)].card +
              vals[static_cast<std::size_t>(q)];
      const Eigen::VectorXd& table =
          var.kind == MaidVariable::Kind::Chance
              ? var.table
              : rules.tables[static_cast<std::size_t>(v)];
      p *= table(row * var.card + vals[static_cast<std::size_t>(v)]);
    }
    for (const UtilityTerm& t : m.utilities) {
      long long k = 0;
      for (std::size_t s = 0; s < t.value.vars.size(); ++s)
        k = k * t.value.cards[s] +
            vals[static_cast<std::size_t>(t.value.vars[s])];
      pay(t.owner) += p * t.value.table(k);
    }
    int v = nv - 1;
    while (v >= 0 &&
           vals[static_cast<std::size_t>(v)] + 1 ==
               m.vars[static_cast<std::size_t>(v)].card) {
      vals[static_cast<std::size_t>(v)] = 0;
      --v;
    }
    if (v < 0) break;
    ++vals[static_cast<std::size_t>(v)];
  }
  return pay;
}

}  // namespace

TEST_CASE("information sets and terminal sequences follow parent assignments") {
  std::mt19937_64 rng(42);
  Maid m = two_stage_maid(rng);
  MaidIndex idx = index_maid(m);

  REQUIRE(idx.decisions[0] == std::vector<int>{0, 2});
  REQUIRE(idx.decisions[1] == std::vector<int>{1});
  CHECK(idx.infoset_offset[0] == 0);
  CHECK(idx.infoset_offset[2] == 1);
  CHECK(idx.dn_scope[0] == std::vector<int>{0, 1, 2});
  CHECK(idx.dn_scope[1] == std::vector<int>{1});

  std::vector<AgentCatalog> cats = catalogs_from_maid(m, idx);
  REQUIRE(cats[0].infosets.size() == 5);
  REQUIRE(cats[0].terminal_sequences.size() == 8);
  REQUIRE(cats[1].infosets.size() == 1);
  REQUIRE(cats[1].terminal_sequences.size() == 2);

  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        Chain want = {{0, a}, {1 + a * 2 + b, c}};
        CHECK(cats[0].terminal_sequences[static_cast<std::size_t>(
                  (a * 2 + b) * 2 + c)] == want);
      }

  // listed parent order decides the row, sorted order the enumeration
  Maid rev = m;
  rev.vars[2].parents = {1, 0};
  MaidIndex ridx = index_maid(rev);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      CHECK(idx.row_of_infoset[2][static_cast<std::size_t>(a * 2 + b)] ==
            a * 2 + b);
      CHECK(ridx.row_of_infoset[2][static_cast<std::size_t>(a * 2 + b)] ==
            b * 2 + a);
    }
}

TEST_CASE("rule tables and realization plans convert back and forth") {
  std::mt19937_64 rng(7);
  Maid m = two_stage_maid(rng);
  MaidSequenceView view(m, 1e-4);
  DecisionRules rules = random_decision_rules(rng, m);

  Eigen::VectorXd plan = view.plan_from_rules(rules);
  const auto& ix = view.indexing();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        double want = rules.tables[0](a) * rules.tables[2]((a * 2 + b) * 2 + c);
        CHECK(plan(ix.offset(0) + (a * 2 + b) * 2 + c) ==
              doctest::Approx(want).epsilon(1e-12));
      }
  for (int b = 0; b < 2; ++b)
    CHECK(plan(ix.offset(1) + b) ==
          doctest::Approx(rules.tables[1](b)).epsilon(1e-12));

  DecisionRules back = view.rules_from_plan(plan);
  for (int v : {0, 1, 2})
    CHECK((back.tables[static_cast<std::size_t>(v)] -
           rules.tables[static_cast<std::size_t>(v)])
              .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("deviation and its gradient match a full tree expansion") {
  for (unsigned seed : {3u, 5u, 9u, 21u, 33u}) {
    std::mt19937_64 rng(seed);
    Maid m = random_maid(rng, 2 + static_cast<int>(seed % 2), 2, 1);
    MaidSequenceView mv(m, 1e-3);
    TreeSequenceView tv(maid_to_tree(m), 1e-3);
    REQUIRE(mv.dim() == tv.dim());

    std::vector<std::vector<int>> perm;
    for (int n = 0; n < m.agents; ++n)
      perm.push_back(coord_map(mv.space().catalogs[static_cast<std::size_t>(n)],
                               tv.space().catalogs[static_cast<std::size_t>(n)]));

    const auto& mix = mv.indexing();
    const auto& tix = tv.indexing();
    for (int trial = 0; trial < 3; ++trial) {
      BehaviorProfile bp = random_behavior(rng, mv.space());
      Eigen::VectorXd pm = behavior_to_plan(mv.space(), bp);
      Eigen::VectorXd pt = behavior_to_plan(tv.space(), bp);
      for (int n = 0; n < m.agents; ++n)
        for (int i = 0; i < mix.length(n); ++i)
          REQUIRE(pm(mix.offset(n) + i) ==
                  doctest::Approx(pt(tix.offset(n) +
                                     perm[static_cast<std::size_t>(n)]
                                         [static_cast<std::size_t>(i)]))
                      .epsilon(1e-12));

      Eigen::VectorXd vm = mv.deviation(pm);
      Eigen::VectorXd vt = tv.deviation(pt);
      for (int n = 0; n < m.agents; ++n)
        for (int i = 0; i < mix.length(n); ++i)
          CHECK(std::abs(vm(mix.offset(n) + i) -
                         vt(tix.offset(n) +
                            perm[static_cast<std::size_t>(n)]
                                [static_cast<std::size_t>(i)])) < 1e-9);

      Eigen::MatrixXd jm = mv.deviation_jacobian(pm);
      Eigen::MatrixXd jt = tv.deviation_jacobian(pt);
      for (int n = 0; n < m.agents; ++n)
        for (int o = 0; o < m.agents; ++o)
          for (int i = 0; i < mix.length(n); ++i)
            for (int j = 0; j < mix.length(o); ++j)
              CHECK(std::abs(
                        jm(mix.offset(n) + i, mix.offset(o) + j) -
                        jt(tix.offset(n) + perm[static_cast<std::size_t>(n)]
                                               [static_cast<std::size_t>(i)],
                           tix.offset(o) + perm[static_cast<std::size_t>(o)]
                                               [static_cast<std::size_t>(j)])) <
                    1e-9);

      std::vector<double> rm = mv.regret(pm);
      std::vector<double> rt = tv.regret(pt);
      for (int n = 0; n < m.agents; ++n)
        CHECK(std::abs(rm[static_cast<std::size_t>(n)] -
                       rt[static_cast<std::size_t>(n)]) < 1e-8);
    }
  }
}

TEST_CASE("deviation gradient matches finite differences along feasible directions") {
  std::mt19937_64 rng(17);
  Maid m = random_maid(rng, 2, 2, 1);
  MaidSequenceView view(m, 1e-3);
  const SequenceFormSpace& space = view.space();

  Eigen::VectorXd sigma = space.uniform_plan;
  Eigen::MatrixXd jac = view.deviation_jacobian(sigma);

  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(space.C);
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd r(space.ix.total_dim);
    for (int i = 0; i < r.size(); ++i) r(i) = g(rng);
    Eigen::VectorXd dir = r - cod.solve(space.C * r);
    REQUIRE((space.C * dir).lpNorm<Eigen::Infinity>() < 1e-10);
    dir /= dir.norm();
    double h = 1e-5;
    Eigen::VectorXd fd =
        (view.deviation(sigma + h * dir) - view.deviation(sigma - h * dir)) /
        (2.0 * h);
    CHECK((fd - jac * dir).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("single decision games score actions by expected utility") {
  Maid m;
  m.agents = 1;
  m.vars.resize(2);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 3, {}};
  m.vars[1] = {MaidVariable::Kind::Chance, -1, {0}, 2, {}};
  m.vars[1].table = Eigen::VectorXd(6);
  m.vars[1].table << 0.9, 0.1, 0.4, 0.6, 0.25, 0.75;
  UtilityTerm t;
  t.owner = 0;
  t.value = Factor::zeros({1}, {2});
  t.value.table << 2.0, -1.0;
  m.utilities.push_back(t);

  MaidSequenceView view(m, 1e-4);
  Eigen::VectorXd v = view.deviation(view.space().uniform_plan);
  CHECK(v(0) == doctest::Approx(0.9 * 2.0 - 0.1).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.4 * 2.0 - 0.6).epsilon(1e-12));
  CHECK(v(2) == doctest::Approx(0.25 * 2.0 - 0.75).epsilon(1e-12));
  CHECK(view.payoff_range(0) == doctest::Approx(3.0));
}

TEST_CASE("expected payoffs agree with enumeration") {
  for (unsigned seed : {2u, 6u, 14u}) {
    std::mt19937_64 rng(seed);
    Maid m = random_maid(rng, 2, 2, 1);
    DecisionRules rules = random_decision_rules(rng, m);
    Eigen::VectorXd fast = expected_payoffs(m, rules);
    Eigen::VectorXd slow = enumerate_payoffs(m, rules);
    CHECK((fast - slow).lpNorm<Eigen::Infinity>() < 1e-10);

    // the support-weighted sum of deviation entries is the same quantity
    MaidSequenceView view(m, 1e-4);
    Eigen::VectorXd plan = view.plan_from_rules(rules);
    std::vector<double> via_view = view.payoffs(plan);
    for (int n = 0; n < m.agents; ++n)
      CHECK(via_view[static_cast<std::size_t>(n)] ==
            doctest::Approx(slow(n)).epsilon(1e-10));
  }
}

TEST_CASE("recall and ownership violations are rejected") {
  Maid m;
  m.agents = 2;
  m.vars.resize(3);
  m.vars[0] = {MaidVariable::Kind::Decision, 0, {}, 2, {}};
  m.vars[1] = {MaidVariable::Kind::Decision, 1, {}, 2, {}};
  m.vars[2] = {MaidVariable::Kind::Decision, 0, {1}, 2, {}};  // forgets 0
  UtilityTerm t;
  t.owner = 0;
  t.value = Factor::zeros({0}, {2});
  m.utilities.push_back(t);
  UtilityTerm t2 = t;
  t2.owner = 1;
  m.utilities.push_back(t2);
  CHECK_THROWS_AS(validate_maid(m), MaidError);

  m.vars[2].parents = {0, 1};
  CHECK_NOTHROW(validate_maid(m));

  Maid lone = m;
  lone.agents = 3;  // agent 2 owns nothing
  CHECK_THROWS_AS(validate_maid(lone), MaidError);

  Maid bad_card = m;
  bad_card.utilities[0].value = Factor::zeros({0}, {3});
  CHECK_THROWS_AS(validate_maid(bad_card), MaidError);

  Maid cyc = m;
  cyc.vars[0].parents = {2};
  CHECK_THROWS_AS(validate_maid(cyc), MaidError);
}

TEST_CASE("relevance graph marks upstream decisions and decomposes into layers") {
  std::mt19937_64 rng(4);
  Maid m = two_stage_maid(rng);
  RelevanceGraph g = approx_relevance_graph(m);
  REQUIRE(g.decisions == std::vector<int>{0, 1, 2});
  CHECK(g.over_approximated);
  CHECK(g.edges_out[0] == std::vector<int>{1, 2});
  CHECK(g.edges_out[1] == std::vector<int>{0, 2});
  CHECK(g.edges_out[2].empty());

  std::vector<std::vector<int>> sccs = relevance_scc_decompose(m, g);
  REQUIRE(sccs.size() == 2);
  CHECK(sccs[0] == std::vector<int>{2});
  CHECK(sccs[1] == std::vector<int>{0, 1});

  // layered payoffs give an acyclic graph, solved back to front
  Maid layered;
  layered.agents = 3;
  layered.vars.resize(3);
  for (int i = 0; i < 3; ++i)
    layered.vars[static_cast<std::size_t>(i)] = {
        MaidVariable::Kind::Decision, i, {}, 2, {}};
  auto term = [&](int owner, std::vector<int> scope) {
    UtilityTerm u;
    u.owner = owner;
    std::vector<int> cards(scope.size(), 2);
    u.value = Factor::zeros(scope, cards);
    u.value.table.setLinSpaced(u.value.table.size(), 0.0, 1.0);
    layered.utilities.push_back(std::move(u));
  };
  term(0, {0, 1});
  term(1, {1, 2});
  term(2, {2});
  RelevanceGraph lg = approx_relevance_graph(layered);
  CHECK(lg.edges_out[0] == std::vector<int>{1});
  CHECK(lg.edges_out[1] == std::vector<int>{2});
  CHECK(lg.edges_out[2].empty());
  std::vector<std::vector<int>> lsccs = relevance_scc_decompose(layered, lg);
  REQUIRE(lsccs.size() == 3);
  CHECK(lsccs[0] == std::vector<int>{2});
  CHECK(lsccs[1] == std::vector<int>{1});
  CHECK(lsccs[2] == std::vector<int>{0});
}

TEST_CASE("games round trip through JSON") {
  std::mt19937_64 rng(10);
  Maid m = random_maid(rng, 2, 2, 1);
  Maid back = maid_from_json(maid_to_json(m));

  REQUIRE(back.agents == m.agents);
  REQUIRE(back.size() == m.size());
  for (int v = 0; v < m.size(); ++v) {
    const auto& a = m.vars[static_cast<std::size_t>(v)];
    const auto& b = back.vars[static_cast<std::size_t>(v)];
    CHECK(a.kind == b.kind);
    CHECK(a.parents == b.parents);
    CHECK(a.card == b.card);
    if (a.kind == MaidVariable::Kind::Decision) CHECK(a.owner == b.owner);
    if (a.kind == MaidVariable::Kind::Chance) CHECK(a.table == b.table);
  }
  REQUIRE(back.utilities.size() == m.utilities.size());
  for (std::size_t t = 0; t < m.utilities.size(); ++t) {
    CHECK(back.utilities[t].owner == m.utilities[t].owner);
    CHECK(back.utilities[t].value.vars == m.utilities[t].value.vars);
    CHECK(back.utilities[t].value.table == m.utilities[t].value.table);
  }

  CHECK_THROWS_AS(maid_from_json("{\"type\":\"tree\"}"), MaidError);
  CHECK_THROWS_AS(
      maid_from_json(
          "{\"type\":\"maid\",\"agents\":1,\"variables\":[{\"kind\":\"wat\","
          "\"parents\":[],\"card\":2}]}"),
      MaidError);
  // a network variable after a utility term is out of order
  CHECK_THROWS_AS(
      maid_from_json(
          "{\"type\":\"maid\",\"agents\":1,\"variables\":["
          "{\"kind\":\"decision\",\"owner\":0,\"parents\":[],\"card\":2},"
          "{\"kind\":\"utility\",\"owner\":0,\"parents\":[0],\"table\":[1,2]},"
          "{\"kind\":\"chance\",\"parents\":[],\"card\":2,\"table\":[0.5,0.5]}"
          "]}"),
      MaidError);
}

TEST_CASE("full tree expansion puts decisions in their information sets") {
  std::mt19937_64 rng(12);
  Maid m = two_stage_maid(rng);
  m.vars.push_back({MaidVariable::Kind::Chance, -1, {2}, 2, {}});
  m.vars[3].table = Eigen::VectorXd(4);
  m.vars[3].table << 0.3, 0.7, 0.8, 0.2;
  m.utilities[0].value = Factor::zeros({0, 3}, {2, 2});
  m.utilities[0].value.table << 1.0, 2.0, 3.0, 4.0;

  GameTree tree = maid_to_tree(m);
  CHECK_NOTHROW(validate_tree(tree));
  int leaves = 0;
  int chance = 0;
  for (const TreeNode& node : tree.nodes) {
    if (node.kind == TreeNode::Kind::Leaf) ++leaves;
    if (node.kind == TreeNode::Kind::Chance) {
      ++chance;
      REQUIRE(node.probs.size() == 2);
      bool low = node.probs[0] == 0.3 && node.probs[1] == 0.7;
      bool high = node.probs[0] == 0.8 && node.probs[1] == 0.2;
      CHECK((low || high));
    }
  }
  CHECK(leaves == 16);
  CHECK(chance == 8);
}
