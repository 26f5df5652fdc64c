#include "gtsolve/maid.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace gtsolve {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<int> sorted_union(const std::vector<int>& a,
                              const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

// positions of each element of sub (sorted) within super (sorted superset)
std::vector<int> positions_in(const std::vector<int>& sub,
                              const std::vector<int>& super) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  std::size_t k = 0;
  for (int v : sub) {
    while (k < super.size() && super[k] < v) ++k;
    pos.push_back(static_cast<int>(k));
  }
  return pos;
}

std::vector<int> cards_of(const Maid& maid, const std::vector<int>& scope) {
  std::vector<int> cards;
  cards.reserve(scope.size());
  for (int v : scope) cards.push_back(maid.vars[static_cast<std::size_t>(v)].card);
  return cards;
}

std::int64_t prod_cards(const std::vector<int>& cards) {
  std::int64_t p = 1;
  for (int c : cards) {
    p *= c;
    if (p > (std::int64_t{1} << 22))
      throw MaidError("a variable scope is too large to enumerate");
  }
  return p;
}

// last scope variable fastest, matching factor table order
void decode_assignment(std::int64_t idx, const std::vector<int>& cards,
                       std::vector<int>& vals) {
  vals.resize(cards.size());
  for (std::size_t k = cards.size(); k-- > 0;) {
    vals[k] = static_cast<int>(idx % cards[k]);
    idx /= cards[k];
  }
}

std::int64_t encode_scope(const std::vector<int>& vals_by_id,
                          const std::vector<int>& scope,
                          const std::vector<int>& cards) {
  std::int64_t idx = 0;
  for (std::size_t k = 0; k < scope.size(); ++k)
    idx = idx * cards[k] + vals_by_id[static_cast<std::size_t>(scope[k])];
  return idx;
}

// conditional-table row for the listed parent order, last parent fastest
std::int64_t listed_row(const Maid& maid, const MaidVariable& var,
                        const std::vector<int>& vals_by_id) {
  std::int64_t row = 0;
  for (int p : var.parents)
    row = row * maid.vars[static_cast<std::size_t>(p)].card +
          vals_by_id[static_cast<std::size_t>(p)];
  return row;
}

std::vector<int> sorted_parents(const MaidVariable& var) {
  std::vector<int> s = var.parents;
  std::sort(s.begin(), s.end());
  return s;
}

bool is_decision(const MaidVariable& v) {
  return v.kind == MaidVariable::Kind::Decision;
}

}  // namespace

DecisionRules uniform_rules(const Maid& maid) {
  DecisionRules rules;
  rules.tables.resize(static_cast<std::size_t>(maid.size()));
  for (int v = 0; v < maid.size(); ++v) {
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(v)];
    if (!is_decision(var)) continue;
    std::int64_t rows = 1;
    for (int p : var.parents) rows *= maid.vars[static_cast<std::size_t>(p)].card;
    rules.tables[static_cast<std::size_t>(v)] =
        VectorXd::Constant(rows * var.card, 1.0 / var.card);
  }
  return rules;
}

void validate_rules(const Maid& maid, const DecisionRules& rules) {
  if (static_cast<int>(rules.tables.size()) != maid.size())
    throw MaidError("rule profile has the wrong number of tables");
  for (int v = 0; v < maid.size(); ++v) {
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(v)];
    if (!is_decision(var)) continue;
    const VectorXd& t = rules.tables[static_cast<std::size_t>(v)];
    std::int64_t rows = 1;
    for (int p : var.parents) rows *= maid.vars[static_cast<std::size_t>(p)].card;
    if (t.size() != rows * var.card)
      throw MaidError("rule table for variable " + std::to_string(v) +
                      " has the wrong size");
    for (std::int64_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (int a = 0; a < var.card; ++a) {
        double x = t(r * var.card + a);
        if (x < -1e-12)
          throw MaidError("rule table for variable " + std::to_string(v) +
                          " has a negative entry");
        sum += x;
      }
      if (std::abs(sum - 1.0) > 1e-8)
        throw MaidError("rule table for variable " + std::to_string(v) +
                        " has an unnormalized row");
    }
  }
}

BayesNet net_for(const Maid& maid, const DecisionRules& rules) {
  BayesNet net;
  net.vars.resize(static_cast<std::size_t>(maid.size()));
  for (int v = 0; v < maid.size(); ++v) {
    const MaidVariable& mv = maid.vars[static_cast<std::size_t>(v)];
    BayesVariable& bv = net.vars[static_cast<std::size_t>(v)];
    bv.parents = mv.parents;
    bv.card = mv.card;
    bv.table = is_decision(mv) ? rules.tables[static_cast<std::size_t>(v)]
                               : mv.table;
  }
  return net;
}

void validate_maid(const Maid& maid) {
  if (maid.agents < 1) throw MaidError("a game needs at least one agent");
  if (maid.vars.empty()) throw MaidError("a game needs at least one variable");
  std::vector<int> owned(static_cast<std::size_t>(maid.agents), 0);
  for (int v = 0; v < maid.size(); ++v) {
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(v)];
    if (var.card < 1)
      throw MaidError("variable " + std::to_string(v) +
                      " needs at least one value");
    if (is_decision(var)) {
      if (var.owner < 0 || var.owner >= maid.agents)
        throw MaidError("decision variable " + std::to_string(v) +
                        " has an invalid owner");
      ++owned[static_cast<std::size_t>(var.owner)];
    }
  }
  for (int n = 0; n < maid.agents; ++n)
    if (owned[static_cast<std::size_t>(n)] == 0)
      throw MaidError("agent " + std::to_string(n) +
                      " owns no decision variable");

  // chance tables, parent validity, and acyclicity via the induced network
  BayesNet net = net_for(maid, uniform_rules(maid));
  std::vector<int> topo;
  try {
    validate_net(net);
    topo = topo_order(net);
  } catch (const BayesNetError& e) {
    throw MaidError(e.what());
  }

  for (std::size_t t = 0; t < maid.utilities.size(); ++t) {
    const UtilityTerm& term = maid.utilities[t];
    if (term.owner < 0 || term.owner >= maid.agents)
      throw MaidError("utility term " + std::to_string(t) +
                      " has an invalid owner");
    try {
      validate_factor(term.value);
    } catch (const FactorError& e) {
      throw MaidError("utility term " + std::to_string(t) + ": " + e.what());
    }
    if (term.value.vars.empty())
      throw MaidError("utility term " + std::to_string(t) +
                      " needs at least one variable in scope");
    for (std::size_t k = 0; k < term.value.vars.size(); ++k) {
      int v = term.value.vars[k];
      if (v < 0 || v >= maid.size())
        throw MaidError("utility term " + std::to_string(t) +
                        " references an unknown variable");
      if (term.value.cards[k] != maid.vars[static_cast<std::size_t>(v)].card)
        throw MaidError("utility term " + std::to_string(t) +
                        " disagrees with variable " + std::to_string(v) +
                        " about its cardinality");
    }
  }

  // within each agent, later decisions must observe every earlier own
  // decision together with everything that decision observed
  std::vector<std::vector<int>> own(static_cast<std::size_t>(maid.agents));
  for (int v : topo)
    if (is_decision(maid.vars[static_cast<std::size_t>(v)]))
      own[static_cast<std::size_t>(maid.vars[static_cast<std::size_t>(v)].owner)]
          .push_back(v);
  for (int n = 0; n < maid.agents; ++n) {
    const auto& ds = own[static_cast<std::size_t>(n)];
    for (std::size_t i = 1; i < ds.size(); ++i) {
      std::vector<int> pa_i =
          sorted_parents(maid.vars[static_cast<std::size_t>(ds[i])]);
      for (std::size_t j = 0; j < i; ++j) {
        std::vector<int> need =
            sorted_parents(maid.vars[static_cast<std::size_t>(ds[j])]);
        need.push_back(ds[j]);
        std::sort(need.begin(), need.end());
        if (!std::includes(pa_i.begin(), pa_i.end(), need.begin(), need.end()))
          throw MaidError("decision " + std::to_string(ds[i]) + " of agent " +
                          std::to_string(n) + " must observe decision " +
                          std::to_string(ds[j]) +
                          " and everything it observed");
      }
    }
  }
}

MaidIndex index_maid(const Maid& maid) {
  MaidIndex idx;
  idx.decisions.resize(static_cast<std::size_t>(maid.agents));
  idx.infoset_offset.assign(static_cast<std::size_t>(maid.size()), -1);
  idx.row_of_infoset.resize(static_cast<std::size_t>(maid.size()));
  idx.dn_scope.resize(static_cast<std::size_t>(maid.agents));

  std::vector<int> topo = topo_order(net_for(maid, uniform_rules(maid)));
  for (int v : topo)
    if (is_decision(maid.vars[static_cast<std::size_t>(v)]))
      idx.decisions[static_cast<std::size_t>(
                        maid.vars[static_cast<std::size_t>(v)].owner)]
          .push_back(v);

  std::vector<int> vals;
  std::vector<int> vals_by_id(static_cast<std::size_t>(maid.size()), 0);
  for (int n = 0; n < maid.agents; ++n) {
    int offset = 0;
    for (int d : idx.decisions[static_cast<std::size_t>(n)]) {
      const MaidVariable& var = maid.vars[static_cast<std::size_t>(d)];
      std::vector<int> scope = sorted_parents(var);
      std::vector<int> cards = cards_of(maid, scope);
      std::int64_t count = prod_cards(cards);
      idx.infoset_offset[static_cast<std::size_t>(d)] = offset;
      auto& rows = idx.row_of_infoset[static_cast<std::size_t>(d)];
      rows.resize(static_cast<std::size_t>(count));
      for (std::int64_t fi = 0; fi < count; ++fi) {
        decode_assignment(fi, cards, vals);
        for (std::size_t k = 0; k < scope.size(); ++k)
          vals_by_id[static_cast<std::size_t>(scope[k])] = vals[k];
        rows[static_cast<std::size_t>(fi)] = listed_row(maid, var, vals_by_id);
      }
      offset += static_cast<int>(count);
    }
    const auto& ds = idx.decisions[static_cast<std::size_t>(n)];
    int last = ds.back();
    std::vector<int> scope =
        sorted_parents(maid.vars[static_cast<std::size_t>(last)]);
    scope.push_back(last);
    idx.dn_scope[static_cast<std::size_t>(n)] = sorted_unique(std::move(scope));
  }
  return idx;
}

std::vector<AgentCatalog> catalogs_from_maid(const Maid& maid,
                                             const MaidIndex& idx) {
  std::vector<AgentCatalog> catalogs(static_cast<std::size_t>(maid.agents));
  std::vector<int> vals;
  std::vector<int> vals_by_id(static_cast<std::size_t>(maid.size()), 0);

  // own (infoset, action) chain induced by the assignment currently written
  // into vals_by_id, over the first `count` decisions of agent n
  auto chain_at = [&](int n, std::size_t count) {
    std::vector<std::pair<int, int>> chain;
    const auto& ds = idx.decisions[static_cast<std::size_t>(n)];
    for (std::size_t j = 0; j < count; ++j) {
      int e = ds[j];
      std::vector<int> pa =
          sorted_parents(maid.vars[static_cast<std::size_t>(e)]);
      std::int64_t ui = encode_scope(vals_by_id, pa, cards_of(maid, pa));
      chain.emplace_back(
          idx.infoset_offset[static_cast<std::size_t>(e)] + static_cast<int>(ui),
          vals_by_id[static_cast<std::size_t>(e)]);
    }
    return chain;
  };

  for (int n = 0; n < maid.agents; ++n) {
    AgentCatalog& cat = catalogs[static_cast<std::size_t>(n)];
    const auto& ds = idx.decisions[static_cast<std::size_t>(n)];
    for (std::size_t di = 0; di < ds.size(); ++di) {
      int d = ds[di];
      const MaidVariable& var = maid.vars[static_cast<std::size_t>(d)];
      std::vector<int> scope = sorted_parents(var);
      std::vector<int> cards = cards_of(maid, scope);
      std::int64_t count = prod_cards(cards);
      for (std::int64_t fi = 0; fi < count; ++fi) {
        decode_assignment(fi, cards, vals);
        for (std::size_t k = 0; k < scope.size(); ++k)
          vals_by_id[static_cast<std::size_t>(scope[k])] = vals[k];
        InfoSetSpec spec;
        spec.actions = var.card;
        // every earlier own decision and its parents are observed here, so
        // the restricted history below is well defined
        spec.history = chain_at(n, di);
        cat.infosets.push_back(std::move(spec));
      }
    }
    const std::vector<int>& dn = idx.dn_scope[static_cast<std::size_t>(n)];
    std::vector<int> dn_cards = cards_of(maid, dn);
    std::int64_t count = prod_cards(dn_cards);
    for (std::int64_t fi = 0; fi < count; ++fi) {
      decode_assignment(fi, dn_cards, vals);
      for (std::size_t k = 0; k < dn.size(); ++k)
        vals_by_id[static_cast<std::size_t>(dn[k])] = vals[k];
      cat.terminal_sequences.push_back(chain_at(n, ds.size()));
    }
  }
  return catalogs;
}

Eigen::VectorXd expected_payoffs(const Maid& maid,
                                 const DecisionRules& rules) {
  validate_maid(maid);
  validate_rules(maid, rules);
  std::vector<std::vector<int>> scopes;
  for (const UtilityTerm& t : maid.utilities) scopes.push_back(t.value.vars);
  std::sort(scopes.begin(), scopes.end());
  scopes.erase(std::unique(scopes.begin(), scopes.end()), scopes.end());
  CliqueTree tree = build_clique_tree(net_for(maid, rules), scopes);
  VectorXd pay = VectorXd::Zero(maid.agents);
  for (const UtilityTerm& t : maid.utilities) {
    int c = tree.covering_clique(t.value.vars);
    Factor m = marginalize(tree.beliefs[static_cast<std::size_t>(c)],
                           t.value.vars);
    pay(t.owner) += m.table.dot(t.value.table);
  }
  return pay;
}

GameTree maid_to_tree(const Maid& maid) {
  validate_maid(maid);
  MaidIndex idx = index_maid(maid);
  std::vector<int> topo = topo_order(net_for(maid, uniform_rules(maid)));

  GameTree tree;
  tree.agents = maid.agents;
  std::vector<int> vals_by_id(static_cast<std::size_t>(maid.size()), 0);

  std::function<int(std::size_t)> build = [&](std::size_t k) -> int {
    if (k == topo.size()) {
      TreeNode leaf;
      leaf.kind = TreeNode::Kind::Leaf;
      leaf.payoffs = VectorXd::Zero(maid.agents);
      for (const UtilityTerm& t : maid.utilities) {
        std::int64_t i = encode_scope(vals_by_id, t.value.vars, t.value.cards);
        leaf.payoffs(t.owner) += t.value.table(i);
      }
      tree.nodes.push_back(std::move(leaf));
      return static_cast<int>(tree.nodes.size()) - 1;
    }
    int v = topo[k];
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(v)];
    TreeNode node;
    node.children.resize(static_cast<std::size_t>(var.card));
    if (is_decision(var)) {
      node.kind = TreeNode::Kind::Decision;
      node.owner = var.owner;
      std::vector<int> pa = sorted_parents(var);
      node.infoset = idx.infoset_offset[static_cast<std::size_t>(v)] +
                     static_cast<int>(encode_scope(vals_by_id, pa,
                                                   cards_of(maid, pa)));
    } else {
      node.kind = TreeNode::Kind::Chance;
      std::int64_t row = listed_row(maid, var, vals_by_id);
      node.probs.resize(static_cast<std::size_t>(var.card));
      for (int a = 0; a < var.card; ++a)
        node.probs[static_cast<std::size_t>(a)] = var.table(row * var.card + a);
    }
    for (int a = 0; a < var.card; ++a) {
      vals_by_id[static_cast<std::size_t>(v)] = a;
      node.children[static_cast<std::size_t>(a)] = build(k + 1);
    }
    vals_by_id[static_cast<std::size_t>(v)] = 0;
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  };
  tree.root = build(0);
  return tree;
}

RelevanceGraph approx_relevance_graph(const Maid& maid) {
  validate_maid(maid);
  int nv = maid.size();
  std::vector<int> topo = topo_order(net_for(maid, uniform_rules(maid)));

  // anc[v][u]: u is an ancestor of v or v itself
  std::vector<std::vector<char>> anc(
      static_cast<std::size_t>(nv),
      std::vector<char>(static_cast<std::size_t>(nv), 0));
  for (int v : topo) {
    anc[static_cast<std::size_t>(v)][static_cast<std::size_t>(v)] = 1;
    for (int p : maid.vars[static_cast<std::size_t>(v)].parents)
      for (int u = 0; u < nv; ++u)
        anc[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] =
            static_cast<char>(
                anc[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] |
                anc[static_cast<std::size_t>(p)][static_cast<std::size_t>(u)]);
  }

  RelevanceGraph g;
  g.over_approximated = true;
  for (int v = 0; v < nv; ++v)
    if (is_decision(maid.vars[static_cast<std::size_t>(v)]))
      g.decisions.push_back(v);
  std::size_t nd = g.decisions.size();
  g.edges_out.resize(nd);

  // touch[t][p]: some scope variable of term t is downstream of decision p
  std::vector<std::vector<char>> touch(
      maid.utilities.size(), std::vector<char>(nd, 0));
  for (std::size_t t = 0; t < maid.utilities.size(); ++t)
    for (std::size_t p = 0; p < nd; ++p)
      for (int x : maid.utilities[t].value.vars)
        if (anc[static_cast<std::size_t>(x)]
               [static_cast<std::size_t>(g.decisions[p])]) {
          touch[t][p] = 1;
          break;
        }

  for (std::size_t p = 0; p < nd; ++p) {
    int d = g.decisions[p];
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(d)];
    std::vector<int> skip = sorted_parents(var);
    skip.push_back(d);
    std::sort(skip.begin(), skip.end());
    for (std::size_t q = 0; q < nd; ++q) {
      int d2 = g.decisions[q];
      if (std::binary_search(skip.begin(), skip.end(), d2)) continue;
      bool edge = false;
      for (std::size_t t = 0; t < maid.utilities.size() && !edge; ++t)
        edge = maid.utilities[t].owner == var.owner && touch[t][p] &&
               touch[t][q];
      if (edge) g.edges_out[p].push_back(static_cast<int>(q));
    }
  }
  return g;
}

std::vector<std::vector<int>> relevance_scc_decompose(
    const Maid& maid, const RelevanceGraph& g) {
  int n = static_cast<int>(g.decisions.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<char> onstack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[static_cast<std::size_t>(v)] = counter;
    low[static_cast<std::size_t>(v)] = counter;
    ++counter;
    stack.push_back(v);
    onstack[static_cast<std::size_t>(v)] = 1;
    for (int w : g.edges_out[static_cast<std::size_t>(v)]) {
      if (index[static_cast<std::size_t>(w)] < 0) {
        strongconnect(w);
        low[static_cast<std::size_t>(v)] =
            std::min(low[static_cast<std::size_t>(v)],
                     low[static_cast<std::size_t>(w)]);
      } else if (onstack[static_cast<std::size_t>(w)]) {
        low[static_cast<std::size_t>(v)] =
            std::min(low[static_cast<std::size_t>(v)],
                     index[static_cast<std::size_t>(w)]);
      }
    }
    if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
      std::vector<int> comp;
      while (true) {
        int w = stack.back();
        stack.pop_back();
        onstack[static_cast<std::size_t>(w)] = 0;
        comp.push_back(g.decisions[static_cast<std::size_t>(w)]);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[static_cast<std::size_t>(v)] < 0) strongconnect(v);
  (void)maid;
  return comps;
}

namespace {

SequenceFormSpace space_for(const Maid& maid, double epsilon) {
  validate_maid(maid);
  return build_space(catalogs_from_maid(maid, index_maid(maid)), epsilon);
}

}  // namespace

MaidSequenceView::MaidSequenceView(Maid maid, double epsilon,
                                   std::vector<std::vector<int>> clique_hint)
    : SequenceViewBase(space_for(maid, epsilon)), maid_(std::move(maid)) {
  idx_ = index_maid(maid_);

  for (const UtilityTerm& t : maid_.utilities) scopes_.push_back(t.value.vars);
  for (int n = 0; n < maid_.agents; ++n)
    scopes_.push_back(idx_.dn_scope[static_cast<std::size_t>(n)]);
  std::sort(scopes_.begin(), scopes_.end());
  scopes_.erase(std::unique(scopes_.begin(), scopes_.end()), scopes_.end());

  CliqueTree tree = build_clique_tree(net_for(maid_, uniform_rules(maid_)),
                                      scopes_, std::move(clique_hint));
  structure_ = tree.cliques;
  for (const UtilityTerm& t : maid_.utilities)
    util_clique_.push_back(tree.covering_clique(t.value.vars));
  for (int n = 0; n < maid_.agents; ++n)
    dn_clique_.push_back(
        tree.covering_clique(idx_.dn_scope[static_cast<std::size_t>(n)]));

  range_.assign(static_cast<std::size_t>(maid_.agents), 0.0);
  for (const UtilityTerm& t : maid_.utilities)
    range_[static_cast<std::size_t>(t.owner)] +=
        t.value.table.maxCoeff() - t.value.table.minCoeff();
}

Eigen::VectorXd MaidSequenceView::plan_from_rules(
    const DecisionRules& rules) const {
  validate_rules(maid_, rules);
  BehaviorProfile behavior;
  behavior.probs.resize(static_cast<std::size_t>(maid_.agents));
  for (int n = 0; n < maid_.agents; ++n) {
    auto& bn = behavior.probs[static_cast<std::size_t>(n)];
    bn.resize(space_.catalogs[static_cast<std::size_t>(n)].infosets.size());
    for (int d : idx_.decisions[static_cast<std::size_t>(n)]) {
      const auto& rows = idx_.row_of_infoset[static_cast<std::size_t>(d)];
      const VectorXd& table = rules.tables[static_cast<std::size_t>(d)];
      int base = idx_.infoset_offset[static_cast<std::size_t>(d)];
      int card = maid_.vars[static_cast<std::size_t>(d)].card;
      for (std::size_t fi = 0; fi < rows.size(); ++fi)
        bn[static_cast<std::size_t>(base) + fi] =
            table.segment(rows[fi] * card, card);
    }
  }
  return behavior_to_plan(space_, behavior);
}

DecisionRules MaidSequenceView::rules_from_plan(
    const Eigen::VectorXd& sigma) const {
  BehaviorResult br = plan_to_behavior(space_, sigma);
  DecisionRules rules;
  rules.tables.resize(static_cast<std::size_t>(maid_.size()));
  for (int n = 0; n < maid_.agents; ++n) {
    const auto& bn = br.behavior.probs[static_cast<std::size_t>(n)];
    for (int d : idx_.decisions[static_cast<std::size_t>(n)]) {
      const auto& rows = idx_.row_of_infoset[static_cast<std::size_t>(d)];
      int base = idx_.infoset_offset[static_cast<std::size_t>(d)];
      int card = maid_.vars[static_cast<std::size_t>(d)].card;
      VectorXd& table = rules.tables[static_cast<std::size_t>(d)];
      table.resize(static_cast<std::int64_t>(rows.size()) * card);
      for (std::size_t fi = 0; fi < rows.size(); ++fi)
        table.segment(rows[fi] * card, card) =
            bn[static_cast<std::size_t>(base) + fi];
    }
  }
  return rules;
}

CliqueTree MaidSequenceView::calibrated_for(const Eigen::VectorXd& sigma) const {
  return build_clique_tree(net_for(maid_, rules_from_plan(sigma)), scopes_,
                           structure_);
}

Eigen::VectorXd MaidSequenceView::deviation(const Eigen::VectorXd& sigma) const {
  if (sigma.size() != dim())
    throw MaidError("plan has the wrong dimension");
  if (sigma.minCoeff() <= 0.0)
    throw MaidError("deviation needs strictly positive plan coordinates");
  CliqueTree tree = calibrated_for(sigma);
  std::vector<std::vector<Factor>> pairs = all_pairs_marginals(tree);

  VectorXd v = VectorXd::Zero(dim());
  for (std::size_t t = 0; t < maid_.utilities.size(); ++t) {
    const UtilityTerm& term = maid_.utilities[t];
    int n = term.owner;
    const Factor& pm =
        pairs[static_cast<std::size_t>(util_clique_[t])]
             [static_cast<std::size_t>(dn_clique_[static_cast<std::size_t>(n)])];
    Factor g = marginalize(product(pm, term.value),
                           idx_.dn_scope[static_cast<std::size_t>(n)]);
    v.segment(space_.ix.offset(n), space_.ix.length(n)) += g.table;
  }
  // each accumulated entry carries the realization probability of its own
  // terminal sequence as a factor; divide it back out
  return v.cwiseQuotient(sigma);
}

Eigen::MatrixXd MaidSequenceView::deviation_jacobian(
    const Eigen::VectorXd& sigma) const {
  if (sigma.size() != dim())
    throw MaidError("plan has the wrong dimension");
  if (sigma.minCoeff() <= 0.0)
    throw MaidError("deviation needs strictly positive plan coordinates");
  CliqueTree tree = calibrated_for(sigma);
  std::vector<std::vector<Factor>> pairs = all_pairs_marginals(tree);

  MatrixXd jac = MatrixXd::Zero(dim(), dim());
  std::vector<int> vals;
  for (std::size_t t = 0; t < maid_.utilities.size(); ++t) {
    const UtilityTerm& term = maid_.utilities[t];
    int n = term.owner;
    const std::vector<int>& dn = idx_.dn_scope[static_cast<std::size_t>(n)];
    for (int m = 0; m < maid_.agents; ++m) {
      if (m == n) continue;
      const std::vector<int>& dm = idx_.dn_scope[static_cast<std::size_t>(m)];
      Factor tm = triple_marginal(
          tree, pairs, util_clique_[t],
          dn_clique_[static_cast<std::size_t>(n)],
          dn_clique_[static_cast<std::size_t>(m)]);
      std::vector<int> u = sorted_union(dn, dm);
      Factor g = marginalize(product(tm, term.value), u);
      std::vector<int> pos_n = positions_in(dn, g.vars);
      std::vector<int> pos_m = positions_in(dm, g.vars);
      for (std::int64_t k = 0; k < g.table.size(); ++k) {
        decode_assignment(k, g.cards, vals);
        std::int64_t i = 0;
        for (int p : pos_n)
          i = i * g.cards[static_cast<std::size_t>(p)] +
              vals[static_cast<std::size_t>(p)];
        std::int64_t j = 0;
        for (int p : pos_m)
          j = j * g.cards[static_cast<std::size_t>(p)] +
              vals[static_cast<std::size_t>(p)];
        jac(space_.ix.offset(n) + i, space_.ix.offset(m) + j) += g.table(k);
      }
    }
  }
  // divide out both forced sequences' realization probabilities
  jac.array().colwise() /= sigma.array();
  jac.array().rowwise() /= sigma.transpose().array();
  return jac;
}

Maid maid_from_json(const std::string& text) {
  using nlohmann::json;
  Maid maid;
  try {
    json j = json::parse(text);
    if (j.at("type").get<std::string>() != "maid")
      throw MaidError("expected a game of type \"maid\"");
    maid.agents = j.at("agents").get<int>();
    bool seen_utility = false;
    for (const json& e : j.at("variables")) {
      std::string kind = e.at("kind").get<std::string>();
      if (kind == "utility") {
        seen_utility = true;
        UtilityTerm term;
        term.owner = e.at("owner").get<int>();
        std::vector<int> listed = e.at("parents").get<std::vector<int>>();
        std::vector<double> table = e.at("table").get<std::vector<double>>();
        if (listed.empty())
          throw MaidError("a utility term needs at least one parent");
        std::vector<int> scope = sorted_unique(listed);
        if (scope.size() != listed.size())
          throw MaidError("utility parents must be distinct");
        for (int p : scope)
          if (p < 0 || p >= maid.size())
            throw MaidError(
                "utility parents must reference earlier network variables");
        std::vector<int> scope_cards = cards_of(maid, scope);
        std::int64_t count = prod_cards(scope_cards);
        if (static_cast<std::int64_t>(table.size()) != count)
          throw MaidError("a utility table has the wrong size");
        term.value = Factor::zeros(scope, scope_cards);
        std::vector<int> vals;
        std::vector<int> vals_by_id(static_cast<std::size_t>(maid.size()), 0);
        for (std::int64_t fi = 0; fi < count; ++fi) {
          decode_assignment(fi, scope_cards, vals);
          for (std::size_t k = 0; k < scope.size(); ++k)
            vals_by_id[static_cast<std::size_t>(scope[k])] = vals[k];
          std::int64_t li = 0;
          for (int p : listed)
            li = li * maid.vars[static_cast<std::size_t>(p)].card +
                 vals_by_id[static_cast<std::size_t>(p)];
          term.value.table(fi) = table[static_cast<std::size_t>(li)];
        }
        maid.utilities.push_back(std::move(term));
        continue;
      }
      if (seen_utility)
        throw MaidError("network variables must precede utility terms");
      MaidVariable var;
      var.parents = e.at("parents").get<std::vector<int>>();
      var.card = e.at("card").get<int>();
      if (kind == "chance") {
        var.kind = MaidVariable::Kind::Chance;
        std::vector<double> table = e.at("table").get<std::vector<double>>();
        var.table = Eigen::Map<const VectorXd>(
            table.data(), static_cast<std::int64_t>(table.size()));
      } else if (kind == "decision") {
        var.kind = MaidVariable::Kind::Decision;
        var.owner = e.at("owner").get<int>();
      } else {
        throw MaidError("unknown variable kind \"" + kind + "\"");
      }
      maid.vars.push_back(std::move(var));
    }
  } catch (const nlohmann::json::exception& e) {
    throw MaidError(std::string("bad game description: ") + e.what());
  }
  validate_maid(maid);
  return maid;
}

std::string maid_to_json(const Maid& maid) {
  using nlohmann::json;
  json vars = json::array();
  for (const MaidVariable& v : maid.vars) {
    json e;
    e["parents"] = v.parents;
    e["card"] = v.card;
    if (is_decision(v)) {
      e["kind"] = "decision";
      e["owner"] = v.owner;
    } else {
      e["kind"] = "chance";
      e["table"] = std::vector<double>(v.table.data(),
                                       v.table.data() + v.table.size());
    }
    vars.push_back(std::move(e));
  }
  for (const UtilityTerm& t : maid.utilities) {
    json e;
    e["kind"] = "utility";
    e["owner"] = t.owner;
    e["parents"] = t.value.vars;
    e["table"] = std::vector<double>(t.value.table.data(),
                                     t.value.table.data() +
                                         t.value.table.size());
    vars.push_back(std::move(e));
  }
  json j;
  j["type"] = "maid";
  j["agents"] = maid.agents;
  j["variables"] = std::move(vars);
  return j.dump(2);
}

std::optional<RelevanceGraph> relevance_edges_from_json(const std::string& text,
                                                        const Maid& maid) {
  using nlohmann::json;
  RelevanceGraph g;
  try {
    json j = json::parse(text);
    if (!j.contains("relevance_edges")) return std::nullopt;
    for (int v = 0; v < maid.size(); ++v)
      if (is_decision(maid.vars[static_cast<std::size_t>(v)]))
        g.decisions.push_back(v);
    g.edges_out.resize(g.decisions.size());
    auto position = [&](int d) {
      auto it = std::lower_bound(g.decisions.begin(), g.decisions.end(), d);
      if (it == g.decisions.end() || *it != d)
        throw MaidError("relevance edges must connect decision variables");
      return static_cast<std::size_t>(it - g.decisions.begin());
    };
    for (const json& e : j.at("relevance_edges")) {
      std::vector<int> pair = e.get<std::vector<int>>();
      if (pair.size() != 2)
        throw MaidError("a relevance edge needs exactly two endpoints");
      g.edges_out[position(pair[0])].push_back(pair[1]);
    }
    for (std::vector<int>& out : g.edges_out) {
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      for (int d : out) position(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MaidError(std::string("bad game description: ") + e.what());
  }
  return g;
}

}  // namespace gtsolve
