#include "gtsolve/extensive_start.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace gtsolve {
namespace {

using Eigen::VectorXd;

// one-hot behavior from per-infoset action choices
Eigen::VectorXd plan_of_choices(const SequenceFormSpace& space,
                                const std::vector<std::vector<int>>& choice) {
  BehaviorProfile bp;
  bp.probs.resize(static_cast<std::size_t>(space.agents()));
  for (int n = 0; n < space.agents(); ++n) {
    const AgentCatalog& cat = space.catalogs[static_cast<std::size_t>(n)];
    auto& bn = bp.probs[static_cast<std::size_t>(n)];
    bn.resize(cat.infosets.size());
    for (std::size_t i = 0; i < cat.infosets.size(); ++i) {
      VectorXd b = VectorXd::Zero(cat.infosets[i].actions);
      b(choice[static_cast<std::size_t>(n)][i]) = 1.0;
      bn[i] = std::move(b);
    }
  }
  return retract_polytope(space, behavior_to_plan(space, bp)).sigma;
}

}  // namespace

BonusRay make_bonus_ray(const SequenceViewBase& view, std::mt19937_64& rng) {
  const AgentIndexing& ix = view.indexing();
  BonusRay ray;
  ray.entries.resize(ix.total_dim);
  ray.scale.resize(static_cast<std::size_t>(ix.agents()));
  for (int n = 0; n < ix.agents(); ++n) {
    int len = ix.length(n);
    VectorXd raw(len);
    double gap = 0.0;
    // resample until the smallest spacing clears a floor, so the dominating
    // scale (and with it the path's numerical range) stays bounded; the
    // floor leaves a constant acceptance probability at any length
    double floor = 1.0 / static_cast<double>(len) / static_cast<double>(len);
    while (true) {
      for (int i = 0; i < len; ++i) raw(i) = 1.0 + uniform01(rng);
      std::vector<double> sorted(raw.data(), raw.data() + len);
      std::sort(sorted.begin(), sorted.end());
      gap = len > 1 ? std::numeric_limits<double>::infinity() : 1.0;
      for (int i = 0; i + 1 < len; ++i)
        gap = std::min(gap, sorted[static_cast<std::size_t>(i) + 1] -
                                sorted[static_cast<std::size_t>(i)]);
      if (gap >= floor) break;
    }
    double scale = 2.0 * (view.payoff_range(n) + 1.0) / gap;
    ray.scale[static_cast<std::size_t>(n)] = scale;
    ray.entries.segment(ix.offset(n), len) = scale * raw;
  }
  return ray;
}

Eigen::VectorXd perturbed_pure_start(const GameTree& tree,
                                     const SequenceFormSpace& space,
                                     const BonusRay& bonus) {
  using Chain = std::vector<std::pair<int, int>>;
  int agents = space.agents();
  std::vector<std::map<Chain, int>> coord(static_cast<std::size_t>(agents));
  for (int n = 0; n < agents; ++n) {
    const auto& seqs =
        space.catalogs[static_cast<std::size_t>(n)].terminal_sequences;
    for (std::size_t i = 0; i < seqs.size(); ++i)
      coord[static_cast<std::size_t>(n)][seqs[i]] = static_cast<int>(i);
  }

  std::vector<std::vector<int>> choice(static_cast<std::size_t>(agents));
  for (int n = 0; n < agents; ++n)
    choice[static_cast<std::size_t>(n)].assign(
        space.catalogs[static_cast<std::size_t>(n)].infosets.size(), -1);

  std::vector<Chain> chains(static_cast<std::size_t>(agents));
  // per-agent best reachable bonus below a node, with lower choices fixed
  std::function<VectorXd(int)> walk = [&](int id) -> VectorXd {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.kind == TreeNode::Kind::Leaf) {
      VectorXd beta(agents);
      for (int n = 0; n < agents; ++n) {
        auto it = coord[static_cast<std::size_t>(n)].find(
            chains[static_cast<std::size_t>(n)]);
        if (it == coord[static_cast<std::size_t>(n)].end())
          throw SequenceFormError(
              "the tree does not match the strategy space");
        beta(n) = bonus.entries(space.ix.offset(n) + it->second);
      }
      return beta;
    }
    if (node.kind == TreeNode::Kind::Chance) {
      VectorXd beta = VectorXd::Constant(
          agents, -std::numeric_limits<double>::infinity());
      for (int child : node.children)
        beta = beta.cwiseMax(walk(child));
      return beta;
    }
    int n = node.owner;
    std::vector<VectorXd> beta;
    beta.reserve(node.children.size());
    for (std::size_t a = 0; a < node.children.size(); ++a) {
      chains[static_cast<std::size_t>(n)].emplace_back(node.infoset,
                                                       static_cast<int>(a));
      beta.push_back(walk(node.children[a]));
      chains[static_cast<std::size_t>(n)].pop_back();
    }
    int& fixed =
        choice[static_cast<std::size_t>(n)][static_cast<std::size_t>(
            node.infoset)];
    if (fixed < 0) {
      fixed = 0;
      for (std::size_t a = 1; a < beta.size(); ++a)
        if (beta[a](n) > beta[static_cast<std::size_t>(fixed)](n))
          fixed = static_cast<int>(a);
    }
    return beta[static_cast<std::size_t>(fixed)];
  };
  walk(tree.root);
  return plan_of_choices(space, choice);
}

Eigen::VectorXd perturbed_pure_start(const Maid& maid, const MaidIndex& idx,
                                     const SequenceFormSpace& space,
                                     const BonusRay& bonus) {
  std::vector<int> topo = topo_order(net_for(maid, uniform_rules(maid)));
  std::vector<char> processed(static_cast<std::size_t>(maid.size()), 0);
  // per decision variable, the chosen action for each parent assignment
  std::vector<std::vector<int>> chosen(static_cast<std::size_t>(maid.size()));

  auto card_of = [&](int v) { return maid.vars[static_cast<std::size_t>(v)].card; };
  auto sorted_pa = [&](int v) {
    std::vector<int> pa = maid.vars[static_cast<std::size_t>(v)].parents;
    std::sort(pa.begin(), pa.end());
    return pa;
  };
  auto position = [](const std::vector<int>& scope, int v) {
    return static_cast<int>(
        std::lower_bound(scope.begin(), scope.end(), v) - scope.begin());
  };

  for (std::size_t k = topo.size(); k-- > 0;) {
    int d = topo[k];
    const MaidVariable& var = maid.vars[static_cast<std::size_t>(d)];
    if (var.kind != MaidVariable::Kind::Decision) continue;
    int n = var.owner;
    const std::vector<int>& dn = idx.dn_scope[static_cast<std::size_t>(n)];
    std::vector<int> dn_cards;
    std::int64_t total = 1;
    for (int v : dn) {
      dn_cards.push_back(card_of(v));
      total *= card_of(v);
    }

    // later decisions inside the scope whose observations the scope fixes
    struct Later {
      int pos;
      std::vector<int> pa_pos;
      std::vector<int> pa_cards;
      int var;
    };
    std::vector<Later> later;
    for (int e : dn) {
      if (e == d || !processed[static_cast<std::size_t>(e)]) continue;
      if (maid.vars[static_cast<std::size_t>(e)].kind !=
          MaidVariable::Kind::Decision)
        continue;
      std::vector<int> pa = sorted_pa(e);
      if (!std::includes(dn.begin(), dn.end(), pa.begin(), pa.end()))
        continue;
      Later l;
      l.var = e;
      l.pos = position(dn, e);
      for (int p : pa) {
        l.pa_pos.push_back(position(dn, p));
        l.pa_cards.push_back(card_of(p));
      }
      later.push_back(std::move(l));
    }

    std::vector<int> pa = sorted_pa(d);
    std::vector<int> pa_pos;
    for (int p : pa) pa_pos.push_back(position(dn, p));
    int d_pos = position(dn, d);

    std::int64_t infosets = 1;
    for (int p : pa) infosets *= card_of(p);
    auto& pick = chosen[static_cast<std::size_t>(d)];
    pick.assign(static_cast<std::size_t>(infosets), 0);

    std::vector<int> vals(dn.size());
    std::vector<double> best(static_cast<std::size_t>(infosets),
                             -std::numeric_limits<double>::infinity());
    for (std::int64_t ci = 0; ci < total; ++ci) {
      std::int64_t rem = ci;
      for (std::size_t p = dn.size(); p-- > 0;) {
        vals[p] = static_cast<int>(rem % dn_cards[p]);
        rem /= dn_cards[p];
      }
      bool ok = true;
      for (const Later& l : later) {
        std::int64_t fi = 0;
        for (std::size_t p = 0; p < l.pa_pos.size(); ++p)
          fi = fi * l.pa_cards[p] +
               vals[static_cast<std::size_t>(l.pa_pos[p])];
        if (vals[static_cast<std::size_t>(l.pos)] !=
            chosen[static_cast<std::size_t>(l.var)]
                  [static_cast<std::size_t>(fi)]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      std::int64_t u = 0;
      for (std::size_t p = 0; p < pa_pos.size(); ++p)
        u = u * card_of(pa[p]) + vals[static_cast<std::size_t>(pa_pos[p])];
      double val = bonus.entries(space.ix.offset(n) + static_cast<int>(ci));
      if (val > best[static_cast<std::size_t>(u)]) {
        best[static_cast<std::size_t>(u)] = val;
        pick[static_cast<std::size_t>(u)] =
            vals[static_cast<std::size_t>(d_pos)];
      }
    }
    processed[static_cast<std::size_t>(d)] = 1;
  }

  std::vector<std::vector<int>> choice(
      static_cast<std::size_t>(space.agents()));
  for (int n = 0; n < maid.agents; ++n) {
    choice[static_cast<std::size_t>(n)].assign(
        space.catalogs[static_cast<std::size_t>(n)].infosets.size(), 0);
    for (int d : idx.decisions[static_cast<std::size_t>(n)]) {
      int base = idx.infoset_offset[static_cast<std::size_t>(d)];
      const auto& pick = chosen[static_cast<std::size_t>(d)];
      for (std::size_t u = 0; u < pick.size(); ++u)
        choice[static_cast<std::size_t>(n)][static_cast<std::size_t>(base) +
                                            u] = pick[u];
    }
  }
  return plan_of_choices(space, choice);
}

PathState assemble_pure_start(const GameView& view,
                              const Eigen::VectorXd& sigma,
                              const Eigen::VectorXd& bonus_entries) {
  PathState state;
  state.w = sigma + view.deviation(sigma) + bonus_entries;
  state.lambda = 1.0;
  Retraction r = view.retract(state.w);
  state.signature = r.signature;
  // re-fit the bonus so the assembled point solves F(w, 1) = 0 exactly even
  // when clipping moved the plan off the bonus-optimal vertex
  state.b = state.w - r.sigma - view.deviation(r.sigma);
  return state;
}

std::function<PathState(const GameView&, std::mt19937_64&)>
sequence_start_factory() {
  return [](const GameView& view, std::mt19937_64& rng) -> PathState {
    const auto* sv = dynamic_cast<const SequenceViewBase*>(&view);
    if (sv == nullptr)
      throw SequenceFormError(
          "the pure bonus start needs a sequence-form view");
    BonusRay ray = make_bonus_ray(*sv, rng);
    Eigen::VectorXd plan;
    if (const auto* tv = dynamic_cast<const TreeSequenceView*>(sv)) {
      plan = perturbed_pure_start(tv->tree(), sv->space(), ray);
    } else if (const auto* mv = dynamic_cast<const MaidSequenceView*>(sv)) {
      plan = perturbed_pure_start(mv->maid(), mv->index(), sv->space(), ray);
    } else {
      throw SequenceFormError(
          "no pure bonus start is available for this view");
    }
    return assemble_pure_start(view, plan, ray.entries);
  };
}

}  // namespace gtsolve
