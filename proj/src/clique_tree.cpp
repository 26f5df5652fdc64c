#include "gtsolve/clique_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace gtsolve {

namespace {

bool contains_all(const std::vector<int>& big, const std::vector<int>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::vector<int> sorted_union(const std::vector<int>& a,
                              const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

std::vector<int> sorted_intersection(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

// scopes that must each fit inside a single clique: one per family plus the
// caller-supplied extras
std::vector<std::vector<int>> required_scopes(
    const BayesNet& net, const std::vector<std::vector<int>>& extra_scopes) {
  std::vector<std::vector<int>> out;
  for (int v = 0; v < net.size(); ++v) {
    std::vector<int> fam = net.vars[static_cast<std::size_t>(v)].parents;
    fam.push_back(v);
    std::sort(fam.begin(), fam.end());
    out.push_back(std::move(fam));
  }
  for (const auto& s : extra_scopes) {
    if (s.empty()) throw BayesNetError("an extra scope is empty");
    std::vector<int> scope = s;
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    for (int x : scope)
      if (x < 0 || x >= net.size())
        throw BayesNetError("an extra scope names an unknown variable");
    out.push_back(std::move(scope));
  }
  return out;
}

std::vector<std::vector<int>> triangulate_min_fill(
    int n, const std::vector<std::vector<int>>& scopes) {
  std::vector<std::vector<char>> adj(
      static_cast<std::size_t>(n),
      std::vector<char>(static_cast<std::size_t>(n), 0));
  for (const auto& scope : scopes)
    for (std::size_t i = 0; i < scope.size(); ++i)
      for (std::size_t j = i + 1; j < scope.size(); ++j) {
        adj[static_cast<std::size_t>(scope[i])]
           [static_cast<std::size_t>(scope[j])] = 1;
        adj[static_cast<std::size_t>(scope[j])]
           [static_cast<std::size_t>(scope[i])] = 1;
      }

  std::vector<char> gone(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> cliques;
  for (int round = 0; round < n; ++round) {
    int best = -1;
    long best_fill = std::numeric_limits<long>::max();
    for (int v = 0; v < n; ++v) {
      if (gone[static_cast<std::size_t>(v)]) continue;
      std::vector<int> nb;
      for (int u = 0; u < n; ++u)
        if (!gone[static_cast<std::size_t>(u)] &&
            adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)])
          nb.push_back(u);
      long fill = 0;
      for (std::size_t i = 0; i < nb.size(); ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[static_cast<std::size_t>(nb[i])]
                  [static_cast<std::size_t>(nb[j])])
            ++fill;
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    std::vector<int> clique{best};
    for (int u = 0; u < n; ++u)
      if (u != best && !gone[static_cast<std::size_t>(u)] &&
          adj[static_cast<std::size_t>(best)][static_cast<std::size_t>(u)])
        clique.push_back(u);
    std::sort(clique.begin(), clique.end());
    for (std::size_t i = 0; i < clique.size(); ++i)
      for (std::size_t j = i + 1; j < clique.size(); ++j) {
        adj[static_cast<std::size_t>(clique[i])]
           [static_cast<std::size_t>(clique[j])] = 1;
        adj[static_cast<std::size_t>(clique[j])]
           [static_cast<std::size_t>(clique[i])] = 1;
      }
    gone[static_cast<std::size_t>(best)] = 1;
    cliques.push_back(std::move(clique));
  }

  // keep only maximal cliques, first occurrence wins
  std::vector<std::vector<int>> maximal;
  for (std::size_t i = 0; i < cliques.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < cliques.size() && !dominated; ++j) {
      if (i == j) continue;
      if (contains_all(cliques[j], cliques[i]) &&
          (cliques[j].size() > cliques[i].size() || j < i))
        dominated = true;
    }
    if (!dominated) maximal.push_back(cliques[i]);
  }
  return maximal;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(
              parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

}  // namespace

int CliqueTree::covering_clique(const std::vector<int>& scope) const {
  std::vector<int> s = scope;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (int i = 0; i < clique_count(); ++i)
    if (contains_all(cliques[static_cast<std::size_t>(i)], s)) return i;
  return -1;
}

int CliqueTree::median_clique(int i, int j, int k) const {
  int best = -1;
  int best_sum = std::numeric_limits<int>::max();
  for (int m = 0; m < clique_count(); ++m) {
    int s = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] +
            dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] +
            dist[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
    if (s < best_sum) {
      best_sum = s;
      best = m;
    }
  }
  return best;
}

Factor CliqueTree::pair_marginal(int i, int j) const {
  if (i == j) return beliefs[static_cast<std::size_t>(i)];
  Factor cur = beliefs[static_cast<std::size_t>(i)];
  int at = i;
  while (at != j) {
    int nxt = next_hop[static_cast<std::size_t>(j)][static_cast<std::size_t>(
        at)];
    // joint over the adjacent pair, then condition on the nearer clique
    Factor adj = divide(
        product(beliefs[static_cast<std::size_t>(at)],
                beliefs[static_cast<std::size_t>(nxt)]),
        sepset_belief(at, nxt));
    Factor step = divide(adj, beliefs[static_cast<std::size_t>(at)]);
    cur = marginalize(
        product(cur, step),
        sorted_union(cliques[static_cast<std::size_t>(i)],
                     cliques[static_cast<std::size_t>(nxt)]));
    at = nxt;
  }
  return cur;
}

Factor CliqueTree::triple_marginal(int i, int j, int k) const {
  int m = median_clique(i, j, k);
  Factor f = product(product(pair_marginal(i, m), pair_marginal(j, m)),
                     pair_marginal(k, m));
  f = divide(divide(f, beliefs[static_cast<std::size_t>(m)]),
             beliefs[static_cast<std::size_t>(m)]);
  std::vector<int> keep =
      sorted_union(sorted_union(cliques[static_cast<std::size_t>(i)],
                                cliques[static_cast<std::size_t>(j)]),
                   cliques[static_cast<std::size_t>(k)]);
  return marginalize(f, keep);
}

const Factor& CliqueTree::sepset_belief(int i, int j) const {
  for (std::size_t e = 0; e < edges.size(); ++e)
    if ((edges[e].first == i && edges[e].second == j) ||
        (edges[e].first == j && edges[e].second == i))
      return sepset_beliefs[e];
  throw BayesNetError("the cliques are not adjacent");
}

std::vector<std::vector<Factor>> all_pairs_marginals(const CliqueTree& tree) {
  const int nc = tree.clique_count();
  std::vector<std::vector<Factor>> table(
      static_cast<std::size_t>(nc),
      std::vector<Factor>(static_cast<std::size_t>(nc), Factor::unit()));
  std::vector<std::pair<int, int>> order;
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j) order.emplace_back(i, j);
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    int da = tree.dist[static_cast<std::size_t>(a.first)]
                      [static_cast<std::size_t>(a.second)];
    int db = tree.dist[static_cast<std::size_t>(b.first)]
                      [static_cast<std::size_t>(b.second)];
    if (da != db) return da < db;
    return a < b;
  });
  for (const auto& [i, j] : order) {
    auto iu = static_cast<std::size_t>(i);
    auto ju = static_cast<std::size_t>(j);
    int d = tree.dist[iu][ju];
    if (d == 0) {
      table[iu][ju] = tree.beliefs[iu];
    } else if (d == 1) {
      table[iu][ju] = divide(product(tree.beliefs[iu], tree.beliefs[ju]),
                             tree.sepset_belief(i, j));
    } else {
      int k = tree.next_hop[iu][ju];  // neighbor of j toward i
      auto ku = static_cast<std::size_t>(k);
      Factor f = divide(product(table[iu][ku], table[ku][ju]),
                        tree.beliefs[ku]);
      table[iu][ju] = marginalize(
          f, sorted_union(tree.cliques[iu], tree.cliques[ju]));
    }
  }
  return table;
}

Factor triple_marginal(const CliqueTree& tree,
                       const std::vector<std::vector<Factor>>& pairs, int i,
                       int j, int k) {
  int m = tree.median_clique(i, j, k);
  auto mu = static_cast<std::size_t>(m);
  Factor f = product(
      product(pairs[static_cast<std::size_t>(i)][mu],
              pairs[static_cast<std::size_t>(j)][mu]),
      pairs[static_cast<std::size_t>(k)][mu]);
  f = divide(divide(f, tree.beliefs[mu]), tree.beliefs[mu]);
  std::vector<int> keep =
      sorted_union(sorted_union(tree.cliques[static_cast<std::size_t>(i)],
                                tree.cliques[static_cast<std::size_t>(j)]),
                   tree.cliques[static_cast<std::size_t>(k)]);
  return marginalize(f, keep);
}

CliqueTree build_clique_tree(const BayesNet& net,
                             const std::vector<std::vector<int>>& extra_scopes,
                             const std::vector<std::vector<int>>& hint) {
  validate_net(net);
  const auto scopes = required_scopes(net, extra_scopes);

  CliqueTree tree;
  if (!hint.empty()) {
    for (const auto& c : hint) {
      if (c.empty()) throw BayesNetError("a hint clique is empty");
      std::vector<int> clique = c;
      std::sort(clique.begin(), clique.end());
      clique.erase(std::unique(clique.begin(), clique.end()), clique.end());
      for (int x : clique)
        if (x < 0 || x >= net.size())
          throw BayesNetError("a hint clique names an unknown variable");
      tree.cliques.push_back(std::move(clique));
    }
    for (const auto& scope : scopes) {
      bool covered = false;
      for (const auto& clique : tree.cliques)
        if (contains_all(clique, scope)) {
          covered = true;
          break;
        }
      if (!covered)
        throw BayesNetError(
            "the hint cliques do not cover every factor scope");
    }
  } else {
    tree.cliques = triangulate_min_fill(net.size(), scopes);
  }
  const int nc = tree.clique_count();

  // maximum-weight spanning tree over sepset sizes; zero-weight edges are
  // allowed so disconnected pieces still join into one tree
  struct Cand {
    int w, i, j;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j)
      cands.push_back(
          {static_cast<int>(
               sorted_intersection(tree.cliques[static_cast<std::size_t>(i)],
                                   tree.cliques[static_cast<std::size_t>(j)])
                   .size()),
           i, j});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  UnionFind uf(nc);
  tree.neighbors.assign(static_cast<std::size_t>(nc), {});
  for (const Cand& c : cands)
    if (uf.merge(c.i, c.j)) {
      tree.edges.emplace_back(c.i, c.j);
      tree.neighbors[static_cast<std::size_t>(c.i)].push_back(c.j);
      tree.neighbors[static_cast<std::size_t>(c.j)].push_back(c.i);
    }
  for (auto& nb : tree.neighbors) std::sort(nb.begin(), nb.end());

  // running intersection: the cliques holding any one variable must form a
  // connected subtree
  for (int v = 0; v < net.size(); ++v) {
    std::vector<int> holders;
    for (int i = 0; i < nc; ++i) {
      const auto& cl = tree.cliques[static_cast<std::size_t>(i)];
      if (std::binary_search(cl.begin(), cl.end(), v)) holders.push_back(i);
    }
    if (holders.size() <= 1) continue;
    std::vector<char> mark(static_cast<std::size_t>(nc), 0);
    for (int h : holders) mark[static_cast<std::size_t>(h)] = 1;
    std::deque<int> queue{holders.front()};
    std::vector<char> seen(static_cast<std::size_t>(nc), 0);
    seen[static_cast<std::size_t>(holders.front())] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      int at = queue.front();
      queue.pop_front();
      for (int nb : tree.neighbors[static_cast<std::size_t>(at)])
        if (mark[static_cast<std::size_t>(nb)] &&
            !seen[static_cast<std::size_t>(nb)]) {
          seen[static_cast<std::size_t>(nb)] = 1;
          ++reached;
          queue.push_back(nb);
        }
    }
    if (reached != holders.size())
      throw BayesNetError(
          "the clique tree violates the running intersection property");
  }

  // hop counts and routing: next_hop[i][j] is the neighbor of j on the path
  // from j toward i
  tree.dist.assign(static_cast<std::size_t>(nc),
                   std::vector<int>(static_cast<std::size_t>(nc), 0));
  tree.next_hop.assign(static_cast<std::size_t>(nc),
                       std::vector<int>(static_cast<std::size_t>(nc), -1));
  for (int s = 0; s < nc; ++s) {
    std::deque<int> queue{s};
    std::vector<char> seen(static_cast<std::size_t>(nc), 0);
    seen[static_cast<std::size_t>(s)] = 1;
    while (!queue.empty()) {
      int at = queue.front();
      queue.pop_front();
      for (int nb : tree.neighbors[static_cast<std::size_t>(at)])
        if (!seen[static_cast<std::size_t>(nb)]) {
          seen[static_cast<std::size_t>(nb)] = 1;
          tree.dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(
              nb)] =
              tree.dist[static_cast<std::size_t>(s)]
                       [static_cast<std::size_t>(at)] +
              1;
          tree.next_hop[static_cast<std::size_t>(s)]
                       [static_cast<std::size_t>(nb)] = at;
          queue.push_back(nb);
        }
    }
  }

  // assign each conditional table to the first clique covering its family
  std::vector<Factor> phi(static_cast<std::size_t>(nc), Factor::unit());
  for (int v = 0; v < net.size(); ++v) {
    int home = tree.covering_clique(scopes[static_cast<std::size_t>(v)]);
    phi[static_cast<std::size_t>(home)] =
        product(phi[static_cast<std::size_t>(home)], cpd_factor(net, v));
  }

  // two-pass message schedule over the tree rooted at clique 0
  std::vector<int> order{0};
  std::vector<int> parent(static_cast<std::size_t>(nc), -1);
  {
    std::vector<char> seen(static_cast<std::size_t>(nc), 0);
    seen[0] = 1;
    for (std::size_t head = 0; head < order.size(); ++head) {
      int at = order[head];
      for (int nb : tree.neighbors[static_cast<std::size_t>(at)])
        if (!seen[static_cast<std::size_t>(nb)]) {
          seen[static_cast<std::size_t>(nb)] = 1;
          parent[static_cast<std::size_t>(nb)] = at;
          order.push_back(nb);
        }
    }
  }
  std::vector<std::vector<Factor>> msg(
      static_cast<std::size_t>(nc),
      std::vector<Factor>(static_cast<std::size_t>(nc), Factor::unit()));
  auto send = [&](int from, int to) {
    Factor f = phi[static_cast<std::size_t>(from)];
    for (int nb : tree.neighbors[static_cast<std::size_t>(from)])
      if (nb != to)
        f = product(f, msg[static_cast<std::size_t>(nb)]
                          [static_cast<std::size_t>(from)]);
    msg[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] =
        marginalize(
            f, sorted_intersection(
                   tree.cliques[static_cast<std::size_t>(from)],
                   tree.cliques[static_cast<std::size_t>(to)]));
  };
  for (std::size_t p = order.size(); p-- > 0;) {
    int v = order[p];
    if (parent[static_cast<std::size_t>(v)] >= 0)
      send(v, parent[static_cast<std::size_t>(v)]);
  }
  for (int v : order)
    for (int nb : tree.neighbors[static_cast<std::size_t>(v)])
      if (nb != parent[static_cast<std::size_t>(v)]) send(v, nb);

  tree.beliefs.reserve(static_cast<std::size_t>(nc));
  for (int v = 0; v < nc; ++v) {
    Factor f = phi[static_cast<std::size_t>(v)];
    for (int nb : tree.neighbors[static_cast<std::size_t>(v)])
      f = product(f,
                  msg[static_cast<std::size_t>(nb)][static_cast<std::size_t>(
                      v)]);
    if (f.vars != tree.cliques[static_cast<std::size_t>(v)])
      throw BayesNetError(
          "calibration produced a belief over the wrong scope");
    double total = f.table.sum();
    if (std::abs(total - 1.0) > 1e-8)
      throw BayesNetError("calibration produced an unnormalized belief");
    tree.beliefs.push_back(std::move(f));
  }
  tree.sepset_beliefs.reserve(tree.edges.size());
  for (const auto& [a, b] : tree.edges)
    tree.sepset_beliefs.push_back(marginalize(
        tree.beliefs[static_cast<std::size_t>(a)],
        sorted_intersection(tree.cliques[static_cast<std::size_t>(a)],
                            tree.cliques[static_cast<std::size_t>(b)])));
  return tree;
}

}  // namespace gtsolve
