#pragma once

#include <vector>

#include "gtsolve/bayes_net.hpp"
#include "gtsolve/factor.hpp"

namespace gtsolve {

// Calibrated junction tree over a Bayes net: clique beliefs are exact joint
// marginals, and joint distributions over pairs or triples of cliques are
// assembled by chaining along tree paths.
struct CliqueTree {
  std::vector<std::vector<int>> cliques;  // sorted variable ids
  std::vector<std::pair<int, int>> edges;
  std::vector<Factor> beliefs;        // P(C_i), calibrated
  std::vector<Factor> sepset_beliefs;  // per edge, P(C_i cap C_j)
  std::vector<std::vector<int>> neighbors;
  // next_hop[i][j]: neighbor of j on the path from j toward i
  std::vector<std::vector<int>> next_hop;
  std::vector<std::vector<int>> dist;

  int clique_count() const { return static_cast<int>(cliques.size()); }

  // Lowest-index clique whose scope contains all the given variables, or -1.
  int covering_clique(const std::vector<int>& scope) const;

  // Stored sepset marginal for an adjacent pair, in either order.
  const Factor& sepset_belief(int i, int j) const;

  // The unique tree node lying on all three pairwise paths.
  int median_clique(int i, int j, int k) const;

  // Joint marginal over C_i union C_j, chained iteratively along the tree
  // path between the cliques.
  Factor pair_marginal(int i, int j) const;

  // Joint marginal over the union of three clique scopes, split at the
  // median clique: the three branches are conditionally independent given
  // it, so the joint is the product of the three pair marginals divided by
  // the median belief twice.
  Factor triple_marginal(int i, int j, int k) const;
};

// Moralize the net (adding every extra scope as a clique of the moral
// graph), triangulate by min-fill, collect maximal cliques, connect them by
// a maximum-weight spanning tree on sepset sizes, and calibrate by two-pass
// message passing. When `hint` is non-empty its cliques are used instead of
// triangulating; the hint must cover every family and extra scope and
// satisfy the running intersection property, else this throws.
CliqueTree build_clique_tree(
    const BayesNet& net,
    const std::vector<std::vector<int>>& extra_scopes = {},
    const std::vector<std::vector<int>>& hint = {});

// Full table of joint marginals over clique pairs, filled by dynamic
// programming in order of path length: adjacent pairs come from the sepset
// base case, and longer pairs extend a one-hop-shorter entry through the
// neighbor of the far clique.
std::vector<std::vector<Factor>> all_pairs_marginals(const CliqueTree& tree);

// Triple marginal served from a precomputed pairs table; same split at the
// median clique as CliqueTree::triple_marginal but without re-walking paths.
Factor triple_marginal(const CliqueTree& tree,
                       const std::vector<std::vector<Factor>>& pairs, int i,
                       int j, int k);

}  // namespace gtsolve
