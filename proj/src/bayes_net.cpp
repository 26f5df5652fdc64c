#include "gtsolve/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gtsolve {

void validate_net(const BayesNet& net) {
  const int n = net.size();
  for (int v = 0; v < n; ++v) {
    const BayesVariable& var = net.vars[static_cast<std::size_t>(v)];
    if (var.card < 1)
      throw BayesNetError("variable " + std::to_string(v) +
                          " has a non-positive cardinality");
    std::vector<int> seen;
    std::int64_t rows = 1;
    for (int p : var.parents) {
      if (p < 0 || p >= n || p == v)
        throw BayesNetError("variable " + std::to_string(v) +
                            " has an invalid parent");
      if (std::find(seen.begin(), seen.end(), p) != seen.end())
        throw BayesNetError("variable " + std::to_string(v) +
                            " lists a parent twice");
      seen.push_back(p);
      rows *= net.vars[static_cast<std::size_t>(p)].card;
    }
    if (var.table.size() != rows * var.card)
      throw BayesNetError("variable " + std::to_string(v) +
                          " has a conditional table of the wrong size");
    for (std::int64_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (int a = 0; a < var.card; ++a) {
        double p = var.table(r * var.card + a);
        if (p < -1e-12)
          throw BayesNetError("variable " + std::to_string(v) +
                              " has a negative conditional probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-10)
        throw BayesNetError("variable " + std::to_string(v) +
                            " has an unnormalized conditional row");
    }
  }
  topo_order(net);
}

std::vector<int> topo_order(const BayesNet& net) {
  const int n = net.size();
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v)
    indeg[static_cast<std::size_t>(v)] =
        static_cast<int>(net.vars[static_cast<std::size_t>(v)].parents.size());
  std::vector<int> order;
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  for (int round = 0; round < n; ++round) {
    int pick = -1;
    for (int v = 0; v < n; ++v)
      if (!done[static_cast<std::size_t>(v)] &&
          indeg[static_cast<std::size_t>(v)] == 0) {
        pick = v;
        break;
      }
    if (pick < 0) throw BayesNetError("the parent graph has a cycle");
    done[static_cast<std::size_t>(pick)] = 1;
    order.push_back(pick);
    for (int v = 0; v < n; ++v) {
      const auto& ps = net.vars[static_cast<std::size_t>(v)].parents;
      if (std::find(ps.begin(), ps.end(), pick) != ps.end())
        --indeg[static_cast<std::size_t>(v)];
    }
  }
  return order;
}

Factor cpd_factor(const BayesNet& net, int v) {
  const BayesVariable& var = net.vars[static_cast<std::size_t>(v)];
  std::vector<int> scope = var.parents;
  scope.push_back(v);
  std::sort(scope.begin(), scope.end());
  std::vector<int> cards;
  cards.reserve(scope.size());
  for (int x : scope)
    cards.push_back(net.vars[static_cast<std::size_t>(x)].card);
  Factor f = Factor::zeros(scope, cards);

  // row strides of each parent in the conditional table (listed order, last
  // parent fastest)
  std::vector<std::int64_t> pstride(var.parents.size());
  std::int64_t acc = 1;
  for (int k = static_cast<int>(var.parents.size()) - 1; k >= 0; --k) {
    pstride[static_cast<std::size_t>(k)] = acc;
    acc *= net.vars[static_cast<std::size_t>(
                        var.parents[static_cast<std::size_t>(k)])]
               .card;
  }
  std::vector<std::int64_t> mult(scope.size(), 0);
  for (std::size_t pos = 0; pos < scope.size(); ++pos) {
    if (scope[pos] == v) {
      mult[pos] = 1;
    } else {
      auto it = std::find(var.parents.begin(), var.parents.end(), scope[pos]);
      mult[pos] =
          pstride[static_cast<std::size_t>(it - var.parents.begin())] *
          var.card;
    }
  }

  std::vector<int> asgn(scope.size(), 0);
  std::int64_t idx = 0;
  for (std::int64_t i = 0; i < f.table.size(); ++i) {
    f.table(i) = var.table(idx);
    for (int k = static_cast<int>(scope.size()) - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++asgn[ku] < cards[ku]) {
        idx += mult[ku];
        break;
      }
      asgn[ku] = 0;
      idx -= mult[ku] * (cards[ku] - 1);
    }
  }
  return f;
}

}  // namespace gtsolve
