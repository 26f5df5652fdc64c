#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "gtsolve/factor.hpp"

namespace gtsolve {

struct BayesNetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One discrete variable with a conditional probability table. The table is
// parent-major: rows enumerate parent assignments in the order the parents
// are listed (last parent fastest), and within a row the variable's own
// value is fastest.
struct BayesVariable {
  std::vector<int> parents;
  int card = 0;
  Eigen::VectorXd table;
};

struct BayesNet {
  std::vector<BayesVariable> vars;

  int size() const { return static_cast<int>(vars.size()); }
};

// Throws unless parents are valid and distinct, the graph is acyclic, and
// every conditional row sums to one within 1e-10.
void validate_net(const BayesNet& net);

// The variable's conditional table as a factor over {v} union parents.
Factor cpd_factor(const BayesNet& net, int v);

// A topological order of the variables.
std::vector<int> topo_order(const BayesNet& net);

}  // namespace gtsolve
