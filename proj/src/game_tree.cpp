#include "gtsolve/game_tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <utility>

namespace gtsolve {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using Chain = std::vector<std::pair<int, int>>;

struct ScanOutcome {
  double coef = 1.0;
  VectorXd payoffs;
  std::vector<int> coord;
};

struct TreeScan {
  std::vector<AgentCatalog> catalogs;
  std::vector<ScanOutcome> outcomes;
};

struct InfoSetRecord {
  int actions = -1;
  Chain history;
};

// One depth-first pass collecting information set records, deduplicated
// terminal sequences, and outcome entries, throwing on any structural
// violation.
TreeScan scan_tree(const GameTree& tree) {
  if (tree.agents < 1) throw GameTreeError("tree needs at least one agent");
  const int count = static_cast<int>(tree.nodes.size());
  if (tree.root < 0 || tree.root >= count)
    throw GameTreeError("root index out of range");

  std::vector<char> visited(static_cast<std::size_t>(count), 0);
  std::vector<std::map<int, InfoSetRecord>> infosets(
      static_cast<std::size_t>(tree.agents));
  std::vector<std::map<Chain, int>> terminal_id(
      static_cast<std::size_t>(tree.agents));
  TreeScan scan;
  scan.catalogs.resize(static_cast<std::size_t>(tree.agents));

  std::vector<Chain> chains(static_cast<std::size_t>(tree.agents));
  std::function<void(int, double)> walk = [&](int v, double coef) {
    if (v < 0 || v >= count)
      throw GameTreeError("child index out of range");
    if (visited[static_cast<std::size_t>(v)])
      throw GameTreeError("node " + std::to_string(v) +
                          " is reachable along two paths");
    visited[static_cast<std::size_t>(v)] = 1;
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(v)];
    switch (node.kind) {
      case TreeNode::Kind::Leaf: {
        if (!node.children.empty())
          throw GameTreeError("leaf node " + std::to_string(v) +
                              " has children");
        if (node.payoffs.size() != tree.agents)
          throw GameTreeError("leaf node " + std::to_string(v) +
                              " has the wrong payoff count");
        ScanOutcome out;
        out.coef = coef;
        out.payoffs = node.payoffs;
        out.coord.resize(static_cast<std::size_t>(tree.agents));
        for (int n = 0; n < tree.agents; ++n) {
          auto& ids = terminal_id[static_cast<std::size_t>(n)];
          auto [it, inserted] = ids.emplace(
              chains[static_cast<std::size_t>(n)],
              static_cast<int>(ids.size()));
          if (inserted)
            scan.catalogs[static_cast<std::size_t>(n)]
                .terminal_sequences.push_back(
                    chains[static_cast<std::size_t>(n)]);
          out.coord[static_cast<std::size_t>(n)] = it->second;
        }
        scan.outcomes.push_back(std::move(out));
        return;
      }
      case TreeNode::Kind::Chance: {
        if (node.children.empty())
          throw GameTreeError("chance node " + std::to_string(v) +
                              " has no children");
        if (node.probs.size() != node.children.size())
          throw GameTreeError("chance node " + std::to_string(v) +
                              " has mismatched branch probabilities");
        double sum = 0.0;
        for (double p : node.probs) {
          if (!(p >= 0.0))
            throw GameTreeError("chance node " + std::to_string(v) +
                                " has a negative branch probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw GameTreeError("chance node " + std::to_string(v) +
                              " branch probabilities do not sum to one");
        for (std::size_t a = 0; a < node.children.size(); ++a)
          walk(node.children[a], coef * node.probs[a]);
        return;
      }
      case TreeNode::Kind::Decision: {
        if (node.owner < 0 || node.owner >= tree.agents)
          throw GameTreeError("decision node " + std::to_string(v) +
                              " has an out-of-range owner");
        if (node.infoset < 0)
          throw GameTreeError("decision node " + std::to_string(v) +
                              " has a negative information set id");
        if (node.children.empty())
          throw GameTreeError("decision node " + std::to_string(v) +
                              " has no actions");
        auto& table = infosets[static_cast<std::size_t>(node.owner)];
        auto it = table.find(node.infoset);
        if (it == table.end()) {
          InfoSetRecord rec;
          rec.actions = static_cast<int>(node.children.size());
          rec.history = chains[static_cast<std::size_t>(node.owner)];
          table.emplace(node.infoset, std::move(rec));
        } else {
          if (it->second.actions != static_cast<int>(node.children.size()))
            throw GameTreeError("information set " +
                                std::to_string(node.infoset) + " of agent " +
                                std::to_string(node.owner) +
                                " mixes action counts");
          if (it->second.history != chains[static_cast<std::size_t>(node.owner)])
            throw GameTreeError("information set " +
                                std::to_string(node.infoset) + " of agent " +
                                std::to_string(node.owner) +
                                " mixes own-action histories");
        }
        auto& chain = chains[static_cast<std::size_t>(node.owner)];
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          chain.emplace_back(node.infoset, static_cast<int>(a));
          walk(node.children[a], coef);
          chain.pop_back();
        }
        return;
      }
    }
    throw GameTreeError("node " + std::to_string(v) + " has an unknown kind");
  };
  walk(tree.root, 1.0);

  for (int v = 0; v < count; ++v)
    if (!visited[static_cast<std::size_t>(v)])
      throw GameTreeError("node " + std::to_string(v) + " is unreachable");

  for (int n = 0; n < tree.agents; ++n) {
    auto& table = infosets[static_cast<std::size_t>(n)];
    auto& cat = scan.catalogs[static_cast<std::size_t>(n)];
    int expected = 0;
    for (auto& [id, rec] : table) {
      if (id != expected)
        throw GameTreeError("agent " + std::to_string(n) +
                            " information set ids are not contiguous");
      InfoSetSpec spec;
      spec.actions = rec.actions;
      spec.history = std::move(rec.history);
      cat.infosets.push_back(std::move(spec));
      ++expected;
    }
  }
  return scan;
}

SequenceFormSpace space_for(const GameTree& tree, double epsilon) {
  return build_space(catalogs_from_tree(tree), epsilon);
}

}  // namespace

void validate_tree(const GameTree& tree) { scan_tree(tree); }

std::vector<AgentCatalog> catalogs_from_tree(const GameTree& tree) {
  return std::move(scan_tree(tree).catalogs);
}

GameTree tree_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw GameTreeError(std::string("invalid game document: ") + e.what());
  }
  try {
    if (doc.value("type", std::string()) != "tree")
      throw GameTreeError("expected a document of type \"tree\"");
    GameTree tree;
    tree.agents = doc.at("agents").get<int>();
    tree.root = doc.value("root", 0);
    for (const auto& jn : doc.at("nodes")) {
      TreeNode node;
      std::string kind = jn.at("kind").get<std::string>();
      if (kind == "chance") {
        node.kind = TreeNode::Kind::Chance;
        node.probs = jn.at("probs").get<std::vector<double>>();
        node.children = jn.at("children").get<std::vector<int>>();
      } else if (kind == "decision") {
        node.kind = TreeNode::Kind::Decision;
        node.owner = jn.at("owner").get<int>();
        node.infoset = jn.at("infoset").get<int>();
        node.children = jn.at("children").get<std::vector<int>>();
      } else if (kind == "leaf") {
        node.kind = TreeNode::Kind::Leaf;
        auto payoffs = jn.at("payoffs").get<std::vector<double>>();
        node.payoffs =
            Eigen::Map<const VectorXd>(payoffs.data(),
                                       static_cast<int>(payoffs.size()));
      } else {
        throw GameTreeError("unknown node kind \"" + kind + "\"");
      }
      tree.nodes.push_back(std::move(node));
    }
    validate_tree(tree);
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw GameTreeError(std::string("invalid game document: ") + e.what());
  }
}

std::string tree_to_json(const GameTree& tree) {
  nlohmann::json doc;
  doc["type"] = "tree";
  doc["agents"] = tree.agents;
  doc["root"] = tree.root;
  doc["nodes"] = nlohmann::json::array();
  for (const TreeNode& node : tree.nodes) {
    nlohmann::json jn;
    switch (node.kind) {
      case TreeNode::Kind::Chance:
        jn["kind"] = "chance";
        jn["probs"] = node.probs;
        jn["children"] = node.children;
        break;
      case TreeNode::Kind::Decision:
        jn["kind"] = "decision";
        jn["owner"] = node.owner;
        jn["infoset"] = node.infoset;
        jn["children"] = node.children;
        break;
      case TreeNode::Kind::Leaf: {
        jn["kind"] = "leaf";
        std::vector<double> payoffs(
            node.payoffs.data(), node.payoffs.data() + node.payoffs.size());
        jn["payoffs"] = payoffs;
        break;
      }
    }
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump(2);
}

TreeSequenceView::TreeSequenceView(GameTree tree, double epsilon)
    : SequenceViewBase(space_for(tree, epsilon)), tree_(std::move(tree)) {
  TreeScan scan = scan_tree(tree_);
  outcomes_.reserve(scan.outcomes.size());
  for (auto& out : scan.outcomes) {
    Outcome o;
    o.coef = out.coef;
    o.payoffs = std::move(out.payoffs);
    o.coord = std::move(out.coord);
    outcomes_.push_back(std::move(o));
  }
  range_.assign(static_cast<std::size_t>(tree_.agents), 0.0);
  for (int n = 0; n < tree_.agents; ++n) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Outcome& o : outcomes_) {
      lo = std::min(lo, o.payoffs(n));
      hi = std::max(hi, o.payoffs(n));
    }
    range_[static_cast<std::size_t>(n)] = hi - lo;
  }
}

Eigen::VectorXd TreeSequenceView::deviation(
    const Eigen::VectorXd& sigma) const {
  const AgentIndexing& ix = space_.ix;
  const int agents = tree_.agents;
  VectorXd v = VectorXd::Zero(ix.total_dim);
  std::vector<double> f(static_cast<std::size_t>(agents));
  for (const Outcome& o : outcomes_) {
    for (int n = 0; n < agents; ++n)
      f[static_cast<std::size_t>(n)] =
          sigma(ix.offset(n) + o.coord[static_cast<std::size_t>(n)]);
    for (int n = 0; n < agents; ++n) {
      double p = o.coef;
      for (int k = 0; k < agents; ++k)
        if (k != n) p *= f[static_cast<std::size_t>(k)];
      v(ix.offset(n) + o.coord[static_cast<std::size_t>(n)]) +=
          p * o.payoffs(n);
    }
  }
  return v;
}

Eigen::MatrixXd TreeSequenceView::deviation_jacobian(
    const Eigen::VectorXd& sigma) const {
  const AgentIndexing& ix = space_.ix;
  const int agents = tree_.agents;
  MatrixXd jac = MatrixXd::Zero(ix.total_dim, ix.total_dim);
  std::vector<double> f(static_cast<std::size_t>(agents));
  for (const Outcome& o : outcomes_) {
    for (int n = 0; n < agents; ++n)
      f[static_cast<std::size_t>(n)] =
          sigma(ix.offset(n) + o.coord[static_cast<std::size_t>(n)]);
    for (int n = 0; n < agents; ++n) {
      for (int q = 0; q < agents; ++q) {
        if (q == n) continue;
        double p = o.coef;
        for (int k = 0; k < agents; ++k)
          if (k != n && k != q) p *= f[static_cast<std::size_t>(k)];
        jac(ix.offset(n) + o.coord[static_cast<std::size_t>(n)],
            ix.offset(q) + o.coord[static_cast<std::size_t>(q)]) +=
            p * o.payoffs(n);
      }
    }
  }
  return jac;
}

double TreeSequenceView::payoff_range(int n) const {
  return range_[static_cast<std::size_t>(n)];
}

}  // namespace gtsolve
