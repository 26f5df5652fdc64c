#include "gtsolve/graphical.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace gtsolve {

namespace {

thread_local std::uint64_t g_ops = 0;

bool next_assignment(std::vector<int>& u, const std::vector<int>& radix) {
  for (int i = static_cast<int>(u.size()) - 1; i >= 0; --i) {
    if (++u[i] < radix[i]) return true;
    u[i] = 0;
  }
  return false;
}

}  // namespace

void reset_graphical_op_count() { g_ops = 0; }
std::uint64_t graphical_op_count() { return g_ops; }

long long GraphicalGame::family_size(int n) const {
  long long sz = actions[n];
  for (int p : parents[n]) sz *= actions[p];
  return sz;
}

double GraphicalGame::family_payoff(int n, int a,
                                    const std::vector<int>& parent_actions) const {
  long long idx = a;
  for (std::size_t i = 0; i < parents[n].size(); ++i)
    idx = idx * actions[parents[n][i]] + parent_actions[i];
  return family_payoffs[n][idx];
}

void GraphicalGame::validate() const {
  int N = agents();
  if (N == 0) throw std::invalid_argument("game has no agents");
  if (static_cast<int>(parents.size()) != N ||
      static_cast<int>(family_payoffs.size()) != N)
    throw std::invalid_argument("per-agent field count mismatch");
  for (int n = 0; n < N; ++n) {
    if (actions[n] < 1) throw std::invalid_argument("agent with no actions");
    for (int p : parents[n]) {
      if (p < 0 || p >= N) throw std::invalid_argument("parent id out of range");
      if (p == n) throw std::invalid_argument("agent listed as its own parent");
    }
    std::vector<int> sorted = parents[n];
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("duplicate parent");
    if (static_cast<long long>(family_payoffs[n].size()) != family_size(n))
      throw std::invalid_argument("family table size mismatch");
  }
}

Eigen::VectorXd graphical_deviation_vector(const GraphicalGame& g,
                                           const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  if (sigma.size() != ix.total_dim) throw std::invalid_argument("profile dimension mismatch");
  int N = g.agents();
  // Slice sums make the result the full multilinear form in every agent, so
  // the Jacobian below is its exact derivative and the degree identity
  // J sigma = (N-1) V holds. On normalized profiles the factors are all one.
  std::vector<double> slice_sum(N);
  for (int k = 0; k < N; ++k)
    slice_sum[k] = sigma.segment(ix.offset(k), ix.length(k)).sum();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ix.total_dim);
  for (int n = 0; n < N; ++n) {
    const auto& par = g.parents[n];
    int f = static_cast<int>(par.size());
    long long stride = g.family_size(n) / g.actions[n];
    std::vector<int> radix(f);
    for (int i = 0; i < f; ++i) radix[i] = g.actions[par[i]];
    std::vector<bool> in_family(N, false);
    in_family[n] = true;
    for (int p : par) in_family[p] = true;
    double outside = 1.0;
    for (int k = 0; k < N; ++k) {
      if (!in_family[k]) outside *= slice_sum[k];
    }
    std::vector<int> u(f, 0);
    long long idx = 0;  // runs over the table with self varying slowest
    do {
      double prod = outside;
      for (int i = 0; i < f; ++i) prod *= sigma[ix.offset(par[i]) + u[i]];
      g_ops += f;
      for (int a = 0; a < g.actions[n]; ++a) {
        v[ix.offset(n) + a] += g.family_payoffs[n][a * stride + idx] * prod;
        ++g_ops;
      }
      ++idx;
    } while (f > 0 && next_assignment(u, radix));
  }
  return v;
}

Eigen::MatrixXd graphical_deviation_jacobian(const GraphicalGame& g,
                                             const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  if (sigma.size() != ix.total_dim) throw std::invalid_argument("profile dimension mismatch");
  int N = g.agents();
  int m = ix.total_dim;
  std::vector<double> slice_sum(N);
  for (int k = 0; k < N; ++k)
    slice_sum[k] = sigma.segment(ix.offset(k), ix.length(k)).sum();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int n = 0; n < N; ++n) {
    const auto& par = g.parents[n];
    int f = static_cast<int>(par.size());
    long long stride = g.family_size(n) / g.actions[n];
    std::vector<int> radix(f);
    for (int i = 0; i < f; ++i) radix[i] = g.actions[par[i]];
    std::vector<bool> in_family(N, false);
    in_family[n] = true;
    for (int p : par) in_family[p] = true;
    std::vector<int> nonfam;
    for (int k = 0; k < N; ++k) {
      if (!in_family[k]) nonfam.push_back(k);
    }
    double outside = 1.0;
    for (int k : nonfam) outside *= slice_sum[k];

    std::vector<double> famexp(g.actions[n], 0.0);
    std::vector<double> pre(f + 1), suf(f + 1);
    std::vector<int> u(f, 0);
    long long idx = 0;
    do {
      pre[0] = 1.0;
      for (int i = 0; i < f; ++i) pre[i + 1] = pre[i] * sigma[ix.offset(par[i]) + u[i]];
      suf[f] = 1.0;
      for (int i = f - 1; i >= 0; --i) suf[i] = suf[i + 1] * sigma[ix.offset(par[i]) + u[i]];
      g_ops += 2 * f;
      for (int a = 0; a < g.actions[n]; ++a) {
        double gn = g.family_payoffs[n][a * stride + idx];
        int row = ix.offset(n) + a;
        famexp[a] += gn * pre[f];
        ++g_ops;
        // family columns: drop one parent's probability at a time
        for (int i = 0; i < f; ++i) {
          J(row, ix.offset(par[i]) + u[i]) += gn * pre[i] * suf[i + 1] * outside;
          g_ops += 2;
        }
      }
      ++idx;
    } while (f > 0 && next_assignment(u, radix));

    // Non-family columns: the family expectation times the slice sums of the
    // remaining outside agents, peeled one at a time by prefix and suffix
    // products.
    int nf = static_cast<int>(nonfam.size());
    std::vector<double> npre(nf + 1), nsuf(nf + 1);
    npre[0] = 1.0;
    for (int t = 0; t < nf; ++t) npre[t + 1] = npre[t] * slice_sum[nonfam[t]];
    nsuf[nf] = 1.0;
    for (int t = nf - 1; t >= 0; --t) nsuf[t] = nsuf[t + 1] * slice_sum[nonfam[t]];
    for (int t = 0; t < nf; ++t) {
      int q = nonfam[t];
      double factor = npre[t] * nsuf[t + 1];
      for (int a = 0; a < g.actions[n]; ++a)
        for (int c = 0; c < g.actions[q]; ++c) {
          J(ix.offset(n) + a, ix.offset(q) + c) = famexp[a] * factor;
          ++g_ops;
        }
    }
  }
  return J;
}

std::vector<double> graphical_expected_payoffs(const GraphicalGame& g,
                                               const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  Eigen::VectorXd v = graphical_deviation_vector(g, sigma);
  std::vector<double> out(g.agents());
  for (int n = 0; n < g.agents(); ++n)
    out[n] = sigma.segment(ix.offset(n), ix.length(n))
                 .dot(v.segment(ix.offset(n), ix.length(n)));
  return out;
}

NormalFormGame flatten_to_normal_form(const GraphicalGame& g, long long cap) {
  g.validate();
  int N = g.agents();
  long long total = 1;
  for (int k : g.actions) {
    total *= k;
    if (total > cap) throw std::invalid_argument("joint action space exceeds cap");
  }
  NormalFormGame nf;
  nf.actions = g.actions;
  nf.payoffs.assign(N, std::vector<double>(total));
  std::vector<int> p(N, 0);
  long long flat = 0;
  do {
    for (int n = 0; n < N; ++n) {
      std::vector<int> pa(g.parents[n].size());
      for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = p[g.parents[n][i]];
      nf.payoffs[n][flat] = g.family_payoff(n, p[n], pa);
    }
    ++flat;
  } while (next_assignment(p, g.actions));
  return nf;
}

GraphicalGame graphical_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  GraphicalGame g;
  for (const auto& a : j.at("agents")) g.actions.push_back(a.at("actions").get<int>());
  g.parents = j.at("parents").get<std::vector<std::vector<int>>>();
  g.family_payoffs = j.at("family_payoffs").get<std::vector<std::vector<double>>>();
  g.validate();
  return g;
}

std::string graphical_to_json(const GraphicalGame& g) {
  nlohmann::json j;
  j["agents"] = nlohmann::json::array();
  for (int k : g.actions) j["agents"].push_back({{"actions", k}});
  j["parents"] = g.parents;
  j["family_payoffs"] = g.family_payoffs;
  return j.dump(2);
}

GraphicalView::GraphicalView(GraphicalGame game)
    : game_(std::move(game)), ix_(game_.indexing()) {
  game_.validate();
}

double GraphicalView::payoff_range(int n) const {
  const auto& t = game_.family_payoffs[n];
  auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  return *hi - *lo;
}

}  // namespace gtsolve
