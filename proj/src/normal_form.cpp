#include "gtsolve/normal_form.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace gtsolve {

namespace {
constexpr long long kJointCap = 1000000;

// Advance a mixed-radix counter; returns false after the last profile.
bool next_profile(std::vector<int>& p, const std::vector<int>& radix) {
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
    if (++p[i] < radix[i]) return true;
    p[i] = 0;
  }
  return false;
}
}  // namespace

long long NormalFormGame::joint_actions() const {
  long long total = 1;
  for (int k : actions) {
    total *= k;
    if (total > kJointCap) throw std::invalid_argument("joint action space exceeds cap");
  }
  return total;
}

long long NormalFormGame::flat_index(const std::vector<int>& profile) const {
  long long idx = 0;
  for (int n = 0; n < agents(); ++n) idx = idx * actions[n] + profile[n];
  return idx;
}

double NormalFormGame::payoff(int n, const std::vector<int>& profile) const {
  return payoffs[n][flat_index(profile)];
}

void NormalFormGame::validate() const {
  if (actions.empty()) throw std::invalid_argument("game has no agents");
  for (int k : actions)
    if (k < 1) throw std::invalid_argument("agent with no actions");
  long long total = joint_actions();
  if (payoffs.size() != actions.size())
    throw std::invalid_argument("payoff tensor count mismatch");
  for (const auto& t : payoffs)
    if (static_cast<long long>(t.size()) != total)
      throw std::invalid_argument("payoff tensor size mismatch");
}

Eigen::VectorXd normal_deviation_vector(const NormalFormGame& g,
                                        const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  if (sigma.size() != ix.total_dim) throw std::invalid_argument("profile dimension mismatch");
  int N = g.agents();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ix.total_dim);
  std::vector<int> p(N, 0);
  std::vector<double> pre(N + 1), suf(N + 1);
  long long flat = 0;
  do {
    // prefix/suffix products of the agents' probabilities along this profile
    pre[0] = 1.0;
    for (int k = 0; k < N; ++k) pre[k + 1] = pre[k] * sigma[ix.offset(k) + p[k]];
    suf[N] = 1.0;
    for (int k = N - 1; k >= 0; --k) suf[k] = suf[k + 1] * sigma[ix.offset(k) + p[k]];
    for (int n = 0; n < N; ++n)
      v[ix.offset(n) + p[n]] += g.payoffs[n][flat] * pre[n] * suf[n + 1];
    ++flat;
  } while (next_profile(p, g.actions));
  return v;
}

Eigen::MatrixXd normal_deviation_jacobian(const NormalFormGame& g,
                                          const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  if (sigma.size() != ix.total_dim) throw std::invalid_argument("profile dimension mismatch");
  int N = g.agents();
  int m = ix.total_dim;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  std::vector<int> p(N, 0);
  // mid[i][j] = product of probabilities of agents i..j-1 along the profile
  std::vector<std::vector<double>> mid(N + 1, std::vector<double>(N + 1, 1.0));
  long long flat = 0;
  do {
    for (int i = 0; i <= N; ++i) {
      mid[i][i] = 1.0;
      for (int j = i; j < N; ++j)
        mid[i][j + 1] = mid[i][j] * sigma[ix.offset(j) + p[j]];
    }
    for (int n = 0; n < N; ++n) {
      double gn = g.payoffs[n][flat];
      if (gn == 0.0) continue;
      int row = ix.offset(n) + p[n];
      for (int q = 0; q < N; ++q) {
        if (q == n) continue;
        int lo = std::min(n, q), hi = std::max(n, q);
        double excl = mid[0][lo] * mid[lo + 1][hi] * mid[hi + 1][N];
        J(row, ix.offset(q) + p[q]) += gn * excl;
      }
    }
    ++flat;
  } while (next_profile(p, g.actions));
  return J;
}

std::vector<double> normal_expected_payoffs(const NormalFormGame& g,
                                            const Eigen::VectorXd& sigma) {
  AgentIndexing ix = g.indexing();
  int N = g.agents();
  std::vector<double> out(N, 0.0);
  std::vector<int> p(N, 0);
  long long flat = 0;
  do {
    double prod = 1.0;
    for (int k = 0; k < N; ++k) prod *= sigma[ix.offset(k) + p[k]];
    if (prod != 0.0)
      for (int n = 0; n < N; ++n) out[n] += g.payoffs[n][flat] * prod;
    ++flat;
  } while (next_profile(p, g.actions));
  return out;
}

NormalFormGame normal_form_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NormalFormGame g;
  for (const auto& a : j.at("agents")) g.actions.push_back(a.at("actions").get<int>());
  for (const auto& t : j.at("payoffs"))
    g.payoffs.push_back(t.get<std::vector<double>>());
  g.validate();
  return g;
}

std::string normal_form_to_json(const NormalFormGame& g) {
  nlohmann::json j;
  j["agents"] = nlohmann::json::array();
  for (int k : g.actions) j["agents"].push_back({{"actions", k}});
  j["payoffs"] = g.payoffs;
  return j.dump(2);
}

NormalFormView::NormalFormView(NormalFormGame game)
    : game_(std::move(game)), ix_(game_.indexing()) {
  game_.validate();
}

double NormalFormView::payoff_range(int n) const {
  const auto& t = game_.payoffs[n];
  auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  return *hi - *lo;
}

}  // namespace gtsolve
