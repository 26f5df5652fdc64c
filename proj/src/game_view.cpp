#include "gtsolve/game_view.hpp"

#include <algorithm>

namespace gtsolve {

std::vector<double> GameView::payoffs(const Eigen::VectorXd& sigma) const {
  const AgentIndexing& ix = indexing();
  Eigen::VectorXd v = deviation(sigma);
  std::vector<double> out(ix.agents());
  for (int n = 0; n < ix.agents(); ++n)
    out[n] = sigma.segment(ix.offset(n), ix.length(n))
                 .dot(v.segment(ix.offset(n), ix.length(n)));
  return out;
}

double GameView::max_regret(const Eigen::VectorXd& sigma) const {
  std::vector<double> r = regret(sigma);
  return *std::max_element(r.begin(), r.end());
}

Retraction MixedGameView::retract(const Eigen::VectorXd& w,
                                  const SupportSignature*) const {
  return retract_simplex(w, indexing(), 0.0);
}

Eigen::MatrixXd MixedGameView::retraction_jacobian(
    const SupportSignature& sig) const {
  return retraction_jacobian_simplex(sig, indexing());
}

std::vector<double> MixedGameView::regret(const Eigen::VectorXd& sigma) const {
  const AgentIndexing& ix = indexing();
  Eigen::VectorXd v = deviation(sigma);
  std::vector<double> out(ix.agents());
  for (int n = 0; n < ix.agents(); ++n) {
    auto slice = v.segment(ix.offset(n), ix.length(n));
    double cur = sigma.segment(ix.offset(n), ix.length(n)).dot(slice);
    out[n] = slice.maxCoeff() - cur;
  }
  return out;
}

}  // namespace gtsolve
