#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace gtsolve {

// Coordinates strictly more than this far above their lower bound count as
// being in the support of a profile.
inline constexpr double kSupportTol = 1e-12;

// Layout of a stacked strategy vector: one contiguous slice per agent, in
// agent order. For mixed strategies slice n holds agent n's action
// probabilities; for realization plans it holds the agent's terminal-sequence
// probabilities.
struct AgentIndexing {
  std::vector<int> offsets;
  std::vector<int> lengths;
  int total_dim = 0;

  static AgentIndexing from_lengths(const std::vector<int>& lengths);

  int agents() const { return static_cast<int>(lengths.size()); }
  int offset(int n) const { return offsets[n]; }
  int length(int n) const { return lengths[n]; }
  // Agent owning global coordinate i.
  int owner(int i) const;
  bool operator==(const AgentIndexing& o) const {
    return lengths == o.lengths;
  }
};

// Bitmask over profile coordinates; a set bit marks a coordinate strictly
// above its lower bound. Equality and hashing identify the support cell a
// point lies in.
class SupportSignature {
 public:
  SupportSignature() = default;
  explicit SupportSignature(int size);

  int size() const { return size_; }
  void set(int i, bool v);
  bool test(int i) const;
  int count() const;
  int count_range(int begin, int end) const;

  bool operator==(const SupportSignature& o) const {
    return size_ == o.size_ && words_ == o.words_;
  }
  bool operator!=(const SupportSignature& o) const { return !(*this == o); }
  std::uint64_t hash() const;

 private:
  int size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct SupportSignatureHash {
  std::size_t operator()(const SupportSignature& s) const {
    return static_cast<std::size_t>(s.hash());
  }
};

// A retracted point: the projected profile plus the support cell it lies in.
struct Retraction {
  Eigen::VectorXd sigma;
  SupportSignature signature;
};

SupportSignature signature_of(const Eigen::VectorXd& sigma,
                              double lower_bound = 0.0);

// Euclidean projection of each agent slice of w onto
// {x : x >= lower_bound, sum(x) = 1}, via sort-and-threshold.
// Requires lower_bound * slice_length <= 1 for every agent.
Retraction retract_simplex(const Eigen::VectorXd& w, const AgentIndexing& ix,
                           double lower_bound = 0.0);

// Jacobian of retract_simplex as a function of the support cell alone:
// block diagonal, with I - (1/k) 11^T on each agent's support coordinates
// (k = support size) and zeros elsewhere. Throws if any agent has empty
// support in sig.
Eigen::MatrixXd retraction_jacobian_simplex(const SupportSignature& sig,
                                            const AgentIndexing& ix);

// Basic profile sanity checks (finite, simplex-feasible within tol).
bool validate_mixed(const Eigen::VectorXd& sigma, const AgentIndexing& ix,
                    double lower_bound = 0.0, double tol = 1e-9);

// Smallest t > 0 at which the signature along w + t*dw differs from the
// signature at w, located by geometric bracketing plus bisection down to
// absolute width `tol`. The returned t is on the far side of the boundary,
// so stepping by it changes the signature. Returns +infinity if no change
// occurs within `horizon`.
double signature_change_distance(
    const std::function<SupportSignature(const Eigen::VectorXd&)>& sig_at,
    const Eigen::VectorXd& w, const Eigen::VectorXd& dw, double horizon = 1e12,
    double tol = 1e-10);

// signature_change_distance specialised to the per-agent simplex retraction.
double support_distance(const Eigen::VectorXd& w, const Eigen::VectorXd& dw,
                        const AgentIndexing& ix, double lower_bound = 0.0,
                        double horizon = 1e12);

}  // namespace gtsolve
