#include "gtsolve/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtsolve {

AgentIndexing AgentIndexing::from_lengths(const std::vector<int>& lengths) {
  AgentIndexing ix;
  ix.lengths = lengths;
  ix.offsets.resize(lengths.size());
  int off = 0;
  for (std::size_t n = 0; n < lengths.size(); ++n) {
    if (lengths[n] <= 0) throw std::invalid_argument("agent slice must be non-empty");
    ix.offsets[n] = off;
    off += lengths[n];
  }
  ix.total_dim = off;
  return ix;
}

int AgentIndexing::owner(int i) const {
  if (i < 0 || i >= total_dim) throw std::out_of_range("coordinate out of range");
  int n = static_cast<int>(std::upper_bound(offsets.begin(), offsets.end(), i) -
                           offsets.begin()) - 1;
  return n;
}

SupportSignature::SupportSignature(int size) : size_(size) {
  words_.assign((size + 63) / 64, 0);
}

void SupportSignature::set(int i, bool v) {
  std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (v)
    words_[i >> 6] |= mask;
  else
    words_[i >> 6] &= ~mask;
}

bool SupportSignature::test(int i) const {
  return (words_[i >> 6] >> (i & 63)) & 1u;
}

int SupportSignature::count() const {
  int c = 0;
  for (std::uint64_t w : words_) c += __builtin_popcountll(w);
  return c;
}

int SupportSignature::count_range(int begin, int end) const {
  int c = 0;
  for (int i = begin; i < end; ++i) c += test(i) ? 1 : 0;
  return c;
}

std::uint64_t SupportSignature::hash() const {
  // FNV-1a over the words
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t w : words_) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h ^ static_cast<std::uint64_t>(size_);
}

SupportSignature signature_of(const Eigen::VectorXd& sigma, double lower_bound) {
  SupportSignature sig(static_cast<int>(sigma.size()));
  for (int i = 0; i < sigma.size(); ++i)
    sig.set(i, sigma[i] > lower_bound + kSupportTol);
  return sig;
}

namespace {

// Project one slice onto {x >= lb, sum(x) = 1} by shifting to the scaled
// simplex {y >= 0, sum(y) = 1 - k*lb} and thresholding the sorted values.
void project_slice(const double* w, double* out, int k, double lb) {
  double mass = 1.0 - lb * k;
  if (mass < -1e-12) throw std::invalid_argument("lower bound infeasible for slice");
  if (mass <= 0.0) {
    for (int i = 0; i < k; ++i) out[i] = lb;
    return;
  }
  std::vector<double> v(k);
  for (int i = 0; i < k; ++i) v[i] = w[i] - lb;
  std::sort(v.begin(), v.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int rho = 0;
  for (int j = 0; j < k; ++j) {
    cum += v[j];
    double t = (cum - mass) / (j + 1);
    if (v[j] - t > 0) {
      rho = j + 1;
      theta = t;
    }
  }
  for (int i = 0; i < k; ++i) {
    double y = w[i] - lb - theta;
    out[i] = lb + (y > 0 ? y : 0.0);
  }
}

}  // namespace

Retraction retract_simplex(const Eigen::VectorXd& w, const AgentIndexing& ix,
                           double lower_bound) {
  if (w.size() != ix.total_dim) throw std::invalid_argument("dimension mismatch");
  Retraction r;
  r.sigma.resize(w.size());
  for (int n = 0; n < ix.agents(); ++n)
    project_slice(w.data() + ix.offset(n), r.sigma.data() + ix.offset(n),
                  ix.length(n), lower_bound);
  r.signature = signature_of(r.sigma, lower_bound);
  return r;
}

Eigen::MatrixXd retraction_jacobian_simplex(const SupportSignature& sig,
                                            const AgentIndexing& ix) {
  if (sig.size() != ix.total_dim) throw std::invalid_argument("dimension mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(ix.total_dim, ix.total_dim);
  for (int n = 0; n < ix.agents(); ++n) {
    int off = ix.offset(n), len = ix.length(n);
    std::vector<int> support;
    for (int i = 0; i < len; ++i)
      if (sig.test(off + i)) support.push_back(off + i);
    if (support.empty()) throw std::invalid_argument("signature has empty support slice");
    double k = static_cast<double>(support.size());
    for (int a : support)
      for (int b : support) J(a, b) = (a == b ? 1.0 : 0.0) - 1.0 / k;
  }
  return J;
}

bool validate_mixed(const Eigen::VectorXd& sigma, const AgentIndexing& ix,
                    double lower_bound, double tol) {
  if (sigma.size() != ix.total_dim) return false;
  for (int i = 0; i < sigma.size(); ++i)
    if (!std::isfinite(sigma[i]) || sigma[i] < lower_bound - tol) return false;
  for (int n = 0; n < ix.agents(); ++n) {
    double s = sigma.segment(ix.offset(n), ix.length(n)).sum();
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

double signature_change_distance(
    const std::function<SupportSignature(const Eigen::VectorXd&)>& sig_at,
    const Eigen::VectorXd& w, const Eigen::VectorXd& dw, double horizon,
    double tol) {
  if (dw.lpNorm<Eigen::Infinity>() < 1e-14)
    return std::numeric_limits<double>::infinity();
  SupportSignature sig0 = sig_at(w);
  // geometric bracketing
  double lo = 0.0, hi = std::max(tol, 1e-9);
  while (true) {
    if (hi > horizon) return std::numeric_limits<double>::infinity();
    if (sig_at(w + hi * dw) != sig0) break;
    lo = hi;
    hi *= 2.0;
  }
  // bisect down to absolute width tol; keep the far-side endpoint so that
  // stepping by the result is guaranteed to cross the boundary. The midpoint
  // check stops the loop once the interval is below representable
  // granularity, which tol alone cannot guarantee for large distances.
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sig_at(w + mid * dw) != sig0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double support_distance(const Eigen::VectorXd& w, const Eigen::VectorXd& dw,
                        const AgentIndexing& ix, double lower_bound,
                        double horizon) {
  auto sig_at = [&](const Eigen::VectorXd& x) {
    return retract_simplex(x, ix, lower_bound).signature;
  };
  return signature_change_distance(sig_at, w, dw, horizon);
}

}  // namespace gtsolve
