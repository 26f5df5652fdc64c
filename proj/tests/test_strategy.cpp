#include <Eigen/Dense>

#include <random>

#include "doctest.h"
#include "gtsolve/strategy.hpp"
#include "oracles.hpp"

using namespace gtsolve;

TEST_CASE("agent indexing maps coordinates to owners") {
  AgentIndexing ix = AgentIndexing::from_lengths({2, 3, 1});
  CHECK(ix.total_dim == 6);
  CHECK(ix.agents() == 3);
  CHECK(ix.offset(1) == 2);
  CHECK(ix.length(1) == 3);
  CHECK(ix.owner(0) == 0);
  CHECK(ix.owner(1) == 0);
  CHECK(ix.owner(2) == 1);
  CHECK(ix.owner(4) == 1);
  CHECK(ix.owner(5) == 2);
  CHECK_THROWS(AgentIndexing::from_lengths({2, 0}));
}

TEST_CASE("simplex retraction matches hand-computed values") {
  AgentIndexing ix3 = AgentIndexing::from_lengths({3});
  Eigen::VectorXd w(3);
  w << 0.8, 0.6, 0.1;
  Retraction r = retract_simplex(w, ix3);
  CHECK(r.sigma[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.sigma[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(r.sigma[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.signature.test(0));
  CHECK(r.signature.test(1));
  CHECK_FALSE(r.signature.test(2));
  CHECK(r.signature.count() == 2);

  AgentIndexing ix2 = AgentIndexing::from_lengths({2});
  Eigen::VectorXd w2(2);
  w2 << 2.0, 0.0;
  Retraction r2 = retract_simplex(w2, ix2);
  CHECK(r2.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.sigma[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r2.signature.count() == 1);
}

TEST_CASE("simplex retraction agrees with subset-enumeration projection") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (double lb : {0.0, 1e-4, 0.05}) {
    for (int k : {2, 3, 4, 6}) {
      AgentIndexing ix = AgentIndexing::from_lengths({k});
      for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd w(k);
        for (int i = 0; i < k; ++i) w[i] = dist(rng);
        Retraction r = retract_simplex(w, ix, lb);
        Eigen::VectorXd ref = oracle::project_slice_enum(w, lb);
        CHECK((r.sigma - ref).lpNorm<Eigen::Infinity>() < 1e-10);
        CHECK(r.sigma.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.sigma.minCoeff() >= lb - 1e-12);
      }
    }
  }
}

TEST_CASE("multi-agent retraction projects slices independently") {
  AgentIndexing ix = AgentIndexing::from_lengths({3, 2});
  Eigen::VectorXd w(5);
  w << 0.8, 0.6, 0.1, 2.0, 0.0;
  Retraction r = retract_simplex(w, ix);
  CHECK(r.sigma[0] == doctest::Approx(0.6));
  CHECK(r.sigma[1] == doctest::Approx(0.4));
  CHECK(r.sigma[3] == doctest::Approx(1.0));
  CHECK(r.sigma[4] == doctest::Approx(0.0));
}

TEST_CASE("retraction jacobian is the support-centering projector") {
  AgentIndexing ix = AgentIndexing::from_lengths({3, 2});
  Eigen::VectorXd w(5);
  w << 0.8, 0.6, 0.1, 0.9, 0.7;
  Retraction r = retract_simplex(w, ix);
  Eigen::MatrixXd jac = retraction_jacobian_simplex(r.signature, ix);

  // finite differences around a point safely inside its support cell
  auto f = [&](const Eigen::VectorXd& x) {
    return retract_simplex(x, ix).sigma;
  };
  Eigen::MatrixXd fd = oracle::fd_jacobian(f, w, 1e-7);
  CHECK((jac - fd).lpNorm<Eigen::Infinity>() < 1e-6);

  // projector structure: idempotent and zero row sums on each slice
  CHECK((jac * jac - jac).lpNorm<Eigen::Infinity>() < 1e-12);
  for (int row = 0; row < 5; ++row) {
    int n = ix.owner(row);
    double s = jac.row(row).segment(ix.offset(n), ix.length(n)).sum();
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("signature change distance brackets the facet crossing") {
  AgentIndexing ix = AgentIndexing::from_lengths({3});
  Eigen::VectorXd w(3), dw(3);
  w << 0.8, 0.6, 0.1;
  dw << 0.0, 0.0, 1.0;
  // The third action enters the support once w[2] grows by 0.1: with all
  // three active the threshold is (sum - 1) / 3, and w[2] - threshold > 0
  // first holds at t = 0.1.
  double d = support_distance(w, dw, ix);
  CHECK(d == doctest::Approx(0.1).epsilon(1e-7));

  auto sig_at = [&](const Eigen::VectorXd& x) {
    return retract_simplex(x, ix).signature;
  };
  SupportSignature sig0 = sig_at(w);
  CHECK(sig_at(w + d * dw) != sig0);       // far side: stepping d crosses
  CHECK(sig_at(w + 0.99 * d * dw) == sig0);

  // direction that never leaves the cell
  Eigen::VectorXd flat(3);
  flat << 1.0, 1.0, 1.0;  // uniform shift cancels in the projection
  CHECK(std::isinf(support_distance(w, flat, ix)));

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(std::isinf(support_distance(w, zero, ix)));
}

TEST_CASE("signatures hash and compare by content") {
  Eigen::VectorXd a(3), b(3);
  a << 0.5, 0.5, 0.0;
  b << 0.5, 0.0, 0.5;
  SupportSignature sa = signature_of(a, 0.0);
  SupportSignature sb = signature_of(b, 0.0);
  SupportSignature sa2 = signature_of(a, 0.0);
  CHECK(sa == sa2);
  CHECK(sa != sb);
  CHECK(sa.hash() == sa2.hash());
  CHECK(sa.count_range(0, 2) == 2);
  CHECK(sb.count_range(0, 2) == 1);
}

TEST_CASE("mixed profile validation") {
  AgentIndexing ix = AgentIndexing::from_lengths({2, 2});
  Eigen::VectorXd ok(4), bad_sum(4), neg(4);
  ok << 0.3, 0.7, 1.0, 0.0;
  bad_sum << 0.3, 0.3, 1.0, 0.0;
  neg << 1.1, -0.1, 1.0, 0.0;
  CHECK(validate_mixed(ok, ix, 0.0, 1e-9));
  CHECK_FALSE(validate_mixed(bad_sum, ix, 0.0, 1e-9));
  CHECK_FALSE(validate_mixed(neg, ix, 0.0, 1e-9));
  CHECK(validate_mixed(neg, ix, -0.2, 1e-9));
}
