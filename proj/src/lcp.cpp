#include "gtsolve/lcp.hpp"

#include <cmath>
#include <limits>

namespace gtsolve {

namespace {

constexpr double kPivEps = 1e-11;

// Row operations shared by both pivoting algorithms. The tableau carries all
// variable columns plus the right-hand side in the last column; `lex_off` is
// the start of the columns that were the initial identity basis, used for
// the lexicographic ratio test.
struct Tableau {
  Eigen::MatrixXd T;
  std::vector<int> basic;  // variable id basic in each row
  int lex_off;
  int lex_cnt;

  int rhs_col() const { return static_cast<int>(T.cols()) - 1; }

  // Lexicographic min ratio row for entering column e; -1 if unbounded.
  int ratio_row(int e) const {
    int rows = static_cast<int>(T.rows());
    int best = -1;
    for (int i = 0; i < rows; ++i) {
      double c = T(i, e);
      if (c <= kPivEps) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      // compare (rhs, lex columns)/pivot entrywise
      double d = T(i, rhs_col()) / c - T(best, rhs_col()) / T(best, e);
      if (d < -kPivEps) {
        best = i;
        continue;
      }
      if (d > kPivEps) continue;
      for (int j = 0; j < lex_cnt; ++j) {
        double dj = T(i, lex_off + j) / c - T(best, lex_off + j) / T(best, e);
        if (dj < -kPivEps) {
          best = i;
          break;
        }
        if (dj > kPivEps) break;
      }
    }
    return best;
  }

  // Pivot entering column e into row r; returns the leaving variable id.
  int pivot(int e, int r) {
    int out = basic[r];
    T.row(r) /= T(r, e);
    for (int i = 0; i < T.rows(); ++i) {
      if (i == r) continue;
      double f = T(i, e);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basic[r] = e;
    return out;
  }
};

}  // namespace

LhResult lemke_howson(const BimatrixGame& g, int dropped_label,
                      long max_pivots) {
  const int m1 = static_cast<int>(g.A.rows());
  const int m2 = static_cast<int>(g.A.cols());
  if (g.B.rows() != m1 || g.B.cols() != m2)
    throw std::invalid_argument("payoff matrix shape mismatch");
  if (dropped_label < 0 || dropped_label >= m1 + m2)
    throw std::invalid_argument("label out of range");

  // strictly positive payoffs keep both polytopes bounded
  Eigen::MatrixXd A = g.A.array() - g.A.minCoeff() + 1.0;
  Eigen::MatrixXd B = g.B.array() - g.B.minCoeff() + 1.0;

  // tableau 1: rows are the column player's constraints B^T x + r = 1,
  // variables x (ids 0..m1-1) then r (ids m1..m1+m2-1)
  Tableau t1;
  t1.T.resize(m2, m1 + m2 + 1);
  t1.T << B.transpose(), Eigen::MatrixXd::Identity(m2, m2),
      Eigen::VectorXd::Ones(m2);
  t1.basic.resize(m2);
  for (int j = 0; j < m2; ++j) t1.basic[j] = m1 + j;
  t1.lex_off = m1;
  t1.lex_cnt = m2;

  // tableau 2: rows are the row player's constraints A y + s = 1,
  // variables y (ids 0..m2-1) then s (ids m2..m2+m1-1)
  Tableau t2;
  t2.T.resize(m1, m2 + m1 + 1);
  t2.T << A, Eigen::MatrixXd::Identity(m1, m1), Eigen::VectorXd::Ones(m1);
  t2.basic.resize(m1);
  for (int i = 0; i < m1; ++i) t2.basic[i] = m2 + i;
  t2.lex_off = m2;
  t2.lex_cnt = m1;

  // labels: x_i and s_i carry label i, y_j and r_j carry label m1+j
  auto label1 = [&](int var) { return var < m1 ? var : var; };          // x_i -> i, r_j -> m1+j
  auto label2 = [&](int var) { return var < m2 ? m1 + var : var - m2; };  // y_j -> m1+j, s_i -> i

  bool in_t1 = dropped_label < m1;
  int entering = in_t1 ? dropped_label : dropped_label - m1;
  long pivots = 0;
  while (true) {
    Tableau& t = in_t1 ? t1 : t2;
    int row = t.ratio_row(entering);
    if (row < 0) throw LcpError("lemke_howson: ray termination");
    int leaving = t.pivot(entering, row);
    if (++pivots > max_pivots) throw LcpError("lemke_howson: pivot cap exceeded");
    int leaving_label = in_t1 ? label1(leaving) : label2(leaving);
    if (leaving_label == dropped_label) break;
    if (in_t1) {
      // complement of x_i is s_i (id m2+i in t2); of r_j is y_j (id j in t2)
      entering = leaving < m1 ? m2 + leaving : leaving - m1;
    } else {
      // complement of y_j is r_j (id m1+j in t1); of s_i is x_i (id i in t1)
      entering = leaving < m2 ? m1 + leaving : leaving - m2;
    }
    in_t1 = !in_t1;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(m1), y = Eigen::VectorXd::Zero(m2);
  for (int j = 0; j < m2; ++j)
    if (t1.basic[j] < m1) x[t1.basic[j]] = t1.T(j, t1.rhs_col());
  for (int i = 0; i < m1; ++i)
    if (t2.basic[i] < m2) y[t2.basic[i]] = t2.T(i, t2.rhs_col());
  double sx = x.sum(), sy = y.sum();
  if (sx <= 0 || sy <= 0) throw LcpError("lemke_howson: degenerate endpoint");
  return {x / sx, y / sy, pivots};
}

void PolymatrixGame::validate() const {
  int N = agents();
  if (N < 2) throw std::invalid_argument("polymatrix game needs two agents");
  if (static_cast<int>(blocks.size()) != N)
    throw std::invalid_argument("block row count mismatch");
  for (int n = 0; n < N; ++n) {
    if (static_cast<int>(blocks[n].size()) != N)
      throw std::invalid_argument("block column count mismatch");
    for (int q = 0; q < N; ++q) {
      if (q == n) continue;
      if (blocks[n][q].rows() != actions[n] || blocks[n][q].cols() != actions[q])
        throw std::invalid_argument("block shape mismatch");
    }
  }
}

Eigen::VectorXd solve_polymatrix(const PolymatrixGame& g, long max_pivots) {
  g.validate();
  const int N = g.agents();
  AgentIndexing ix = g.indexing();
  const int m = ix.total_dim;

  if (N == 2) {
    BimatrixGame bg{g.blocks[0][1], g.blocks[1][0].transpose()};
    LhResult r = lemke_howson(bg, 0, max_pivots);
    Eigen::VectorXd sigma(m);
    sigma << r.x, r.y;
    return sigma;
  }

  // stack the pairwise payoffs, shifted strictly negative per agent so every
  // complementary solution is properly normalized
  Eigen::MatrixXd Bneg = Eigen::MatrixXd::Zero(m, m);
  for (int n = 0; n < N; ++n) {
    double hi = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < N; ++q)
      if (q != n) hi = std::max(hi, g.blocks[n][q].maxCoeff());
    double shift = hi + 1.0;
    for (int q = 0; q < N; ++q)
      if (q != n)
        Bneg.block(ix.offset(n), ix.offset(q), ix.length(n), ix.length(q)) =
            g.blocks[n][q].array() - shift;
  }

  // z = (sigma, u); w1 = -Bneg sigma - E u >= 0, w2 = E^T sigma - 1 >= 0
  const int K = m + N;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, K);
  M.topLeftCorner(m, m) = -Bneg;
  for (int n = 0; n < N; ++n)
    for (int a = 0; a < ix.length(n); ++a) {
      M(ix.offset(n) + a, m + n) = -1.0;
      M(m + n, ix.offset(n) + a) = 1.0;
    }
  Eigen::VectorXd qv = Eigen::VectorXd::Zero(K);
  qv.tail(N).setConstant(-1.0);

  // Lemke tableau: columns w (ids 0..K-1), z (ids K..2K-1), z0 (id 2K), rhs
  Tableau t;
  t.T.resize(K, 2 * K + 2);
  t.T << Eigen::MatrixXd::Identity(K, K), -M,
      -Eigen::VectorXd::Ones(K), qv;
  t.basic.resize(K);
  for (int i = 0; i < K; ++i) t.basic[i] = i;
  t.lex_off = 0;
  t.lex_cnt = K;
  const int z0 = 2 * K;

  // bring z0 in on the most negative right-hand side
  int start = 0;
  for (int i = 1; i < K; ++i)
    if (t.T(i, t.rhs_col()) < t.T(start, t.rhs_col())) start = i;
  if (t.T(start, t.rhs_col()) >= 0.0) throw LcpError("lemke: trivial start");
  int leaving = t.pivot(z0, start);

  long pivots = 1;
  while (true) {
    int entering = leaving < K ? K + leaving : leaving - K;  // complement
    int row = t.ratio_row(entering);
    if (row < 0) throw LcpError("lemke: ray termination");
    leaving = t.pivot(entering, row);
    if (++pivots > max_pivots) throw LcpError("lemke: pivot cap exceeded");
    if (leaving == z0) break;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(K);
  for (int i = 0; i < K; ++i)
    if (t.basic[i] >= K && t.basic[i] < 2 * K)
      z[t.basic[i] - K] = t.T(i, t.rhs_col());
  Eigen::VectorXd sigma = z.head(m);
  for (int n = 0; n < N; ++n) {
    double s = sigma.segment(ix.offset(n), ix.length(n)).sum();
    if (std::abs(s - 1.0) > 1e-6) throw LcpError("lemke: unnormalized endpoint");
    sigma.segment(ix.offset(n), ix.length(n)) /= s;
  }
  return sigma;
}

PolymatrixView::PolymatrixView(PolymatrixGame game)
    : game_(std::move(game)), ix_(game_.indexing()) {
  game_.validate();
}

Eigen::VectorXd PolymatrixView::deviation(const Eigen::VectorXd& sigma) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ix_.total_dim);
  for (int n = 0; n < game_.agents(); ++n)
    for (int q = 0; q < game_.agents(); ++q) {
      if (q == n) continue;
      v.segment(ix_.offset(n), ix_.length(n)) +=
          game_.blocks[n][q] * sigma.segment(ix_.offset(q), ix_.length(q));
    }
  return v;
}

Eigen::MatrixXd PolymatrixView::deviation_jacobian(const Eigen::VectorXd&) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(ix_.total_dim, ix_.total_dim);
  for (int n = 0; n < game_.agents(); ++n)
    for (int q = 0; q < game_.agents(); ++q) {
      if (q == n) continue;
      J.block(ix_.offset(n), ix_.offset(q), ix_.length(n), ix_.length(q)) =
          game_.blocks[n][q];
    }
  return J;
}

double PolymatrixView::payoff_range(int n) const {
  double r = 0.0;
  for (int q = 0; q < game_.agents(); ++q)
    if (q != n) r += game_.blocks[n][q].maxCoeff() - game_.blocks[n][q].minCoeff();
  return r;
}

}  // namespace gtsolve
