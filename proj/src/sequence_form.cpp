#include "gtsolve/sequence_form.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

namespace gtsolve {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

using Chain = std::vector<std::pair<int, int>>;

std::string chain_text(const Chain& chain) {
  std::ostringstream os;
  os << "[";
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (k) os << " ";
    os << chain[k].first << ":" << chain[k].second;
  }
  os << "]";
  return os.str();
}

// A chain is well formed when each step's infoset exists, the infoset's
// recorded history is exactly the preceding prefix, and the action index is
// in range.
void validate_chain(const AgentCatalog& cat, const Chain& chain, int agent,
                    const char* what) {
  Chain prefix;
  for (auto [i, a] : chain) {
    if (i < 0 || i >= static_cast<int>(cat.infosets.size()))
      throw SequenceFormError("agent " + std::to_string(agent) + " " + what +
                              " " + chain_text(chain) +
                              " names an unknown information set");
    const InfoSetSpec& spec = cat.infosets[static_cast<std::size_t>(i)];
    if (spec.history != prefix)
      throw SequenceFormError("agent " + std::to_string(agent) + " " + what +
                              " " + chain_text(chain) +
                              " disagrees with the history of information "
                              "set " +
                              std::to_string(i));
    if (a < 0 || a >= spec.actions)
      throw SequenceFormError("agent " + std::to_string(agent) + " " + what +
                              " " + chain_text(chain) +
                              " uses an out-of-range action");
    prefix.emplace_back(i, a);
  }
}

SequenceLattice build_lattice(const AgentCatalog& cat, int agent) {
  SequenceLattice lat;
  std::map<Chain, int> id;
  auto get = [&](const Chain& chain) {
    auto it = id.find(chain);
    if (it != id.end()) return it->second;
    int n = static_cast<int>(lat.nodes.size());
    id.emplace(chain, n);
    lat.nodes.emplace_back();
    lat.nodes.back().chain = chain;
    return n;
  };

  lat.root = get(Chain{});
  for (const Chain& chain : cat.terminal_sequences) get(chain);
  for (int k = 0; k < static_cast<int>(cat.infosets.size()); ++k) {
    const InfoSetSpec& spec = cat.infosets[static_cast<std::size_t>(k)];
    get(spec.history);
    for (int a = 0; a < spec.actions; ++a) {
      Chain ext = spec.history;
      ext.emplace_back(k, a);
      get(ext);
    }
  }

  for (int t = 0; t < static_cast<int>(cat.terminal_sequences.size()); ++t) {
    auto& node = lat.nodes[static_cast<std::size_t>(
        id.at(cat.terminal_sequences[static_cast<std::size_t>(t)]))];
    if (node.terminal_coord >= 0)
      throw SequenceFormError("agent " + std::to_string(agent) +
                              " lists terminal sequence " +
                              chain_text(node.chain) + " twice");
    node.terminal_coord = t;
  }

  for (int k = 0; k < static_cast<int>(cat.infosets.size()); ++k) {
    const InfoSetSpec& spec = cat.infosets[static_cast<std::size_t>(k)];
    auto& node = lat.nodes[static_cast<std::size_t>(id.at(spec.history))];
    node.infosets.push_back(k);
    std::vector<int> row(static_cast<std::size_t>(spec.actions));
    for (int a = 0; a < spec.actions; ++a) {
      Chain ext = spec.history;
      ext.emplace_back(k, a);
      row[static_cast<std::size_t>(a)] = id.at(ext);
    }
    node.children.push_back(std::move(row));
  }

  for (const auto& node : lat.nodes) {
    if (node.terminal_coord < 0 && node.infosets.empty())
      throw SequenceFormError("agent " + std::to_string(agent) +
                              " sequence " + chain_text(node.chain) +
                              " is neither terminal nor extended by any "
                              "information set");
  }
  return lat;
}

// Fill each node's canonical weight expression: its own coordinate when
// terminal, otherwise the sum over its first infoset's extensions. Child
// chains are strictly longer, so the recursion terminates.
void compute_reps(SequenceLattice& lat, int m) {
  std::vector<char> done(lat.nodes.size(), 0);
  std::function<const VectorXd&(int)> rep = [&](int n) -> const VectorXd& {
    auto& node = lat.nodes[static_cast<std::size_t>(n)];
    if (!done[static_cast<std::size_t>(n)]) {
      VectorXd r = VectorXd::Zero(m);
      if (node.terminal_coord >= 0) {
        r(node.terminal_coord) = 1.0;
      } else {
        for (int child : node.children.front()) r += rep(child);
      }
      node.rep = std::move(r);
      done[static_cast<std::size_t>(n)] = 1;
    }
    return node.rep;
  };
  for (int n = 0; n < static_cast<int>(lat.nodes.size()); ++n) rep(n);
}

// Rows tying every extra representation of a sequence's weight to the
// canonical one, plus one normalization row pinning the root weight to 1.
void agent_rows(const SequenceLattice& lat, int m,
                std::vector<RowVectorXd>* rows, std::vector<double>* rhs) {
  for (const auto& node : lat.nodes) {
    std::vector<RowVectorXd> reps;
    if (node.terminal_coord >= 0) {
      RowVectorXd r = RowVectorXd::Zero(m);
      r(node.terminal_coord) = 1.0;
      reps.push_back(std::move(r));
    }
    for (const auto& row : node.children) {
      RowVectorXd r = RowVectorXd::Zero(m);
      for (int child : row)
        r += lat.nodes[static_cast<std::size_t>(child)].rep.transpose();
      reps.push_back(std::move(r));
    }
    for (std::size_t j = 1; j < reps.size(); ++j) {
      rows->push_back(reps[j] - reps[0]);
      rhs->push_back(0.0);
    }
  }
  rows->push_back(
      lat.nodes[static_cast<std::size_t>(lat.root)].rep.transpose());
  rhs->push_back(1.0);
}

// Least-norm multipliers for projecting w onto the affine set
// {A x = b, x_i = eps for active i}; returns the projected point and,
// optionally, the bound multipliers.
VectorXd solve_pinned(const MatrixXd& A, const VectorXd& b, const VectorXd& w,
                      double eps, const std::vector<char>& active,
                      VectorXd* bound_mults) {
  const int m = static_cast<int>(w.size());
  const int ra = static_cast<int>(A.rows());
  int na = 0;
  for (char f : active) na += f ? 1 : 0;
  MatrixXd M(ra + na, m);
  VectorXd rhs(ra + na);
  M.topRows(ra) = A;
  rhs.head(ra) = b;
  int r = ra;
  for (int i = 0; i < m; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    M.row(r).setZero();
    M(r, i) = 1.0;
    rhs(r) = eps;
    ++r;
  }
  auto normal = (M * M.transpose()).completeOrthogonalDecomposition();
  VectorXd y = normal.solve(rhs - M * w);
  VectorXd x = w + M.transpose() * y;
  // one refinement pass: when w is far away the correction above cancels
  // against w and leaves an equality residual proportional to |w|
  VectorXd dy = normal.solve(rhs - M * x);
  y += dy;
  x += M.transpose() * dy;
  if (bound_mults) *bound_mults = y.tail(na);
  return x;
}

double pinned_residual(const MatrixXd& A, const VectorXd& b, const VectorXd& x,
                       double eps, const std::vector<char>& active) {
  double res = (A * x - b).lpNorm<Eigen::Infinity>();
  for (int i = 0; i < static_cast<int>(x.size()); ++i)
    if (active[static_cast<std::size_t>(i)])
      res = std::max(res, std::abs(x(i) - eps));
  return res;
}

// Max of (equality violation, bound violation, stationarity residual,
// multiplier sign violation) at x; the certificate that x is the projection.
// Terms that grow with the gradient x - w are measured relative to its size,
// so far-away inputs are not failed on roundoff alone.
double kkt_residual(const MatrixXd& A, const VectorXd& b, const VectorXd& w,
                    double eps, const VectorXd& x) {
  const int m = static_cast<int>(x.size());
  double res = (A * x - b).lpNorm<Eigen::Infinity>();
  res = std::max(res, std::max(0.0, eps - x.minCoeff()));
  std::vector<char> active(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i)
    active[static_cast<std::size_t>(i)] = x(i) <= eps + 1e-10 ? 1 : 0;
  const int ra = static_cast<int>(A.rows());
  int na = 0;
  for (char f : active) na += f ? 1 : 0;
  MatrixXd M(ra + na, m);
  M.topRows(ra) = A;
  int r = ra;
  for (int i = 0; i < m; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    M.row(r).setZero();
    M(r, i) = 1.0;
    ++r;
  }
  VectorXd y = M.transpose()
                   .completeOrthogonalDecomposition()
                   .solve(x - w);
  double grad = std::max(1.0, (x - w).lpNorm<Eigen::Infinity>());
  res = std::max(res,
                 (x - w - M.transpose() * y).lpNorm<Eigen::Infinity>() / grad);
  if (na > 0)
    res = std::max(res, std::max(0.0, -y.tail(na).minCoeff() / grad));
  return res;
}

VectorXd dykstra_project(const MatrixXd& A, const VectorXd& b,
                         const VectorXd& w, double eps) {
  auto aat = (A * A.transpose()).completeOrthogonalDecomposition();
  auto proj_affine = [&](const VectorXd& v) -> VectorXd {
    return v - A.transpose() * aat.solve(A * v - b);
  };
  VectorXd x = w;
  VectorXd p = VectorXd::Zero(w.size());
  VectorXd q = VectorXd::Zero(w.size());
  for (int it = 0; it < 10000; ++it) {
    VectorXd y = proj_affine(x + p);
    p = x + p - y;
    VectorXd t = y + q;
    VectorXd xn = t.cwiseMax(eps);
    q = t - xn;
    double move = (xn - x).lpNorm<Eigen::Infinity>();
    x = std::move(xn);
    if (move < 1e-15 && (A * x - b).lpNorm<Eigen::Infinity>() < 1e-11) break;
  }
  return x;
}

// Euclidean projection of one agent slice by a primal active-set method.
// `active` carries the warm-start working set and is updated in place so the
// caller can reuse it. Falls back to alternating projections when the
// active-set loop stalls; a final certificate check guards both paths.
VectorXd project_slice(const MatrixXd& A, const VectorXd& b, const VectorXd& w,
                       double eps, VectorXd x, std::vector<char> active) {
  const int m = static_cast<int>(w.size());
  const int cap = 100 * m + 100;
  bool trimmed_hint = false;
  for (int it = 0; it < cap; ++it) {
    VectorXd mults;
    VectorXd target = solve_pinned(A, b, w, eps, active, &mults);
    double span = std::max(1.0, target.lpNorm<Eigen::Infinity>());
    if (pinned_residual(A, b, target, eps, active) > 1e-9 * span) {
      // A hinted working set can pin an infeasible combination; keep only
      // the bounds the current point actually sits on.
      if (!trimmed_hint) {
        for (int i = 0; i < m; ++i)
          if (active[static_cast<std::size_t>(i)] && x(i) > eps + 1e-10)
            active[static_cast<std::size_t>(i)] = 0;
        trimmed_hint = true;
        continue;
      }
      break;
    }
    VectorXd p = target - x;
    if (p.lpNorm<Eigen::Infinity>() <= 1e-13) {
      // multipliers scale with the gradient, so judge their sign relative
      // to it
      double grad = std::max(1.0, (w - target).lpNorm<Eigen::Infinity>());
      int worst = -1;
      double worst_val = -1e-10 * grad;
      int r = 0;
      for (int i = 0; i < m; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        if (mults(r) < worst_val) {
          worst_val = mults(r);
          worst = i;
        }
        ++r;
      }
      if (worst < 0) {
        for (int i = 0; i < m; ++i)
          if (active[static_cast<std::size_t>(i)]) target(i) = eps;
        return target;
      }
      active[static_cast<std::size_t>(worst)] = 0;
      continue;
    }
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < m; ++i) {
      if (active[static_cast<std::size_t>(i)] || p(i) >= -1e-15) continue;
      double ratio = (eps - x(i)) / p(i);
      if (ratio < alpha) {
        alpha = ratio;
        blocker = i;
      }
    }
    if (alpha < 0.0) alpha = 0.0;
    if (blocker < 0) {
      x = std::move(target);
    } else {
      x += alpha * p;
      x(blocker) = eps;
      active[static_cast<std::size_t>(blocker)] = 1;
    }
  }

  x = dykstra_project(A, b, w, eps);
  std::vector<char> final_active(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i)
    final_active[static_cast<std::size_t>(i)] = x(i) <= eps + 1e-8 ? 1 : 0;
  VectorXd mults;
  VectorXd polished = solve_pinned(A, b, w, eps, final_active, &mults);
  double grad = std::max(1.0, (w - polished).lpNorm<Eigen::Infinity>());
  if (pinned_residual(A, b, polished, eps, final_active) <= 1e-9 &&
      polished.minCoeff() >= eps - 1e-12 &&
      (mults.size() == 0 || mults.minCoeff() >= -1e-9 * grad)) {
    for (int i = 0; i < m; ++i)
      if (final_active[static_cast<std::size_t>(i)]) polished(i) = eps;
    x = std::move(polished);
  }
  if (kkt_residual(A, b, w, eps, x) > 1e-9)
    throw SequenceFormError("polytope projection failed to converge");
  return x;
}

// Concave piecewise-linear function: value v0 at x0, then segments of
// (width, slope) with non-increasing slopes.
struct Piecewise {
  double x0 = 0.0;
  double v0 = 0.0;
  std::vector<std::pair<double, double>> segs;
};

double pl_eval(const Piecewise& f, double t) {
  double v = f.v0;
  double rem = t - f.x0;
  for (auto [w, s] : f.segs) {
    if (rem <= 0.0) break;
    double d = std::min(rem, w);
    v += d * s;
    rem -= d;
  }
  return v;
}

void pl_sort_and_trim(Piecewise* f, double cap) {
  std::stable_sort(f->segs.begin(), f->segs.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  double budget = cap - f->x0;
  std::vector<std::pair<double, double>> out;
  for (auto [w, s] : f->segs) {
    if (budget <= 0.0) break;
    double d = std::min(w, budget);
    if (d > 0.0) out.emplace_back(d, s);
    budget -= d;
  }
  f->segs = std::move(out);
}

// Max over splittings t = sum t_a with each t_a in part a's domain: add the
// starting points and greedily take the steepest remaining segments.
Piecewise pl_sup_convolve(const std::vector<Piecewise>& parts, double cap) {
  Piecewise out;
  for (const auto& f : parts) {
    out.x0 += f.x0;
    out.v0 += f.v0;
    out.segs.insert(out.segs.end(), f.segs.begin(), f.segs.end());
  }
  pl_sort_and_trim(&out, cap);
  return out;
}

// Pointwise sum of several concave functions over [lo, cap], resampled on
// the union of their breakpoints.
Piecewise pl_sum(const std::vector<Piecewise>& parts, double lo, double cap) {
  std::vector<double> grid{lo, cap};
  for (const auto& f : parts) {
    double x = f.x0;
    for (auto [w, s] : f.segs) {
      x += w;
      if (x > lo + 1e-15 && x < cap - 1e-15) grid.push_back(x);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) {
                           return std::abs(a - b) <= 1e-15;
                         }),
             grid.end());
  std::vector<double> vals(grid.size(), 0.0);
  for (const auto& f : parts)
    for (std::size_t g = 0; g < grid.size(); ++g) vals[g] += pl_eval(f, grid[g]);
  Piecewise out;
  out.x0 = lo;
  out.v0 = vals[0];
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    double w = grid[g + 1] - grid[g];
    if (w <= 0.0) continue;
    out.segs.emplace_back(w, (vals[g + 1] - vals[g]) / w);
  }
  pl_sort_and_trim(&out, cap);
  return out;
}

void pl_add_linear(Piecewise* f, double coef) {
  f->v0 += coef * f->x0;
  for (auto& seg : f->segs) seg.second += coef;
}

}  // namespace

SequenceFormSpace build_space(std::vector<AgentCatalog> catalogs,
                              double epsilon) {
  if (!(epsilon >= 0.0))
    throw SequenceFormError("perturbation floor must be non-negative");
  SequenceFormSpace space;
  space.epsilon = epsilon;

  const int agents = static_cast<int>(catalogs.size());
  if (agents == 0) throw SequenceFormError("no agents");
  std::vector<int> lengths(static_cast<std::size_t>(agents));
  for (int n = 0; n < agents; ++n) {
    const AgentCatalog& cat = catalogs[static_cast<std::size_t>(n)];
    if (cat.terminal_sequences.empty())
      throw SequenceFormError("agent " + std::to_string(n) +
                              " has no terminal sequences");
    for (int k = 0; k < static_cast<int>(cat.infosets.size()); ++k) {
      if (cat.infosets[static_cast<std::size_t>(k)].actions < 1)
        throw SequenceFormError("agent " + std::to_string(n) +
                                " information set " + std::to_string(k) +
                                " has no actions");
      validate_chain(cat, cat.infosets[static_cast<std::size_t>(k)].history,
                     n, "information set history");
    }
    for (const Chain& chain : cat.terminal_sequences)
      validate_chain(cat, chain, n, "terminal sequence");
    lengths[static_cast<std::size_t>(n)] =
        static_cast<int>(cat.terminal_sequences.size());
  }

  space.ix = AgentIndexing::from_lengths(lengths);
  space.catalogs = std::move(catalogs);

  std::vector<std::vector<RowVectorXd>> rows(
      static_cast<std::size_t>(agents));
  std::vector<std::vector<double>> rhs(static_cast<std::size_t>(agents));
  int total_rows = 0;
  for (int n = 0; n < agents; ++n) {
    SequenceLattice lat =
        build_lattice(space.catalogs[static_cast<std::size_t>(n)], n);
    compute_reps(lat, space.ix.length(n));
    agent_rows(lat, space.ix.length(n), &rows[static_cast<std::size_t>(n)],
               &rhs[static_cast<std::size_t>(n)]);
    space.lattices.push_back(std::move(lat));
    total_rows += static_cast<int>(rows[static_cast<std::size_t>(n)].size());
  }

  space.C = MatrixXd::Zero(total_rows, space.ix.total_dim);
  space.c = VectorXd::Zero(total_rows);
  int r0 = 0;
  for (int n = 0; n < agents; ++n) {
    space.row_offset.push_back(r0);
    space.row_count.push_back(
        static_cast<int>(rows[static_cast<std::size_t>(n)].size()));
    for (std::size_t j = 0; j < rows[static_cast<std::size_t>(n)].size();
         ++j) {
      space.C.block(r0, space.ix.offset(n), 1, space.ix.length(n)) =
          rows[static_cast<std::size_t>(n)][j];
      space.c(r0) = rhs[static_cast<std::size_t>(n)][j];
      ++r0;
    }
  }

  space.uniform_plan = VectorXd::Zero(space.ix.total_dim);
  for (int n = 0; n < agents; ++n) {
    const AgentCatalog& cat = space.catalogs[static_cast<std::size_t>(n)];
    for (int t = 0; t < space.ix.length(n); ++t) {
      double p = 1.0;
      for (auto [i, a] : cat.terminal_sequences[static_cast<std::size_t>(t)])
        p /= cat.infosets[static_cast<std::size_t>(i)].actions;
      space.uniform_plan(space.ix.offset(n) + t) = p;
    }
  }
  if (space.uniform_plan.minCoeff() < epsilon)
    throw SequenceFormError(
        "perturbation floor leaves no room for the uniform plan; lower "
        "epsilon below " +
        std::to_string(space.uniform_plan.minCoeff()));
  return space;
}

Eigen::VectorXd behavior_to_plan(const SequenceFormSpace& space,
                                 const BehaviorProfile& behavior) {
  const int agents = space.agents();
  if (static_cast<int>(behavior.probs.size()) != agents)
    throw SequenceFormError("behavior profile has the wrong agent count");
  VectorXd sigma = VectorXd::Zero(space.ix.total_dim);
  for (int n = 0; n < agents; ++n) {
    const AgentCatalog& cat = space.catalogs[static_cast<std::size_t>(n)];
    const auto& bn = behavior.probs[static_cast<std::size_t>(n)];
    if (bn.size() != cat.infosets.size())
      throw SequenceFormError("agent " + std::to_string(n) +
                              " behavior has the wrong information set "
                              "count");
    for (std::size_t k = 0; k < bn.size(); ++k)
      if (bn[k].size() != cat.infosets[k].actions)
        throw SequenceFormError("agent " + std::to_string(n) +
                                " behavior at information set " +
                                std::to_string(k) +
                                " has the wrong action count");
    for (int t = 0; t < space.ix.length(n); ++t) {
      double p = 1.0;
      for (auto [i, a] : cat.terminal_sequences[static_cast<std::size_t>(t)])
        p *= bn[static_cast<std::size_t>(i)](a);
      sigma(space.ix.offset(n) + t) = p;
    }
  }
  return sigma;
}

BehaviorResult plan_to_behavior(const SequenceFormSpace& space,
                                const Eigen::VectorXd& sigma) {
  if (sigma.size() != space.ix.total_dim)
    throw SequenceFormError("plan has the wrong dimension");
  BehaviorResult out;
  out.behavior.probs.resize(static_cast<std::size_t>(space.agents()));
  for (int n = 0; n < space.agents(); ++n) {
    const AgentCatalog& cat = space.catalogs[static_cast<std::size_t>(n)];
    const SequenceLattice& lat = space.lattices[static_cast<std::size_t>(n)];
    auto& bn = out.behavior.probs[static_cast<std::size_t>(n)];
    bn.resize(cat.infosets.size());
    VectorXd slice = sigma.segment(space.ix.offset(n), space.ix.length(n));
    for (const auto& node : lat.nodes) {
      double denom = node.rep.dot(slice);
      for (std::size_t j = 0; j < node.infosets.size(); ++j) {
        int k = node.infosets[j];
        const auto& row = node.children[j];
        VectorXd b(static_cast<int>(row.size()));
        if (denom > 1e-300) {
          for (std::size_t a = 0; a < row.size(); ++a)
            b(static_cast<int>(a)) =
                lat.nodes[static_cast<std::size_t>(row[a])].rep.dot(slice) /
                denom;
        } else {
          b.setConstant(1.0 / static_cast<double>(row.size()));
          out.well_defined = false;
        }
        bn[static_cast<std::size_t>(k)] = std::move(b);
      }
    }
  }
  return out;
}

Retraction retract_polytope(const SequenceFormSpace& space,
                            const Eigen::VectorXd& w,
                            const SupportSignature* hint) {
  if (w.size() != space.ix.total_dim)
    throw SequenceFormError("point has the wrong dimension");
  VectorXd sigma(space.ix.total_dim);
  for (int n = 0; n < space.agents(); ++n) {
    const int m = space.ix.length(n);
    const int off = space.ix.offset(n);
    MatrixXd A = space.C.block(space.row_offset[static_cast<std::size_t>(n)],
                               off,
                               space.row_count[static_cast<std::size_t>(n)],
                               m);
    VectorXd b = space.c.segment(
        space.row_offset[static_cast<std::size_t>(n)],
        space.row_count[static_cast<std::size_t>(n)]);
    std::vector<char> active(static_cast<std::size_t>(m), 0);
    if (hint && hint->size() == space.ix.total_dim)
      for (int i = 0; i < m; ++i)
        active[static_cast<std::size_t>(i)] = hint->test(off + i) ? 0 : 1;
    sigma.segment(off, m) =
        project_slice(A, b, w.segment(off, m), space.epsilon,
                      space.uniform_plan.segment(off, m), std::move(active));
  }
  Retraction r;
  r.sigma = std::move(sigma);
  r.signature = signature_of(r.sigma, space.epsilon);
  return r;
}

Eigen::MatrixXd polytope_retraction_jacobian(const SequenceFormSpace& space,
                                             const SupportSignature& sig) {
  if (sig.size() != space.ix.total_dim)
    throw SequenceFormError("signature has the wrong dimension");
  MatrixXd P = MatrixXd::Zero(space.ix.total_dim, space.ix.total_dim);
  for (int n = 0; n < space.agents(); ++n) {
    const int m = space.ix.length(n);
    const int off = space.ix.offset(n);
    const int ra = space.row_count[static_cast<std::size_t>(n)];
    int na = 0;
    for (int i = 0; i < m; ++i) na += sig.test(off + i) ? 0 : 1;
    MatrixXd M(ra + na, m);
    M.topRows(ra) =
        space.C.block(space.row_offset[static_cast<std::size_t>(n)], off, ra,
                      m);
    int r = ra;
    for (int i = 0; i < m; ++i) {
      if (sig.test(off + i)) continue;
      M.row(r).setZero();
      M(r, i) = 1.0;
      ++r;
    }
    P.block(off, off, m, m) =
        MatrixXd::Identity(m, m) -
        M.completeOrthogonalDecomposition().pseudoInverse() * M;
  }
  return P;
}

double epsilon_best_response(const SequenceFormSpace& space, int agent,
                             const Eigen::VectorXd& cost) {
  const SequenceLattice& lat =
      space.lattices[static_cast<std::size_t>(agent)];
  if (cost.size() != space.ix.length(agent))
    throw SequenceFormError("cost vector has the wrong dimension");
  const double eps = space.epsilon;
  const double cap = 1.0;

  // Bottom-up over the lattice: each infoset hosted at a sequence splits the
  // sequence's weight among its extensions (a max-convolution), independent
  // infosets at the same sequence add, and a terminal coordinate adds a
  // linear payoff term.
  std::function<Piecewise(int)> node_fn = [&](int n) -> Piecewise {
    const auto& node = lat.nodes[static_cast<std::size_t>(n)];
    double lo = node.terminal_coord >= 0 ? eps : 0.0;
    std::vector<Piecewise> per_infoset;
    for (const auto& row : node.children) {
      std::vector<Piecewise> parts;
      parts.reserve(row.size());
      for (int child : row) parts.push_back(node_fn(child));
      Piecewise g = pl_sup_convolve(parts, cap);
      lo = std::max(lo, g.x0);
      per_infoset.push_back(std::move(g));
    }
    Piecewise out;
    if (per_infoset.empty()) {
      out.x0 = lo;
      out.v0 = 0.0;
      out.segs.emplace_back(cap - lo, 0.0);
    } else {
      out = pl_sum(per_infoset, lo, cap);
    }
    if (node.terminal_coord >= 0)
      pl_add_linear(&out, cost(node.terminal_coord));
    return out;
  };

  Piecewise root = node_fn(lat.root);
  if (root.x0 > cap + 1e-12)
    throw SequenceFormError("perturbation floor is infeasible for agent " +
                            std::to_string(agent));
  return pl_eval(root, cap);
}

std::vector<double> SequenceViewBase::regret(
    const Eigen::VectorXd& sigma) const {
  VectorXd v = deviation(sigma);
  std::vector<double> out(static_cast<std::size_t>(space_.ix.agents()));
  for (int n = 0; n < space_.ix.agents(); ++n) {
    const int off = space_.ix.offset(n);
    const int len = space_.ix.length(n);
    double current = sigma.segment(off, len).dot(v.segment(off, len));
    out[static_cast<std::size_t>(n)] =
        epsilon_best_response(space_, n, v.segment(off, len)) - current;
  }
  return out;
}

}  // namespace gtsolve
