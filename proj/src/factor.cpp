#include "gtsolve/factor.hpp"

#include <algorithm>
#include <cmath>

namespace gtsolve {
namespace {

thread_local std::uint64_t op_count = 0;

// Walks the assignments of a union scope while tracking the linear index
// into a factor whose scope is a subset.
struct SubIndexer {
  std::vector<std::int64_t> stride;  // per union position, 0 if absent
  std::int64_t index = 0;

  SubIndexer(const Factor& f, const std::vector<int>& union_vars) {
    std::vector<std::int64_t> fs = f.strides();
    stride.assign(union_vars.size(), 0);
    for (std::size_t k = 0; k < union_vars.size(); ++k) {
      int pos = f.position(union_vars[k]);
      if (pos >= 0) stride[k] = fs[static_cast<std::size_t>(pos)];
    }
  }
};

}  // namespace

Factor Factor::unit(double value) {
  Factor f;
  f.table.resize(1);
  f.table(0) = value;
  return f;
}

Factor Factor::zeros(std::vector<int> vars, std::vector<int> cards) {
  Factor f;
  f.vars = std::move(vars);
  f.cards = std::move(cards);
  std::int64_t n = 1;
  for (int c : f.cards) n *= c;
  f.table = Eigen::VectorXd::Zero(n);
  validate_factor(f);
  return f;
}

bool Factor::has(int var) const { return position(var) >= 0; }

int Factor::position(int var) const {
  auto it = std::lower_bound(vars.begin(), vars.end(), var);
  if (it == vars.end() || *it != var) return -1;
  return static_cast<int>(it - vars.begin());
}

std::vector<std::int64_t> Factor::strides() const {
  std::vector<std::int64_t> s(vars.size());
  std::int64_t acc = 1;
  for (int k = static_cast<int>(vars.size()) - 1; k >= 0; --k) {
    s[static_cast<std::size_t>(k)] = acc;
    acc *= cards[static_cast<std::size_t>(k)];
  }
  return s;
}

void validate_factor(const Factor& f) {
  if (f.vars.size() != f.cards.size())
    throw FactorError("scope and cardinality lists differ in length");
  for (std::size_t k = 0; k + 1 < f.vars.size(); ++k)
    if (f.vars[k] >= f.vars[k + 1])
      throw FactorError("scope variables must be sorted and distinct");
  std::int64_t n = 1;
  for (int c : f.cards) {
    if (c < 1) throw FactorError("cardinalities must be positive");
    n *= c;
  }
  if (f.table.size() != n) throw FactorError("table length mismatch");
}

Factor product(const Factor& a, const Factor& b) {
  std::vector<int> uv;
  std::vector<int> uc;
  std::size_t ia = 0, ib = 0;
  while (ia < a.vars.size() || ib < b.vars.size()) {
    if (ib == b.vars.size() ||
        (ia < a.vars.size() && a.vars[ia] < b.vars[ib])) {
      uv.push_back(a.vars[ia]);
      uc.push_back(a.cards[ia]);
      ++ia;
    } else if (ia == a.vars.size() || b.vars[ib] < a.vars[ia]) {
      uv.push_back(b.vars[ib]);
      uc.push_back(b.cards[ib]);
      ++ib;
    } else {
      if (a.cards[ia] != b.cards[ib])
        throw FactorError("shared variable with mismatched cardinality");
      uv.push_back(a.vars[ia]);
      uc.push_back(a.cards[ia]);
      ++ia;
      ++ib;
    }
  }
  Factor out = Factor::zeros(uv, uc);
  SubIndexer sa(a, uv);
  SubIndexer sb(b, uv);
  const int width = static_cast<int>(uv.size());
  std::vector<int> asgn(static_cast<std::size_t>(width), 0);
  std::int64_t pa = 0, pb = 0;
  for (std::int64_t i = 0; i < out.table.size(); ++i) {
    out.table(i) = a.table(pa) * b.table(pb);
    for (int k = width - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++asgn[ku] < uc[ku]) {
        pa += sa.stride[ku];
        pb += sb.stride[ku];
        break;
      }
      asgn[ku] = 0;
      pa -= sa.stride[ku] * (uc[ku] - 1);
      pb -= sb.stride[ku] * (uc[ku] - 1);
    }
  }
  op_count += static_cast<std::uint64_t>(out.table.size());
  return out;
}

Factor marginalize(const Factor& f, const std::vector<int>& keep) {
  std::vector<int> kv;
  std::vector<int> kc;
  for (std::size_t k = 0; k < f.vars.size(); ++k) {
    if (std::find(keep.begin(), keep.end(), f.vars[k]) != keep.end()) {
      kv.push_back(f.vars[k]);
      kc.push_back(f.cards[k]);
    }
  }
  Factor out = Factor::zeros(kv, kc);
  SubIndexer so(out, f.vars);
  const int width = static_cast<int>(f.vars.size());
  std::vector<int> asgn(static_cast<std::size_t>(width), 0);
  std::int64_t po = 0;
  for (std::int64_t i = 0; i < f.table.size(); ++i) {
    out.table(po) += f.table(i);
    for (int k = width - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++asgn[ku] < f.cards[ku]) {
        po += so.stride[ku];
        break;
      }
      asgn[ku] = 0;
      po -= so.stride[ku] * (f.cards[ku] - 1);
    }
  }
  op_count += static_cast<std::uint64_t>(f.table.size());
  return out;
}

Factor divide(const Factor& a, const Factor& b) {
  for (int v : b.vars)
    if (!a.has(v))
      throw FactorError("divisor scope must be contained in the dividend");
  Factor out = a;
  SubIndexer sb(b, a.vars);
  const int width = static_cast<int>(a.vars.size());
  std::vector<int> asgn(static_cast<std::size_t>(width), 0);
  std::int64_t pb = 0;
  for (std::int64_t i = 0; i < a.table.size(); ++i) {
    double d = b.table(pb);
    out.table(i) = std::abs(d) < 1e-300 ? 0.0 : a.table(i) / d;
    for (int k = width - 1; k >= 0; --k) {
      auto ku = static_cast<std::size_t>(k);
      if (++asgn[ku] < a.cards[ku]) {
        pb += sb.stride[ku];
        break;
      }
      asgn[ku] = 0;
      pb -= sb.stride[ku] * (a.cards[ku] - 1);
    }
  }
  op_count += static_cast<std::uint64_t>(a.table.size());
  return out;
}

std::uint64_t factor_op_count() { return op_count; }

void reset_factor_op_count() { op_count = 0; }

}  // namespace gtsolve
