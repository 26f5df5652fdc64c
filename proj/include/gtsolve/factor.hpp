#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gtsolve {

struct FactorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Table over a set of discrete variables. Scope ids are sorted ascending and
// the table is laid out with the last scope variable fastest.
struct Factor {
  std::vector<int> vars;
  std::vector<int> cards;
  Eigen::VectorXd table;

  // Scalar factor with empty scope.
  static Factor unit(double value = 1.0);
  // Zero table over the given sorted scope.
  static Factor zeros(std::vector<int> vars, std::vector<int> cards);

  int size() const { return static_cast<int>(table.size()); }
  bool has(int var) const;
  // Position of var in the scope, or -1.
  int position(int var) const;
  // Strides of each scope variable in table order (last fastest).
  std::vector<std::int64_t> strides() const;
};

// Throws unless vars are sorted, distinct, cards positive, and the table
// has the right length.
void validate_factor(const Factor& f);

Factor product(const Factor& a, const Factor& b);
// Sum out every variable not in `keep` (keep may list variables absent from
// the scope; they are ignored).
Factor marginalize(const Factor& f, const std::vector<int>& keep);
// Entry-wise a/b where b's scope must be a subset of a's; zero denominators
// yield zero (they only occur where the numerator is zero too).
Factor divide(const Factor& a, const Factor& b);

// Running count of table-cell operations performed by factor products,
// marginalizations, and divisions on this thread; cheap instrumentation for
// complexity measurements.
std::uint64_t factor_op_count();
void reset_factor_op_count();

}  // namespace gtsolve
