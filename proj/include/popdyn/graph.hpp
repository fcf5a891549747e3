#pragma once

// Row-stochastic influence matrices and the structural queries the
// convergence conditions need (reachability, aperiodicity).

#include <cstdint>
#include <set>
#include <vector>

#include "popdyn/matrix.hpp"

namespace popdyn {

inline constexpr double kRowSumTolerance = 1e-12;

/// Nonnegative square matrix whose rows each sum to 1 within kRowSumTolerance.
/// Immutable once built.
class RowStochasticMatrix {
 public:
  /// Validates without rescaling. Throws NonSquare, NegativeEntry, ZeroRow or
  /// InvalidArgument (row sum off by more than kRowSumTolerance).
  static RowStochasticMatrix validated(Matrix m);

  std::size_t n() const noexcept { return m_.rows(); }
  double operator()(std::size_t v, std::size_t w) const noexcept { return m_(v, w); }
  const Matrix& matrix() const noexcept { return m_; }
  bool has_edge(std::size_t v, std::size_t w) const noexcept { return m_(v, w) > 0.0; }

  bool operator==(const RowStochasticMatrix&) const = default;

 private:
  explicit RowStochasticMatrix(Matrix m) : m_(std::move(m)) {}
  friend RowStochasticMatrix build_row_stochastic(const Matrix& raw);
  Matrix m_;
};

using NodeSet = std::set<std::size_t>;

/// Divides every row by its sum.
RowStochasticMatrix build_row_stochastic(const Matrix& raw);

/// Directed G(n, p) without self-loops; a node left with no out-edge gets a
/// self-loop. Rows are uniform over present edges.
RowStochasticMatrix erdos_renyi(std::size_t n, double p, std::uint64_t seed);

/// Nodes with a directed path (possibly empty) into `targets`.
NodeSet reaching_set(const RowStochasticMatrix& p, const NodeSet& targets);

/// Nodes reachable from `v` along edges of `p`, including `v`.
NodeSet reachable_from(const RowStochasticMatrix& p, std::size_t v);

/// Period of `v` (gcd of cycle lengths through it); 0 when `v` lies on no cycle.
std::size_t node_period(const RowStochasticMatrix& p, std::size_t v);

/// True iff the period of `v` is 1. A node on no cycle is not aperiodic.
bool is_aperiodic_node(const RowStochasticMatrix& p, std::size_t v);

/// Number of closed communicating classes; equals the multiplicity of the
/// eigenvalue 1.
std::size_t closed_class_count(const RowStochasticMatrix& p);

}  // namespace popdyn
