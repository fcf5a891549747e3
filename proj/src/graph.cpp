#include "popdyn/graph.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <string>

#include "popdyn/error.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {
namespace {

void check_entries(const Matrix& m) {
  if (!m.square() || m.rows() == 0) {
    throw Error(ErrorCode::NonSquare, "influence matrix must be square and nonempty, got " +
                                          std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()));
  }
  for (std::size_t v = 0; v < m.rows(); ++v) {
    for (std::size_t w = 0; w < m.cols(); ++w) {
      const double x = m(v, w);
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::InvalidArgument,
                    "non-finite entry at (" + std::to_string(v) + "," + std::to_string(w) + ")");
      }
      if (x < 0.0) {
        throw Error(ErrorCode::NegativeEntry,
                    "negative entry at (" + std::to_string(v) + "," + std::to_string(w) + ")");
      }
    }
  }
}

double row_sum(const Matrix& m, std::size_t v) {
  double s = 0.0;
  for (double x : m.row(v)) s += x;
  return s;
}

}  // namespace

RowStochasticMatrix RowStochasticMatrix::validated(Matrix m) {
  check_entries(m);
  for (std::size_t v = 0; v < m.rows(); ++v) {
    const double s = row_sum(m, v);
    if (s == 0.0) throw Error(ErrorCode::ZeroRow, "row " + std::to_string(v) + " is all zero");
    if (std::fabs(s - 1.0) > kRowSumTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "row " + std::to_string(v) + " sums to " + std::to_string(s) + ", not 1");
    }
  }
  return RowStochasticMatrix(std::move(m));
}

RowStochasticMatrix build_row_stochastic(const Matrix& raw) {
  check_entries(raw);
  Matrix m = raw;
  for (std::size_t v = 0; v < m.rows(); ++v) {
    const double s = row_sum(m, v);
    if (s == 0.0) throw Error(ErrorCode::ZeroRow, "row " + std::to_string(v) + " is all zero");
    for (double& x : m.row(v)) x /= s;
  }
  return RowStochasticMatrix(std::move(m));
}

RowStochasticMatrix erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "erdos_renyi: n must be positive");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "erdos_renyi: p must lie in [0,1]");
  }
  Rng rng(seed);
  Matrix adj(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    bool any = false;
    for (std::size_t w = 0; w < n; ++w) {
      if (w == v) continue;
      if (rng.bernoulli(p)) {
        adj(v, w) = 1.0;
        any = true;
      }
    }
    if (!any) adj(v, v) = 1.0;
  }
  return build_row_stochastic(adj);
}

NodeSet reaching_set(const RowStochasticMatrix& p, const NodeSet& targets) {
  if (targets.empty()) throw Error(ErrorCode::EmptyTargets, "reaching_set: no targets");
  const std::size_t n = p.n();
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> queue;
  for (auto t : targets) {
    if (t >= n) throw Error(ErrorCode::IndexOutOfRange, "reaching_set: target out of range");
    seen[t] = 1;
    queue.push_back(t);
  }
  // Walk edges backwards: v joins when v -> w for some w already in the set.
  while (!queue.empty()) {
    const auto w = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && p.has_edge(v, w)) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
  NodeSet out;
  for (std::size_t v = 0; v < n; ++v)
    if (seen[v]) out.insert(v);
  return out;
}

NodeSet reachable_from(const RowStochasticMatrix& p, std::size_t v) {
  const std::size_t n = p.n();
  if (v >= n) throw Error(ErrorCode::IndexOutOfRange, "reachable_from: node out of range");
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> queue{v};
  seen[v] = 1;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (std::size_t w = 0; w < n; ++w) {
      if (!seen[w] && p.has_edge(u, w)) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  NodeSet out;
  for (std::size_t u = 0; u < n; ++u)
    if (seen[u]) out.insert(u);
  return out;
}

std::size_t node_period(const RowStochasticMatrix& p, std::size_t v) {
  const std::size_t n = p.n();
  if (v >= n) throw Error(ErrorCode::IndexOutOfRange, "node_period: node out of range");

  const NodeSet fwd = reachable_from(p, v);
  const NodeSet bwd = reaching_set(p, {v});
  std::vector<char> in_scc(n, 0);
  for (auto u : fwd)
    if (bwd.contains(u)) in_scc[u] = 1;

  // BFS levels inside the component; every intra-component edge u -> w closes
  // a cycle whose length is congruent to level(u) + 1 - level(w) mod period.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(n, kUnset);
  std::deque<std::size_t> queue{v};
  level[v] = 0;
  std::size_t g = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (std::size_t w = 0; w < n; ++w) {
      if (!in_scc[w] || !p.has_edge(u, w)) continue;
      if (level[w] == kUnset) {
        level[w] = level[u] + 1;
        queue.push_back(w);
      } else {
        const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[w]);
        g = std::gcd(g, static_cast<std::size_t>(diff < 0 ? -diff : diff));
      }
    }
  }
  return g;
}

bool is_aperiodic_node(const RowStochasticMatrix& p, std::size_t v) {
  return node_period(p, v) == 1;
}

std::size_t closed_class_count(const RowStochasticMatrix& p) {
  const std::size_t n = p.n();
  // Tarjan's strongly connected components.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  int counter = 0;
  int ncomp = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t u) {
    index[u] = low[u] = counter++;
    stack.push_back(u);
    on_stack[u] = 1;
    for (std::size_t w = 0; w < n; ++w) {
      if (!p.has_edge(u, w)) continue;
      if (index[w] < 0) {
        visit(w);
        low[u] = std::min(low[u], low[w]);
      } else if (on_stack[w]) {
        low[u] = std::min(low[u], index[w]);
      }
    }
    if (low[u] == index[u]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp[w] = ncomp;
      } while (w != u);
      ++ncomp;
    }
  };
  for (std::size_t u = 0; u < n; ++u)
    if (index[u] < 0) visit(u);

  std::vector<char> leaks(static_cast<std::size_t>(ncomp), 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t w = 0; w < n; ++w)
      if (p.has_edge(u, w) && comp[u] != comp[w]) leaks[static_cast<std::size_t>(comp[u])] = 1;
  std::size_t closed = 0;
  for (char l : leaks) closed += l ? 0 : 1;
  return closed;
}

}  // namespace popdyn
