#pragma once

// State space and one-step update of the coupled attention dynamics:
//
//   x_v^(i)(t+1) = alpha_v * sum_w P_vw x_w^(i)(t) + beta_v * pi^(i)(t) + gamma_v * q^(i)
//
// with pi^(i)(t) the share of total attention held by influencer i.

#include <cstddef>
#include <cstdint>
#include <span>

#include "popdyn/graph.hpp"
#include "popdyn/matrix.hpp"

namespace popdyn {

inline constexpr double kWeightSumTolerance = 1e-12;
/// Below this every component of a weight vector counts as zero for regime detection.
inline constexpr double kZeroWeightCutoff = 1e-12;

/// Per-user weights on social influence (alpha), recommendations (beta) and
/// quality (gamma). Each triple is nonnegative and sums to 1.
class ModelParams {
 public:
  ModelParams(Vector alpha, Vector beta, Vector gamma);

  std::size_t n() const noexcept { return alpha_.size(); }
  const Vector& alpha() const noexcept { return alpha_; }
  const Vector& beta() const noexcept { return beta_; }
  const Vector& gamma() const noexcept { return gamma_; }

  bool operator==(const ModelParams&) const = default;

 private:
  Vector alpha_, beta_, gamma_;
};

bool all_zero(std::span<const double> weights, double cutoff = kZeroWeightCutoff) noexcept;

class QualityVector {
 public:
  explicit QualityVector(Vector q);

  std::size_t m() const noexcept { return q_.size(); }
  double operator[](std::size_t i) const noexcept { return q_[i]; }
  const Vector& values() const noexcept { return q_; }
  double total() const noexcept { return total_; }

  bool operator==(const QualityVector&) const = default;

 private:
  Vector q_;
  double total_ = 0.0;
};

/// Attention of n users to m influencers at time t, every entry in [0,1].
/// Stored influencer-major so each influencer's column is contiguous.
class AttentionState {
 public:
  /// `users_by_influencers` is n x m. An all-zero state is representable;
  /// popularity() rejects it.
  explicit AttentionState(const Matrix& users_by_influencers, std::int64_t t = 0);

  std::size_t users() const noexcept { return cols_.cols(); }
  std::size_t influencers() const noexcept { return cols_.rows(); }
  std::int64_t t() const noexcept { return t_; }

  double operator()(std::size_t v, std::size_t i) const noexcept { return cols_(i, v); }
  std::span<const double> column(std::size_t i) const noexcept { return cols_.row(i); }
  /// Contiguous m x n storage (row i = influencer i).
  const Matrix& by_influencer() const noexcept { return cols_; }

  Matrix users_by_influencers() const { return cols_.transposed(); }

  bool operator==(const AttentionState&) const = default;

  /// Empty 0 x 0 state; placeholder for reports.
  AttentionState() = default;

 private:
  friend AttentionState step(const AttentionState&, const ModelParams&,
                             const RowStochasticMatrix&, const QualityVector&);
  Matrix cols_;
  std::int64_t t_ = 0;
};

struct PopularityVector {
  Vector pi;
};

struct AttentionTotals {
  Vector z;
};

PopularityVector popularity(const AttentionState& state);

/// One synchronous update; popularity is read from `state` only.
AttentionState step(const AttentionState& state, const ModelParams& params,
                    const RowStochasticMatrix& p, const QualityVector& q);

AttentionTotals totals(const AttentionState& state);

/// z' = AP z + B 1 + q_tot (I - A - B) 1, the row-sum image of step().
AttentionTotals totals_step(const AttentionTotals& z, const ModelParams& params,
                            const RowStochasticMatrix& p, double q_tot);

/// (x^(i), pi^(i)) as an (n+1)-vector.
Vector augmented_state(const AttentionState& state, std::size_t i);

/// Dimension checks shared by the higher layers.
void check_dimensions(const ModelParams& params, const RowStochasticMatrix& p);
void check_dimensions(const AttentionState& state, const ModelParams& params,
                      const RowStochasticMatrix& p, const QualityVector& q);

}  // namespace popdyn
