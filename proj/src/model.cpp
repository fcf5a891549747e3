#include "popdyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popdyn/error.hpp"
#include "popdyn/kernels.hpp"

namespace popdyn {
namespace {

void check_unit_interval(std::span<const double> v, const char* name) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] >= 0.0 && v[k] <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + "[" + std::to_string(k) +
                                                  "] = " + std::to_string(v[k]) +
                                                  " is outside [0,1]");
    }
  }
}

}  // namespace

ModelParams::ModelParams(Vector alpha, Vector beta, Vector gamma)
    : alpha_(std::move(alpha)), beta_(std::move(beta)), gamma_(std::move(gamma)) {
  if (alpha_.empty() || alpha_.size() != beta_.size() || alpha_.size() != gamma_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "alpha, beta, gamma must be nonempty and equal length");
  }
  check_unit_interval(alpha_, "alpha");
  check_unit_interval(beta_, "beta");
  check_unit_interval(gamma_, "gamma");
  for (std::size_t v = 0; v < alpha_.size(); ++v) {
    const double s = alpha_[v] + beta_[v] + gamma_[v];
    if (std::fabs(s - 1.0) > kWeightSumTolerance) {
      throw Error(ErrorCode::InvalidArgument, "alpha+beta+gamma for user " + std::to_string(v) +
                                                  " is " + std::to_string(s) + ", not 1");
    }
  }
}

bool all_zero(std::span<const double> weights, double cutoff) noexcept {
  return std::all_of(weights.begin(), weights.end(), [&](double w) { return w < cutoff; });
}

QualityVector::QualityVector(Vector q) : q_(std::move(q)) {
  if (q_.empty()) throw Error(ErrorCode::InvalidArgument, "quality vector is empty");
  check_unit_interval(q_, "quality");
  for (double x : q_) total_ += x;
}

AttentionState::AttentionState(const Matrix& users_by_influencers, std::int64_t t)
    : cols_(users_by_influencers.transposed()), t_(t) {
  if (users_by_influencers.rows() == 0 || users_by_influencers.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "attention state needs n >= 1 and m >= 1");
  }
  check_unit_interval(cols_.data(), "x");
}

PopularityVector popularity(const AttentionState& state) {
  const std::size_t m = state.influencers();
  PopularityVector out{Vector(m)};
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    out.pi[i] = kernels::sum(state.column(i));
    total += out.pi[i];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::ZeroTotalAttention, "total attention is zero at t=" +
                                                   std::to_string(state.t()),
                state.t());
  }
  for (auto& p : out.pi) p /= total;
  return out;
}

void check_dimensions(const ModelParams& params, const RowStochasticMatrix& p) {
  if (params.n() != p.n()) {
    throw Error(ErrorCode::DimensionMismatch, "params describe " + std::to_string(params.n()) +
                                                  " users but P is " + std::to_string(p.n()) +
                                                  "x" + std::to_string(p.n()));
  }
}

void check_dimensions(const AttentionState& state, const ModelParams& params,
                      const RowStochasticMatrix& p, const QualityVector& q) {
  check_dimensions(params, p);
  if (state.users() != p.n()) {
    throw Error(ErrorCode::DimensionMismatch, "state has " + std::to_string(state.users()) +
                                                  " users, P has " + std::to_string(p.n()));
  }
  if (state.influencers() != q.m()) {
    throw Error(ErrorCode::DimensionMismatch,
                "state has " + std::to_string(state.influencers()) + " influencers, quality has " +
                    std::to_string(q.m()));
  }
}

AttentionState step(const AttentionState& state, const ModelParams& params,
                    const RowStochasticMatrix& p, const QualityVector& q) {
  check_dimensions(state, params, p, q);
  const PopularityVector pi = popularity(state);
  const std::size_t n = state.users();
  const std::size_t m = state.influencers();
  const auto& kt = kernels::active();

  AttentionState next;
  next.cols_ = Matrix(m, n);
  next.t_ = state.t() + 1;
  Vector y(n);
  const Matrix& pm = p.matrix();
  for (std::size_t i = 0; i < m; ++i) {
    const auto col = state.column(i);
    for (std::size_t v = 0; v < n; ++v) y[v] = kt.dot(pm.row(v).data(), col.data(), n);
    auto out = next.cols_.row(i);
    kt.affine_update(params.alpha().data(), y.data(), params.beta().data(), pi.pi[i],
                     params.gamma().data(), q[i], out.data(), n);
    // Weights may sum to 1 +- 1e-12; keep the state inside the box.
    for (auto& x : out) x = std::clamp(x, 0.0, 1.0);
  }
  return next;
}

AttentionTotals totals(const AttentionState& state) {
  const std::size_t n = state.users();
  AttentionTotals out{Vector(n, 0.0)};
  for (std::size_t i = 0; i < state.influencers(); ++i) {
    const auto col = state.column(i);
    for (std::size_t v = 0; v < n; ++v) out.z[v] += col[v];
  }
  return out;
}

AttentionTotals totals_step(const AttentionTotals& z, const ModelParams& params,
                            const RowStochasticMatrix& p, double q_tot) {
  check_dimensions(params, p);
  if (z.z.size() != p.n()) {
    throw Error(ErrorCode::DimensionMismatch, "totals vector length differs from P");
  }
  const std::size_t n = p.n();
  const Vector pz = p.matrix() * z.z;
  AttentionTotals out{Vector(n)};
  kernels::active().affine_update(params.alpha().data(), pz.data(), params.beta().data(), 1.0,
                                  params.gamma().data(), q_tot, out.z.data(), n);
  return out;
}

Vector augmented_state(const AttentionState& state, std::size_t i) {
  if (i >= state.influencers()) {
    throw Error(ErrorCode::IndexOutOfRange, "influencer index " + std::to_string(i) +
                                                " out of range (m=" +
                                                std::to_string(state.influencers()) + ")");
  }
  const PopularityVector pi = popularity(state);
  Vector s(state.column(i).begin(), state.column(i).end());
  s.push_back(pi.pi[i]);
  return s;
}

}  // namespace popdyn
