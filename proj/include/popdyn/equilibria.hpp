#pragma once

// Closed-form limits and stability certificates for the four parameter regimes,
// plus the power-series machinery used by the consensus-functional bound.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "popdyn/graph.hpp"
#include "popdyn/model.hpp"

namespace popdyn {

enum class Regime {
  NoNetwork,         // alpha == 0
  NoQuality,         // gamma == 0
  NoRecommendation,  // beta == 0
  General,
};

std::string_view to_string(Regime r) noexcept;
std::optional<Regime> regime_from_string(std::string_view s) noexcept;

/// Every regime whose defining weight vector is zero (kZeroWeightCutoff), in
/// priority order; {General} when none is.
std::vector<Regime> matching_regimes(const ModelParams& params);
/// The single matching regime. Throws AmbiguousRegime when several match.
Regime classify_regime(const ModelParams& params);

/// diag(alpha) * P
Matrix influence_matrix(const ModelParams& params, const RowStochasticMatrix& p);

struct NoNetworkLimit {
  PopularityVector pi;
  Matrix x;  // users x influencers
};

NoNetworkLimit no_network_limit(const ModelParams& params, const QualityVector& q);

/// Contraction factor beta_bar / (beta_bar + (1 - beta_bar) q_tot) of the
/// scalar popularity recursion when alpha == 0.
double no_network_rate(const ModelParams& params, const QualityVector& q);

/// Limit of the attention totals: (I - AP)^{-1} (B + q_tot (I - A - B)) 1,
/// exactly 1 when gamma == 0.
Vector z_limit(const ModelParams& params, const RowStochasticMatrix& p, double q_tot);

struct AugmentedMatrices {
  Matrix u;  // (n+1) x (n+1)
  Vector c;  // n+1
};

/// U and c of the joint (attention, popularity) recursion evaluated at totals z.
/// The recursion s(t+1) = U s(t) + q c is exact when z = z(t+1).
AugmentedMatrices augmented_at(const ModelParams& params, const RowStochasticMatrix& p,
                               const AttentionTotals& z);

struct AugmentedSystem {
  Matrix u_tilde;
  Vector c_tilde;
  Vector z_star;
  double lambda1 = 0.0;  // spectral radius of AP
  double lambda2 = 0.0;  // largest subdominant eigenvalue magnitude of u_tilde
};

AugmentedSystem augmented_limit(const ModelParams& params, const RowStochasticMatrix& p,
                                double q_tot);

/// q^(i) (I - U~)^{-1} c~. Throws SingularSystem in the gamma == 0 regime.
Vector general_fixed_point(const AugmentedSystem& sys, const QualityVector& q, std::size_t i);

/// Equilibrium of the decoupled Friedkin-Johnsen dynamics when beta == 0:
/// q^(i) 1, cross-checked against the linear solve.
Vector fj_decoupled_fixed_point(const ModelParams& params, const RowStochasticMatrix& p,
                                const QualityVector& q, std::size_t i);

struct ConsensusOptions {
  std::size_t horizon = 100000;
  double tol = 1e-12;  // max pairwise l1 distance between product rows
};

struct ConsensusFunctional {
  Vector phi;               // n+1
  std::size_t steps = 0;    // factors accumulated
  double row_spread = 0.0;  // sum over columns of (max - min) at stop
};

/// Left factor phi of lim prod U(k) = 1 phi^T for the gamma == 0 dynamics,
/// obtained by multiplying the time-varying matrices along the totals
/// trajectory started at z0. Checks the convergence hypotheses first
/// (HypothesisViolated): gamma == 0, every node reaches an aperiodic node with
/// alpha < 1, z0 >= 1.
ConsensusFunctional consensus_functional(const ModelParams& params, const RowStochasticMatrix& p,
                                         const AttentionTotals& z0,
                                         const ConsensusOptions& opts = {});

/// Same product without the structural / initial-condition checks (gamma == 0
/// is still required). Throws NoConvergence when the horizon is hit.
ConsensusFunctional accumulate_consensus_product(const ModelParams& params,
                                                 const RowStochasticMatrix& p,
                                                 const AttentionTotals& z0,
                                                 const ConsensusOptions& opts = {});

/// Polynomial p with sum_k k^n lam^k = lam p(lam) / (1 - lam)^(n+1).
/// Coefficients are in ascending powers; p(0) = 1.
struct SeriesPolynomial {
  Vector coefficients;

  std::size_t degree() const noexcept { return coefficients.empty() ? 0 : coefficients.size() - 1; }
  double operator()(double lam) const noexcept;
};

/// The numerator polynomial for exponent n (degree n - 1), built by repeated
/// differentiation starting from [1] at n = 1. Requires n >= 1.
SeriesPolynomial series_polynomial(std::size_t n);

/// sum_{k>=0} k^n lam^k in closed form, 0 <= n <= 20, 0 < lam < 1.
double power_series_sum(std::size_t n, double lam);

struct PhiBound {
  double value = 0.0;
  /// The bound holds only up to an unknown positive constant; value is
  /// reported with that constant set to 1.
  bool constant_omitted = true;
};

/// ||z(0) - 1||_1 * lambda1 * p_n(lambda1) / (1 - lambda1)^(n+1), where p_n is
/// the degree-n polynomial series_polynomial(n + 1).
PhiBound phi_distance_bound(double lambda1, std::size_t n, double z0_deviation);

struct SchurCertificate {
  Regime regime = Regime::General;
  NodeSet deficiency_set;
  bool all_reach_deficiency = false;
  NodeSet aperiodic_deficient;
  bool all_reach_aperiodic_deficiency = false;
  double rho_ap = 0.0;
  double q_tot = 0.0;
  // Present only when the regime's convergence result uses them.
  std::optional<bool> some_beta_below_one;
  std::optional<bool> positive_quality;
  std::optional<bool> q_tot_at_least_one;
  std::optional<bool> z0_at_least_one;

  bool hypotheses_met() const noexcept;
  /// Names of the unmet hypotheses.
  std::vector<std::string> unmet() const;
};

/// Tolerance applied to z(0) >= 1 checks.
inline constexpr double kUnitLowerBoundSlack = 1e-12;

bool at_least_one(std::span<const double> z) noexcept;

/// Machine-checkable hypotheses of the convergence result for `regime`.
/// `z0` is required for the gamma == 0 and general regimes; when absent the
/// z0 flag is reported unmet.
SchurCertificate schur_certificate(const ModelParams& params, const RowStochasticMatrix& p,
                                   Regime regime, double q_tot,
                                   const std::optional<AttentionTotals>& z0 = std::nullopt);

}  // namespace popdyn
