#include "popdyn/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popdyn/error.hpp"
#include "popdyn/kernels.hpp"
#include "popdyn/linalg.hpp"
#include "popdyn/spectral.hpp"

namespace popdyn {
namespace {

NodeSet nodes_where(std::size_t n, auto&& pred) {
  NodeSet out;
  for (std::size_t v = 0; v < n; ++v)
    if (pred(v)) out.insert(v);
  return out;
}

NodeSet alpha_deficient(const ModelParams& params) {
  return nodes_where(params.n(),
                     [&](std::size_t v) { return 1.0 - params.alpha()[v] >= kZeroWeightCutoff; });
}

NodeSet gamma_positive(const ModelParams& params) {
  return nodes_where(params.n(), [&](std::size_t v) { return params.gamma()[v] >= kZeroWeightCutoff; });
}

bool everyone_reaches(const RowStochasticMatrix& p, const NodeSet& targets) {
  if (targets.empty()) return false;
  return reaching_set(p, targets).size() == p.n();
}

NodeSet aperiodic_subset(const RowStochasticMatrix& p, const NodeSet& nodes) {
  NodeSet out;
  for (auto v : nodes)
    if (is_aperiodic_node(p, v)) out.insert(v);
  return out;
}

Matrix identity_minus(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = (i == j ? 1.0 : 0.0) - m(i, j);
  return out;
}

void require_stable_ap(const ModelParams& params, const RowStochasticMatrix& p, const char* who) {
  if (!everyone_reaches(p, alpha_deficient(params))) {
    throw Error(ErrorCode::StabilityConditionUnmet,
                std::string(who) + ": some node has no path to a node with alpha < 1, so AP is "
                                   "not Schur stable");
  }
}

}  // namespace

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::NoNetwork: return "no_network";
    case Regime::NoQuality: return "no_quality";
    case Regime::NoRecommendation: return "no_recommendation";
    case Regime::General: return "general";
  }
  return "general";
}

std::optional<Regime> regime_from_string(std::string_view s) noexcept {
  for (auto r : {Regime::NoNetwork, Regime::NoQuality, Regime::NoRecommendation, Regime::General})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::vector<Regime> matching_regimes(const ModelParams& params) {
  std::vector<Regime> out;
  if (all_zero(params.alpha())) out.push_back(Regime::NoNetwork);
  if (all_zero(params.gamma())) out.push_back(Regime::NoQuality);
  if (all_zero(params.beta())) out.push_back(Regime::NoRecommendation);
  if (out.empty()) out.push_back(Regime::General);
  return out;
}

Regime classify_regime(const ModelParams& params) {
  const auto regimes = matching_regimes(params);
  if (regimes.size() > 1) {
    std::string names;
    for (auto r : regimes) names += (names.empty() ? "" : ", ") + std::string(to_string(r));
    throw Error(ErrorCode::AmbiguousRegime, "parameters match several regimes: " + names);
  }
  return regimes.front();
}

Matrix influence_matrix(const ModelParams& params, const RowStochasticMatrix& p) {
  check_dimensions(params, p);
  Matrix ap = p.matrix();
  for (std::size_t v = 0; v < ap.rows(); ++v)
    for (auto& x : ap.row(v)) x *= params.alpha()[v];
  return ap;
}

NoNetworkLimit no_network_limit(const ModelParams& params, const QualityVector& q) {
  if (!all_zero(params.alpha())) {
    throw Error(ErrorCode::HypothesisViolated, "no_network_limit: alpha is not identically zero");
  }
  const auto& beta = params.beta();
  if (std::none_of(beta.begin(), beta.end(), [](double b) { return b < 1.0 - kZeroWeightCutoff; })) {
    throw Error(ErrorCode::HypothesisViolated, "no_network_limit: every beta_v equals 1");
  }
  if (!(q.total() > 0.0)) {
    throw Error(ErrorCode::HypothesisViolated, "no_network_limit: total quality is zero");
  }
  const std::size_t n = params.n();
  const std::size_t m = q.m();
  NoNetworkLimit out{PopularityVector{Vector(m)}, Matrix(n, m)};
  for (std::size_t i = 0; i < m; ++i) out.pi.pi[i] = q[i] / q.total();
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < m; ++i)
      out.x(v, i) = beta[v] * out.pi.pi[i] + (1.0 - beta[v]) * q[i];
  return out;
}

double no_network_rate(const ModelParams& params, const QualityVector& q) {
  no_network_limit(params, q);  // same hypotheses
  const auto& beta = params.beta();
  const double beta_bar = kernels::sum(beta) / static_cast<double>(beta.size());
  return beta_bar / (beta_bar + (1.0 - beta_bar) * q.total());
}

Vector z_limit(const ModelParams& params, const RowStochasticMatrix& p, double q_tot) {
  check_dimensions(params, p);
  require_stable_ap(params, p, "z_limit");
  const std::size_t n = p.n();
  if (all_zero(params.gamma())) return Vector(n, 1.0);

  const Matrix lhs = identity_minus(influence_matrix(params, p));
  Vector rhs(n);
  for (std::size_t v = 0; v < n; ++v) rhs[v] = params.beta()[v] + q_tot * params.gamma()[v];
  return linalg::solve(lhs, rhs, 1e-10);
}

AugmentedMatrices augmented_at(const ModelParams& params, const RowStochasticMatrix& p,
                               const AttentionTotals& z) {
  check_dimensions(params, p);
  const std::size_t n = p.n();
  if (z.z.size() != n) throw Error(ErrorCode::DimensionMismatch, "augmented_at: totals length");
  const double total = kernels::sum(z.z);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::ZeroTotalAttention, "augmented_at: 1^T z is not positive");
  }
  const Matrix ap = influence_matrix(params, p);
  AugmentedMatrices out{Matrix(n + 1, n + 1), Vector(n + 1)};
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w = 0; w < n; ++w) out.u(v, w) = ap(v, w);
    out.u(v, n) = params.beta()[v];
    out.c[v] = params.gamma()[v];
  }
  for (std::size_t w = 0; w < n; ++w) {
    double col = 0.0;
    for (std::size_t v = 0; v < n; ++v) col += ap(v, w);
    out.u(n, w) = col / total;
  }
  out.u(n, n) = kernels::sum(params.beta()) / total;
  out.c[n] = kernels::sum(params.gamma()) / total;
  return out;
}

AugmentedSystem augmented_limit(const ModelParams& params, const RowStochasticMatrix& p,
                                double q_tot) {
  AugmentedSystem sys;
  sys.z_star = z_limit(params, p, q_tot);
  auto [u, c] = augmented_at(params, p, AttentionTotals{sys.z_star});
  sys.u_tilde = std::move(u);
  sys.c_tilde = std::move(c);
  sys.lambda1 = spectral_radius(influence_matrix(params, p));
  sys.lambda2 = subdominant_magnitude(sys.u_tilde);
  return sys;
}

Vector general_fixed_point(const AugmentedSystem& sys, const QualityVector& q, std::size_t i) {
  if (i >= q.m()) throw Error(ErrorCode::IndexOutOfRange, "general_fixed_point: influencer index");
  const std::size_t n = sys.z_star.size();
  if (all_zero(std::span<const double>(sys.c_tilde).first(n))) {
    throw Error(ErrorCode::SingularSystem,
                "general_fixed_point: gamma == 0, so U~ is row stochastic and I - U~ is singular; "
                "use the consensus functional");
  }
  Vector s = linalg::solve(identity_minus(sys.u_tilde), sys.c_tilde, 1e-10);
  for (auto& x : s) x *= q[i];
  return s;
}

Vector fj_decoupled_fixed_point(const ModelParams& params, const RowStochasticMatrix& p,
                                const QualityVector& q, std::size_t i) {
  check_dimensions(params, p);
  if (i >= q.m()) throw Error(ErrorCode::IndexOutOfRange, "fj_decoupled_fixed_point: index");
  if (!all_zero(params.beta())) {
    throw Error(ErrorCode::HypothesisViolated, "fj_decoupled_fixed_point: beta is not zero");
  }
  require_stable_ap(params, p, "fj_decoupled_fixed_point");
  const std::size_t n = p.n();
  Vector rhs(n);
  for (std::size_t v = 0; v < n; ++v) rhs[v] = (1.0 - params.alpha()[v]) * q[i];
  const Vector solved = linalg::solve(identity_minus(influence_matrix(params, p)), rhs, 1e-10);
  const Vector closed(n, q[i]);
  const double gap = max_abs_diff(solved, closed);
  if (!(gap <= 1e-10)) {
    throw Error(ErrorCode::VerificationFailed,
                "fj_decoupled_fixed_point: linear solve differs from q*1 by " + std::to_string(gap));
  }
  return closed;
}

ConsensusFunctional accumulate_consensus_product(const ModelParams& params,
                                                 const RowStochasticMatrix& p,
                                                 const AttentionTotals& z0,
                                                 const ConsensusOptions& opts) {
  check_dimensions(params, p);
  if (!all_zero(params.gamma())) {
    throw Error(ErrorCode::HypothesisViolated, "consensus functional needs gamma == 0");
  }
  if (z0.z.size() != p.n()) throw Error(ErrorCode::DimensionMismatch, "z0 length differs from P");
  const std::size_t dim = p.n() + 1;

  // R(t) = U(t-1) ... U(0); the factor applied at step t uses z(t+1), which is
  // what makes s(t) = R(t) s(0) hold exactly.
  AttentionTotals z = z0;
  Matrix r = Matrix::identity(dim);
  for (std::size_t t = 0; t < opts.horizon; ++t) {
    z = totals_step(z, params, p, 0.0);
    r = augmented_at(params, p, z).u * r;

    double spread = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      double lo = r(0, j), hi = r(0, j);
      for (std::size_t k = 1; k < dim; ++k) {
        lo = std::min(lo, r(k, j));
        hi = std::max(hi, r(k, j));
      }
      spread += hi - lo;
    }
    if (!std::isfinite(spread)) break;
    if (spread <= opts.tol) {
      ConsensusFunctional out{Vector(dim, 0.0), t + 1, spread};
      for (std::size_t k = 0; k < dim; ++k) kernels::axpy(1.0 / static_cast<double>(dim), r.row(k), out.phi);
      return out;
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "consensus product rows did not agree within horizon " + std::to_string(opts.horizon),
              static_cast<std::int64_t>(opts.horizon));
}

ConsensusFunctional consensus_functional(const ModelParams& params, const RowStochasticMatrix& p,
                                         const AttentionTotals& z0,
                                         const ConsensusOptions& opts) {
  const SchurCertificate cert = schur_certificate(params, p, Regime::NoQuality, 0.0, z0);
  if (!all_zero(params.gamma())) {
    throw Error(ErrorCode::HypothesisViolated, "consensus functional needs gamma == 0");
  }
  if (!cert.hypotheses_met()) {
    std::string names;
    for (const auto& u : cert.unmet()) names += (names.empty() ? "" : ", ") + u;
    throw Error(ErrorCode::HypothesisViolated, "consensus functional hypotheses unmet: " + names);
  }
  return accumulate_consensus_product(params, p, z0, opts);
}

double SeriesPolynomial::operator()(double lam) const noexcept {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * lam + *it;
  return acc;
}

SeriesPolynomial series_polynomial(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::DomainError, "series_polynomial: n must be >= 1");
  Vector p{1.0};
  // From exponent e-1 to e: next = (p + lam p') (1 - lam) + e lam p.
  for (std::size_t e = 2; e <= n; ++e) {
    const std::size_t d = p.size();
    Vector a(d, 0.0);  // p + lam p'
    for (std::size_t k = 0; k < d; ++k) a[k] = p[k] * static_cast<double>(k + 1);
    Vector next(d + 1, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      next[k] += a[k];
      next[k + 1] -= a[k];
      next[k + 1] += static_cast<double>(e) * p[k];
    }
    while (next.size() > 1 && next.back() == 0.0) next.pop_back();
    p = std::move(next);
  }
  return SeriesPolynomial{std::move(p)};
}

double power_series_sum(std::size_t n, double lam) {
  if (!(lam > 0.0 && lam < 1.0)) {
    throw Error(ErrorCode::DomainError, "power_series_sum: lambda must lie in (0,1)");
  }
  if (n > 20) throw Error(ErrorCode::DomainError, "power_series_sum: n must be <= 20");
  if (n == 0) return 1.0 / (1.0 - lam);
  const SeriesPolynomial poly = series_polynomial(n);
  return lam * poly(lam) / std::pow(1.0 - lam, static_cast<double>(n + 1));
}

PhiBound phi_distance_bound(double lambda1, std::size_t n, double z0_deviation) {
  if (!(lambda1 >= 0.0 && lambda1 < 1.0)) {
    throw Error(ErrorCode::DomainError, "phi_distance_bound: lambda1 must lie in [0,1)");
  }
  if (!(z0_deviation >= 0.0)) {
    throw Error(ErrorCode::DomainError, "phi_distance_bound: deviation must be nonnegative");
  }
  if (lambda1 == 0.0 || z0_deviation == 0.0) return PhiBound{0.0};
  const SeriesPolynomial poly = series_polynomial(n + 1);
  return PhiBound{z0_deviation * lambda1 * poly(lambda1) /
                  std::pow(1.0 - lambda1, static_cast<double>(n + 1))};
}

bool at_least_one(std::span<const double> z) noexcept {
  return std::all_of(z.begin(), z.end(), [](double v) { return v >= 1.0 - kUnitLowerBoundSlack; });
}

bool SchurCertificate::hypotheses_met() const noexcept { return unmet().empty(); }

std::vector<std::string> SchurCertificate::unmet() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const char* name) {
    if (!ok) out.emplace_back(name);
  };
  switch (regime) {
    case Regime::NoNetwork:
      need(some_beta_below_one.value_or(false), "some_beta_below_one");
      need(positive_quality.value_or(false), "positive_quality");
      break;
    case Regime::NoQuality:
      need(all_reach_aperiodic_deficiency, "all_reach_aperiodic_deficiency");
      need(z0_at_least_one.value_or(false), "z0_at_least_one");
      break;
    case Regime::NoRecommendation:
      need(all_reach_deficiency, "all_reach_deficiency");
      break;
    case Regime::General:
      need(all_reach_aperiodic_deficiency, "all_reach_aperiodic_deficiency");
      need(q_tot_at_least_one.value_or(false), "q_tot_at_least_one");
      need(z0_at_least_one.value_or(false), "z0_at_least_one");
      break;
  }
  return out;
}

SchurCertificate schur_certificate(const ModelParams& params, const RowStochasticMatrix& p,
                                   Regime regime, double q_tot,
                                   const std::optional<AttentionTotals>& z0) {
  check_dimensions(params, p);
  SchurCertificate cert;
  cert.regime = regime;
  cert.q_tot = q_tot;
  cert.deficiency_set = regime == Regime::General ? gamma_positive(params) : alpha_deficient(params);
  cert.all_reach_deficiency = everyone_reaches(p, cert.deficiency_set);
  cert.aperiodic_deficient = aperiodic_subset(p, cert.deficiency_set);
  cert.all_reach_aperiodic_deficiency = everyone_reaches(p, cert.aperiodic_deficient);
  cert.rho_ap = spectral_radius(influence_matrix(params, p));

  switch (regime) {
    case Regime::NoNetwork: {
      const auto& beta = params.beta();
      cert.some_beta_below_one = std::any_of(beta.begin(), beta.end(), [](double b) {
        return b < 1.0 - kZeroWeightCutoff;
      });
      cert.positive_quality = q_tot > 0.0;
      break;
    }
    case Regime::NoQuality:
      cert.z0_at_least_one = z0.has_value() && at_least_one(z0->z);
      break;
    case Regime::NoRecommendation:
      break;
    case Regime::General:
      cert.q_tot_at_least_one = q_tot >= 1.0;
      cert.z0_at_least_one = z0.has_value() && at_least_one(z0->z);
      break;
  }
  return cert;
}

}  // namespace popdyn
