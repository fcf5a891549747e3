// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "popdyn/equilibria.hpp"
#include "popdyn/error.hpp"
#include "popdyn/sim.hpp"
#include "popdyn/spectral.hpp"

using namespace popdyn;

namespace {

namespace tol {
constexpr double kPopularity = 1e-6;
constexpr double kUserLimit = 1e-6;
constexpr double kRateRelative = 0.02;
constexpr double kConsensusGap = 1e-8;
constexpr double kConsensusToPopularity = 1e-8;
constexpr double kConsensusValue = 1e-6;
constexpr double kPhiStationary = 1e-10;
constexpr double kGeneralLimit = 1e-6;
constexpr double kTotalsLimit = 1e-8;
constexpr double kStepTol = 1e-10;
constexpr double kFixedPointResidual = 1e-9;
constexpr double kDecoupledSolve = 1e-10;
constexpr double kDecoupledSim = 1e-6;
constexpr double kSeriesRelative = 1e-9;
constexpr double kDecaySlopeRelative = 0.02;
constexpr double kSpearmanMax = 0.1;
constexpr double kSimplex = 1e-12;
constexpr double kTotalsRecursion = 1e-12;
constexpr double kUnitSlack = 1e-12;
}  // namespace tol

namespace budget {
constexpr double kCriterion1 = 1.0;
constexpr double kCriterion2 = 5.0;
constexpr double kCriterion3 = 30.0;
constexpr double kCriterion6 = 1.0;
}  // namespace budget

constexpr std::uint64_t kSeed = 20240601;
const Vector kFigureQuality{0.3, 0.7, 0.5};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double max_diff(const Vector& a, const Vector& b) { return max_abs_diff(a, b); }

// Steps until the max-norm change stays <= tol for `window` consecutive steps.
struct RunResult {
  AttentionState state;
  bool converged = false;
  std::int64_t steps = 0;
};

RunResult run_until_still(const Scenario& sc, double tol_, std::int64_t horizon,
                          int window = 10) {
  AttentionState x = sc.x0;
  int still = 0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    AttentionState next = step(x, sc.params, sc.p, sc.q);
    const double d = max_abs_diff(next.by_influencer().data(), x.by_influencer().data());
    x = std::move(next);
    still = d <= tol_ ? still + 1 : 0;
    if (still >= window) return {x, true, t};
  }
  return {x, false, horizon};
}

Vector ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  Vector r(v.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t j = k;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[k]]) ++j;
    for (std::size_t l = k; l <= j; ++l) r[idx[l]] = 0.5 * static_cast<double>(k + j);
    k = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const Vector rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// 1. alpha = 0: popularity and per-user limits, and the contraction rate.
Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ProtocolSpec spec;
  spec.protocol = Protocol::Fig1;
  spec.seed = kSeed;
  spec.quality = kFigureQuality;
  spec.horizon = 1000;
  const Scenario sc = sample_scenario(spec);
  const Trajectory traj = simulate(sc);
  const ConvergenceReport rep = detect_convergence(traj, sc.tol);
  const double elapsed = seconds_since(t0);

  const Vector pi_star{0.3 / 1.5, 0.7 / 1.5, 0.5 / 1.5};
  const double pi_err = max_diff(rep.terminal_popularity.pi, pi_star);
  double x_err = 0.0;
  for (std::size_t v = 0; v < 20; ++v)
    for (std::size_t i = 0; i < 3; ++i) {
      const double b = sc.params.beta()[v];
      x_err = std::max(x_err, std::abs(rep.terminal_state(v, i) -
                                       (b * pi_star[i] + (1.0 - b) * kFigureQuality[i])));
    }
  double beta_bar = 0.0;
  for (double b : sc.params.beta()) beta_bar += b / 20.0;
  const double rate = beta_bar / (beta_bar + (1.0 - beta_bar) * 1.5);
  o.require(pi_err <= tol::kPopularity, fmt("popularity error %.3g", pi_err));
  o.require(x_err <= tol::kUserLimit, fmt("user limit error %.3g", x_err));
  o.require(rep.estimated_rate.has_value(), "no rate estimate");
  const double rel = rep.estimated_rate ? std::abs(*rep.estimated_rate / rate - 1.0) : 1.0;
  o.require(rel <= tol::kRateRelative, fmt("rate %.5g vs %.5g", rep.estimated_rate.value_or(0), rate));
  o.require(elapsed < budget::kCriterion1, fmt("runtime %.3fs", elapsed));
  if (o.pass)
    o.detail = fmt("pi err %.2g, x err %.2g, rate rel err %.2g", pi_err, x_err, rel);
  return o;
}

// 2. gamma = 0: consensus, its value from the consensus functional, and the
// stationary law at unit totals.
Outcome criterion2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ProtocolSpec spec;
  spec.protocol = Protocol::Fig2;
  spec.seed = kSeed;
  spec.quality = kFigureQuality;
  spec.lift_totals_to_one = true;
  spec.horizon = 10000;
  const Scenario sc = sample_scenario(spec);
  o.require(at_least_one(totals(sc.x0).z), "initial totals below one");
  const Trajectory traj = simulate(sc);
  const AttentionState& xt = traj.states.back();
  const PopularityVector pi = traj.popularity.back();
  double gap = 0.0, to_pi = 0.0, value_err = 0.0;
  for (double g : consensus_gap(xt)) gap = std::max(gap, g);
  const auto phi = consensus_functional(sc.params, sc.p, totals(sc.x0));
  for (std::size_t i = 0; i < 3; ++i) {
    const Vector s0 = augmented_state(sc.x0, i);
    double value = 0.0;
    for (std::size_t k = 0; k <= 20; ++k) value += phi.phi[k] * s0[k];
    for (std::size_t v = 0; v < 20; ++v) {
      to_pi = std::max(to_pi, std::abs(xt(v, i) - pi.pi[i]));
      value_err = std::max(value_err, std::abs(xt(v, i) - value));
    }
  }
  o.require(gap <= tol::kConsensusGap, fmt("consensus gap %.3g", gap));
  o.require(to_pi <= tol::kConsensusToPopularity, fmt("x vs pi %.3g", to_pi));
  o.require(value_err <= tol::kConsensusValue, fmt("consensus value error %.3g", value_err));

  // Unit totals: rescale each row of x0 to sum one.
  Matrix unit = sc.x0.users_by_influencers();
  for (std::size_t v = 0; v < unit.rows(); ++v) {
    double z = 0.0;
    for (double e : unit.row(v)) z += e;
    for (auto& e : unit.row(v)) e /= z;
  }
  const auto phi_unit = consensus_functional(sc.params, sc.p, totals(AttentionState(unit)));
  const auto sys = augmented_limit(sc.params, sc.p, sc.q.total());
  const Vector phi_tilde = stationary_distribution(RowStochasticMatrix::validated(sys.u_tilde));
  const double phi_err = max_diff(phi_unit.phi, phi_tilde);
  o.require(phi_err <= tol::kPhiStationary, fmt("phi vs stationary %.3g", phi_err));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < budget::kCriterion2, fmt("runtime %.3fs", elapsed));
  if (o.pass)
    o.detail = fmt("gap %.2g, value err %.2g, phi err %.2g", gap, value_err, phi_err);
  return o;
}

// 3. General regime with q_tot >= 1 and z(0) >= 1: closed-form limit and totals.
Outcome criterion3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_s = 0.0, worst_z = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    ProtocolSpec spec;
    spec.protocol = Protocol::Fig3;
    spec.seed = derive_seed(kSeed, 300 + k);
    spec.quality = kFigureQuality;
    spec.lift_totals_to_one = true;
    spec.horizon = 5000;
    spec.record_every = 5000;
    const Scenario sc = sample_scenario(spec);
    o.require(sc.q.total() >= 1.0 && at_least_one(totals(sc.x0).z), "setup outside hypotheses");
    const Trajectory traj = simulate(sc);
    const auto sys = augmented_limit(sc.params, sc.p, sc.q.total());
    const auto terminal = augmented_states(traj.states.back());
    for (std::size_t i = 0; i < 3; ++i)
      worst_s = std::max(worst_s, max_diff(terminal[i], general_fixed_point(sys, sc.q, i)));
    worst_z = std::max(worst_z, max_diff(traj.totals.back().z, sys.z_star));
  }
  const double elapsed = seconds_since(t0);
  o.require(worst_s <= tol::kGeneralLimit, fmt("limit error %.3g", worst_s));
  o.require(worst_z <= tol::kTotalsLimit, fmt("totals error %.3g", worst_z));
  o.require(elapsed < budget::kCriterion3, fmt("runtime %.3fs", elapsed));
  if (o.pass) o.detail = fmt("50 scenarios, limit err %.2g, totals err %.2g", worst_s, worst_z);
  return o;
}

// 4. Outside the hypotheses (z(0) ~ U, q_tot < 1) every run still settles on a
// fixed point of the update.
Outcome criterion4() {
  Outcome o;
  int converged = 0, below_one = 0;
  double worst_residual = 0.0;
  std::int64_t slowest = 0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    Rng rng(derive_seed(kSeed, 400 + k));
    Vector q(3);
    for (auto& v : q) v = rng.uniform(0.05, 1.0);
    const double target = rng.uniform(0.3, 0.95);
    const double s = q[0] + q[1] + q[2];
    for (auto& v : q) v *= target / s;
    ProtocolSpec spec;
    spec.protocol = Protocol::Fig3;
    spec.seed = derive_seed(kSeed, 450 + k);
    spec.quality = q;
    const Scenario sc = sample_scenario(spec);
    o.require(sc.q.total() < 1.0, "q_tot not below one");
    below_one += !at_least_one(totals(sc.x0).z);
    const RunResult r = run_until_still(sc, tol::kStepTol, 100000);
    if (!r.converged) continue;
    ++converged;
    slowest = std::max(slowest, r.steps);
    const AttentionState again = step(r.state, sc.params, sc.p, sc.q);
    worst_residual = std::max(
        worst_residual, max_abs_diff(again.by_influencer().data(), r.state.by_influencer().data()));
  }
  o.require(converged == 50, fmt("%.0f of 50 converged", converged));
  o.require(worst_residual <= tol::kFixedPointResidual, fmt("fixed-point residual %.3g", worst_residual));
  if (o.pass)
    o.detail = fmt("50/50 converged (%.0f with z(0) < 1), slowest %.0f steps, residual %.2g",
                   below_one, static_cast<double>(slowest), worst_residual);
  return o;
}

// 5. beta = 0: the linear solve and the simulation both land on q * 1.
Outcome criterion5() {
  Outcome o;
  double worst_solve = 0.0, worst_sim = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(derive_seed(kSeed, 500 + k));
    const std::size_t n = 20;
    Vector a(n), b(n, 0.0), c(n);
    for (std::size_t v = 0; v < n; ++v) {
      a[v] = rng.uniform();
      c[v] = 1.0 - a[v];
    }
    Vector q(3);
    for (auto& v : q) v = rng.uniform();
    Scenario sc{erdos_renyi(n, 0.2, derive_seed(kSeed, 520 + k)), ModelParams(a, b, c),
                QualityVector(q), AttentionState(sample_attention(n, 3, derive_seed(kSeed, 540 + k)))};
    sc.horizon = 20000;
    for (std::size_t i = 0; i < 3; ++i)
      worst_solve = std::max(worst_solve, max_diff(fj_decoupled_fixed_point(sc.params, sc.p, sc.q, i),
                                                   Vector(n, q[i])));
    const RunResult r = run_until_still(sc, 1e-13, sc.horizon);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t i = 0; i < 3; ++i)
        worst_sim = std::max(worst_sim, std::abs(r.state(v, i) - q[i]));
  }
  o.require(worst_solve <= tol::kDecoupledSolve, fmt("solve error %.3g", worst_solve));
  o.require(worst_sim <= tol::kDecoupledSim, fmt("simulation error %.3g", worst_sim));
  if (o.pass) o.detail = fmt("20 instances, solve err %.2g, sim err %.2g", worst_solve, worst_sim);
  return o;
}

// 6. Closed-form power series against brute-force partial sums.
Outcome criterion6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n = 0; n <= 6; ++n)
    for (double lam : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double ref = oracle::power_series_partial(n, lam);
      worst = std::max(worst, std::abs(power_series_sum(n, lam) - ref) / ref);
    }
  for (std::size_t n = 1; n <= 7; ++n)
    o.require(series_polynomial(n)(0.0) == 1.0, fmt("p(0) != 1 for n = %.0f", static_cast<double>(n)));
  const double elapsed = seconds_since(t0);
  o.require(worst <= tol::kSeriesRelative, fmt("relative error %.3g", worst));
  o.require(elapsed < budget::kCriterion6, fmt("runtime %.3fs", elapsed));
  if (o.pass) o.detail = fmt("35 pairs, max relative error %.2g", worst);
  return o;
}

// 7. ||M^k|| decays at the spectral radius with at most polynomial excess.
Outcome criterion7() {
  Outcome o;
  double worst_slope = 0.0, worst_rho = -1.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(derive_seed(kSeed, 700 + k));
    const std::size_t n = 2 + k % 9;
    Matrix m = oracle::random_nonnegative(n, 0.6, rng);
    const double target = rng.uniform(0.5, 0.95);
    const double rho0 = spectral_radius(m);
    for (auto& v : m.data()) v *= target / rho0;
    const double rho = spectral_radius(m);
    const auto samples = power_norm_decay(m, 400);
    const double slope = log_decay_slope(samples, 200, 400);
    worst_slope = std::max(worst_slope, std::abs(slope / std::log(rho) - 1.0));

    std::vector<double> ks, normalized;
    double peak = 0.0;
    for (const auto& s : samples) {
      const double kk = static_cast<double>(s.k);
      const double r = s.norm * std::pow(rho, -kk) * std::pow(kk, -static_cast<double>(n));
      o.require(std::isfinite(r), "normalized norm not finite");
      peak = std::max(peak, r);
      if (s.k > 200) {
        ks.push_back(kk);
        normalized.push_back(r);
      }
    }
    o.require(std::isfinite(peak), "unbounded normalized norm");
    worst_rho = std::max(worst_rho, spearman(ks, normalized));
  }
  o.require(worst_slope <= tol::kDecaySlopeRelative, fmt("slope relative error %.3g", worst_slope));
  o.require(worst_rho < tol::kSpearmanMax, fmt("Spearman trend %.3g", worst_rho));
  if (o.pass) o.detail = fmt("20 matrices, slope rel err %.2g, max Spearman %.2g", worst_slope, worst_rho);
  return o;
}

// 8. Invariants over random instances.
Outcome criterion8() {
  Outcome o;
  int simplex = 0, box = 0, recursion = 0, unit = 0;
  const int instances = 120, steps = 60;
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(kSeed, 800 + static_cast<std::uint64_t>(k)));
    const std::size_t n = 2 + static_cast<std::size_t>(k) % 19, m = 1 + static_cast<std::size_t>(k) % 5;
    const auto p = build_row_stochastic(oracle::random_nonnegative(n, 0.25, rng));
    const auto params = oracle::random_general_params(n, rng);
    Vector qv(m);
    for (auto& v : qv) v = rng.uniform();
    const QualityVector q(qv);
    AttentionState x(sample_attention(n, m, derive_seed(kSeed, 900 + k)));
    for (int t = 0; t < steps; ++t) {
      const PopularityVector pi = popularity(x);
      double s = 0.0;
      bool neg = false;
      for (double v : pi.pi) {
        s += v;
        neg = neg || v < 0.0;
      }
      simplex += neg || std::abs(s - 1.0) > tol::kSimplex;
      const AttentionTotals z_pred = totals_step(totals(x), params, p, q.total());
      x = step(x, params, p, q);
      for (double v : x.by_influencer().data()) box += !(v >= 0.0 && v <= 1.0);
      recursion += max_abs_diff(totals(x).z, z_pred.z) > tol::kTotalsRecursion;
    }
  }
  // z >= 1 is preserved when q_tot >= 1 and z(0) >= 1.
  for (int k = 0; k < instances; ++k) {
    Rng rng(derive_seed(kSeed, 1100 + static_cast<std::uint64_t>(k)));
    const std::size_t n = 2 + static_cast<std::size_t>(k) % 19, m = 2 + static_cast<std::size_t>(k) % 3;
    const auto p = build_row_stochastic(oracle::random_nonnegative(n, 0.25, rng));
    const auto params = oracle::random_general_params(n, rng);
    Vector qv(m);
    for (auto& v : qv) v = rng.uniform(1.0 / static_cast<double>(m), 1.0);
    const QualityVector q(qv);
    AttentionState x(sample_attention(n, m, derive_seed(kSeed, 1300 + k), true));
    for (int t = 0; t < steps; ++t) {
      x = step(x, params, p, q);
      for (double z : totals(x).z) unit += z < 1.0 - tol::kUnitSlack;
    }
  }
  o.require(simplex == 0, fmt("%.0f simplex violations", simplex));
  o.require(box == 0, fmt("%.0f box violations", box));
  o.require(recursion == 0, fmt("%.0f totals-recursion violations", recursion));
  o.require(unit == 0, fmt("%.0f unit-total violations", unit));
  if (o.pass) o.detail = "120 instances per invariant, 60 steps each, no violations";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"no-network limit and rate", criterion1},
      {"no-quality consensus", criterion2},
      {"general-regime limit", criterion3},
      {"convergence beyond the hypotheses", criterion4},
      {"no-recommendation fixed point", criterion5},
      {"power series closed form", criterion6},
      {"matrix power decay", criterion7},
      {"invariant suite", criterion8},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
