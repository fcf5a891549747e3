#include "popdyn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popdyn/error.hpp"
#include "popdyn/kernels.hpp"
#include "popdyn/rng.hpp"
#include "popdyn/spectral.hpp"

namespace popdyn {
namespace {

enum SeedStream : std::uint64_t { kGraphStream = 0, kParamStream = 1, kAttentionStream = 2, kQualityStream = 3 };

std::vector<Vector> predict(const Scenario& sc, Regime regime, VerificationReport& rep) {
  const std::size_t n = sc.p.n();
  const std::size_t m = sc.q.m();
  std::vector<Vector> out;
  switch (regime) {
    case Regime::NoNetwork: {
      const auto lim = no_network_limit(sc.params, sc.q);
      for (std::size_t i = 0; i < m; ++i) {
        Vector s(n + 1);
        for (std::size_t v = 0; v < n; ++v) s[v] = lim.x(v, i);
        s[n] = lim.pi.pi[i];
        out.push_back(std::move(s));
      }
      break;
    }
    case Regime::NoQuality: {
      const AttentionTotals z0 = totals(sc.x0);
      try {
        rep.phi = consensus_functional(sc.params, sc.p, z0);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::HypothesisViolated) throw;
        rep.warnings.emplace_back(e.what());
        rep.phi = accumulate_consensus_product(sc.params, sc.p, z0);
      }
      try {
        const auto sys = augmented_limit(sc.params, sc.p, sc.q.total());
        rep.phi_tilde = stationary_distribution(RowStochasticMatrix::validated(sys.u_tilde));
      } catch (const Error& e) {
        rep.warnings.emplace_back(std::string("stationary distribution of U~ unavailable: ") +
                                  e.what());
      }
      for (std::size_t i = 0; i < m; ++i) {
        const Vector s0 = augmented_state(sc.x0, i);
        double value = 0.0;
        for (std::size_t k = 0; k <= n; ++k) value += rep.phi->phi[k] * s0[k];
        out.emplace_back(n + 1, value);
      }
      break;
    }
    case Regime::NoRecommendation: {
      if (!(sc.q.total() > 0.0)) {
        throw Error(ErrorCode::HypothesisViolated, "total quality is zero");
      }
      for (std::size_t i = 0; i < m; ++i) {
        Vector s = fj_decoupled_fixed_point(sc.params, sc.p, sc.q, i);
        s.push_back(sc.q[i] / sc.q.total());
        out.push_back(std::move(s));
      }
      break;
    }
    case Regime::General: {
      const auto sys = augmented_limit(sc.params, sc.p, sc.q.total());
      for (std::size_t i = 0; i < m; ++i) out.push_back(general_fixed_point(sys, sc.q, i));
      break;
    }
  }
  return out;
}

}  // namespace

void validate(const Scenario& sc) {
  check_dimensions(sc.x0, sc.params, sc.p, sc.q);
  if (sc.horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (!(sc.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (sc.record_every < 1) throw Error(ErrorCode::InvalidArgument, "record_every must be >= 1");
}

Trajectory simulate(const Scenario& sc) {
  validate(sc);
  Trajectory traj;
  auto record = [&](const AttentionState& x) {
    traj.times.push_back(x.t());
    traj.popularity.push_back(popularity(x));
    traj.totals.push_back(totals(x));
    traj.states.push_back(x);
  };
  AttentionState x = sc.x0;
  record(x);
  for (std::int64_t t = 1; t <= sc.horizon; ++t) {
    x = step(x, sc.params, sc.p, sc.q);
    if (t % sc.record_every == 0 || t == sc.horizon) record(x);
  }
  return traj;
}

ConvergenceReport detect_convergence(const Trajectory& traj, double tol, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
  if (traj.size() < window + 1) {
    throw Error(ErrorCode::TooShort, "trajectory has " + std::to_string(traj.size()) +
                                         " records, need at least " + std::to_string(window + 1));
  }
  const std::size_t r = traj.size();
  Vector deltas(r, 0.0);  // deltas[k] compares records k-1 and k
  for (std::size_t k = 1; k < r; ++k) {
    deltas[k] = max_abs_diff(traj.states[k].by_influencer().data(),
                             traj.states[k - 1].by_influencer().data());
  }

  ConvergenceReport rep{false, std::nullopt, traj.states.back(), traj.popularity.back(),
                        std::nullopt, std::nullopt};
  // Start of the final run of small differences.
  std::size_t first_small = r;
  for (std::size_t k = r - 1; k >= 1; --k) {
    if (!(deltas[k] <= tol)) break;
    first_small = k;
  }
  if (first_small < r && r - first_small >= window) {
    rep.converged = true;
    rep.t_converged = traj.times[first_small + window - 1];
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t k = 1; k < r; ++k) {
    if (!(deltas[k] > 1e-12 && deltas[k] < 1e-2)) continue;
    const double x = static_cast<double>(traj.times[k]);
    const double y = std::log(deltas[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 10) {
    const double c = static_cast<double>(cnt);
    const double denom = c * sxx - sx * sx;
    if (denom > 0.0) rep.estimated_rate = std::exp((c * sxy - sx * sy) / denom);
  }
  return rep;
}

Vector consensus_gap(const AttentionState& state) {
  Vector gap(state.influencers());
  for (std::size_t i = 0; i < gap.size(); ++i) {
    const auto col = state.column(i);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    gap[i] = *hi - *lo;
  }
  return gap;
}

std::vector<Vector> augmented_states(const AttentionState& state) {
  std::vector<Vector> out;
  const PopularityVector pi = popularity(state);
  for (std::size_t i = 0; i < state.influencers(); ++i) {
    Vector s(state.column(i).begin(), state.column(i).end());
    s.push_back(pi.pi[i]);
    out.push_back(std::move(s));
  }
  return out;
}

VerificationReport verify_regime(const Scenario& sc, std::size_t window) {
  validate(sc);
  VerificationReport rep;
  rep.regime = classify_regime(sc.params);
  rep.certificate = schur_certificate(sc.params, sc.p, rep.regime, sc.q.total(), totals(sc.x0));
  if (!rep.certificate.hypotheses_met()) {
    std::string names;
    for (const auto& u : rep.certificate.unmet()) names += (names.empty() ? "" : ", ") + u;
    rep.warnings.push_back("convergence hypotheses unmet: " + names);
  }
  try {
    rep.predicted = predict(sc, rep.regime, rep);
  } catch (const Error& e) {
    rep.warnings.push_back(std::string("no theoretical limit: ") + std::string(to_string(e.code())) +
                           ": " + e.what());
    rep.predicted.clear();
  }

  const Trajectory traj = simulate(sc);
  try {
    rep.convergence = detect_convergence(traj, sc.tol, window);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooShort) throw;
    rep.warnings.emplace_back(e.what());
    rep.convergence = ConvergenceReport{false, std::nullopt, traj.states.back(),
                                        traj.popularity.back(), std::nullopt, std::nullopt};
  }
  rep.consensus_gap = consensus_gap(rep.convergence.terminal_state);
  if (!rep.predicted.empty()) {
    const auto terminal = augmented_states(rep.convergence.terminal_state);
    double delta = 0.0;
    for (std::size_t i = 0; i < terminal.size(); ++i)
      delta = std::max(delta, max_abs_diff(terminal[i], rep.predicted[i]));
    rep.convergence.theory_delta = delta;
  }
  return rep;
}

std::string_view to_string(Protocol p) noexcept {
  switch (p) {
    case Protocol::Fig1: return "fig1";
    case Protocol::Fig2: return "fig2";
    case Protocol::Fig3: return "fig3";
  }
  return "fig1";
}

Protocol protocol_from_string(std::string_view s) {
  for (auto p : {Protocol::Fig1, Protocol::Fig2, Protocol::Fig3})
    if (to_string(p) == s) return p;
  throw Error(ErrorCode::UnknownProtocol, "unknown protocol '" + std::string(s) +
                                              "' (expected fig1, fig2 or fig3)");
}

ModelParams sample_params(Protocol protocol, std::size_t users, std::uint64_t seed) {
  Rng rng(seed);
  Vector a(users), b(users), c(users);
  for (std::size_t v = 0; v < users; ++v) {
    switch (protocol) {
      case Protocol::Fig1:
        b[v] = rng.uniform();
        a[v] = 0.0;
        c[v] = 1.0 - b[v];
        break;
      case Protocol::Fig2:
        b[v] = rng.uniform();
        a[v] = 1.0 - b[v];
        c[v] = 0.0;
        break;
      case Protocol::Fig3: {
        const double ra = rng.uniform(), rb = rng.uniform(), rc = rng.uniform();
        const double s = ra + rb + rc;
        a[v] = ra / s;
        b[v] = rb / s;
        c[v] = rc / s;
        break;
      }
    }
  }
  return ModelParams(std::move(a), std::move(b), std::move(c));
}

Matrix sample_attention(std::size_t users, std::size_t influencers, std::uint64_t seed,
                        bool lift_totals_to_one) {
  Rng rng(seed);
  Matrix x(users, influencers);
  for (std::size_t v = 0; v < users; ++v) {
    double z = 0.0;
    for (auto& e : x.row(v)) {
      e = rng.uniform();
      z += e;
    }
    if (lift_totals_to_one && z > 0.0 && z < 1.0) {
      for (auto& e : x.row(v)) e /= z;
    }
  }
  return x;
}

Scenario sample_scenario(const ProtocolSpec& spec) {
  if (spec.users == 0 || spec.influencers == 0) {
    throw Error(ErrorCode::InvalidArgument, "sample_scenario: users and influencers must be >= 1");
  }
  Vector quality;
  if (spec.quality) {
    quality = *spec.quality;
  } else if (spec.influencers == 3) {
    quality = {0.3, 0.7, 0.5};
  } else {
    Rng rng(derive_seed(spec.seed, kQualityStream));
    quality.resize(spec.influencers);
    for (auto& q : quality) q = rng.uniform();
  }
  Scenario sc{erdos_renyi(spec.users, spec.edge_probability, derive_seed(spec.seed, kGraphStream)),
              sample_params(spec.protocol, spec.users, derive_seed(spec.seed, kParamStream)),
              QualityVector(std::move(quality)),
              AttentionState(sample_attention(spec.users, spec.influencers,
                                              derive_seed(spec.seed, kAttentionStream),
                                              spec.lift_totals_to_one)),
              spec.horizon,
              spec.tol,
              spec.seed,
              spec.record_every};
  validate(sc);
  return sc;
}

}  // namespace popdyn
