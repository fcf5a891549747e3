#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "popdyn/equilibria.hpp"
#include "popdyn/graph.hpp"
#include "popdyn/model.hpp"

namespace popdyn {

struct Scenario {
  RowStochasticMatrix p;
  ModelParams params;
  QualityVector q;
  AttentionState x0;
  std::int64_t horizon = 1000;
  double tol = 1e-10;
  std::uint64_t seed = 0;  // provenance of sampled parts; not used by simulate()
  std::int64_t record_every = 1;

  bool operator==(const Scenario&) const = default;
};

/// Throws DimensionMismatch / InvalidArgument when the parts do not fit together.
void validate(const Scenario& sc);

struct Trajectory {
  std::vector<std::int64_t> times;
  std::vector<AttentionState> states;
  std::vector<PopularityVector> popularity;
  std::vector<AttentionTotals> totals;

  std::size_t size() const noexcept { return times.size(); }
};

struct ConvergenceReport {
  bool converged = false;
  std::optional<std::int64_t> t_converged;
  AttentionState terminal_state;
  PopularityVector terminal_popularity;
  std::optional<double> estimated_rate;  // per step
  std::optional<double> theory_delta;
};

/// Iterates step() from x0 for `horizon` steps, keeping t = 0, every
/// `record_every`-th step, and the final step.
Trajectory simulate(const Scenario& sc);

inline constexpr std::size_t kDefaultWindow = 10;

/// Converged iff the max-norm difference between consecutive records stays
/// <= tol over the last `window` records. The rate is fitted on differences
/// in (1e-12, 1e-2) and requires at least 10 such points.
ConvergenceReport detect_convergence(const Trajectory& traj, double tol,
                                     std::size_t window = kDefaultWindow);

/// max_v x_v^(i) - min_v x_v^(i) per influencer.
Vector consensus_gap(const AttentionState& state);

struct VerificationReport {
  Regime regime = Regime::General;
  SchurCertificate certificate;
  std::vector<std::string> warnings;
  ConvergenceReport convergence;
  Vector consensus_gap;
  std::vector<Vector> predicted;  // per influencer, (n+1)-vector; empty if unavailable
  std::optional<ConsensusFunctional> phi;
  std::optional<Vector> phi_tilde;
};

/// Simulates and compares the terminal augmented states against the limit the
/// matching regime predicts. Hypothesis failures become warnings; only an
/// ambiguous regime aborts. A trajectory too short for the window is reported
/// as not converged.
VerificationReport verify_regime(const Scenario& sc, std::size_t window = kDefaultWindow);

/// Terminal (x^(i), pi^(i)) for every influencer.
std::vector<Vector> augmented_states(const AttentionState& state);

enum class Protocol { Fig1, Fig2, Fig3 };

std::string_view to_string(Protocol p) noexcept;
/// Throws UnknownProtocol.
Protocol protocol_from_string(std::string_view s);

struct ProtocolSpec {
  Protocol protocol = Protocol::Fig1;
  std::uint64_t seed = 0;
  std::size_t users = 20;
  std::size_t influencers = 3;
  double edge_probability = 0.2;
  /// Rescale sampled rows of x0 whose total is below 1 up to exactly 1.
  bool lift_totals_to_one = false;
  std::optional<Vector> quality;
  std::int64_t horizon = 10000;
  double tol = 1e-10;
  std::int64_t record_every = 1;
};

/// fig1: alpha = 0, beta ~ U[0,1], gamma = 1 - beta.
/// fig2: gamma = 0, beta ~ U[0,1], alpha = 1 - beta.
/// fig3: (alpha, beta, gamma) ~ U[0,1]^3 divided by their sum.
ModelParams sample_params(Protocol protocol, std::size_t users, std::uint64_t seed);

/// Entries ~ U[0,1] (users x influencers), optionally with low-total rows lifted.
Matrix sample_attention(std::size_t users, std::size_t influencers, std::uint64_t seed,
                        bool lift_totals_to_one = false);

/// Full scenario: Erdos-Renyi graph, sampled parameters and x0. Quality
/// defaults to (0.3, 0.7, 0.5) for three influencers, U[0,1] otherwise.
Scenario sample_scenario(const ProtocolSpec& spec);

}  // namespace popdyn
