#include "popdyn/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "popdyn/equilibria.hpp"
#include "popdyn/io.hpp"
#include "popdyn/kernels.hpp"
#include "popdyn/rng.hpp"
#include "popdyn/scenario_file.hpp"
#include "popdyn/sim.hpp"
#include "popdyn/spectral.hpp"

namespace popdyn::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  unsigned jobs = 1;
};

struct Loaded {
  std::string path;
  std::string text;
  LoadedScenario scenario;
};

Loaded load(const std::string& path, const Globals& g) {
  std::string text = io::read_file(path);
  LoadedScenario sc = parse_scenario(text, g.seed_override);
  return Loaded{path, std::move(text), std::move(sc)};
}

void print_error(std::ostream& err, std::string_view code, const std::string& message,
                 int exit_code, std::optional<std::int64_t> at = std::nullopt) {
  json j{{"error", code}, {"message", message}, {"exit_code", exit_code}};
  if (at) j["at"] = *at;
  err << j.dump() << '\n';
}

// Collects outputs written to one directory for the manifest.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& contents) {
    io::write_file(dir_ / name, contents);
    files_.push_back({name, io::sha256_hex(contents)});
  }

  void write_manifest(RunManifest m) {
    m.outputs = files_;
    m.kernel_backend = std::string(kernels::backend_name(kernels::active_backend()));
    io::write_file(dir_ / "manifest.json", to_json(m).dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<OutputFile> files_;
};

RunManifest manifest_for(const Loaded& in, std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.input_path = in.path;
  m.input_sha256 = io::sha256_hex(in.text);
  m.seeds = in.scenario.seeds;
  return m;
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

ConvergenceReport convergence_or_short(const Trajectory& traj, double tol) {
  try {
    return detect_convergence(traj, tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooShort) throw;
    return ConvergenceReport{false, std::nullopt, traj.states.back(), traj.popularity.back(),
                             std::nullopt, std::nullopt};
  }
}

int cmd_simulate(const std::string& path, const Globals& g, std::ostream& out) {
  const Loaded in = load(path, g);
  const Scenario& sc = in.scenario.scenario;
  const Trajectory traj = simulate(sc);
  const ConvergenceReport conv = convergence_or_short(traj, sc.tol);

  json report = io::to_json(conv);
  report["records"] = traj.size();
  report["horizon"] = sc.horizon;
  report["tol"] = sc.tol;
  const auto regimes = matching_regimes(sc.params);
  report["regimes"] = json::array();
  for (auto r : regimes) report["regimes"].push_back(to_string(r));
  if (regimes.front() == Regime::NoNetwork) {
    try {
      report["theory_rate"] = no_network_rate(sc.params, sc.q);
    } catch (const Error&) {
    }
  }

  OutputDir dir(g.out_dir);
  dir.write("x.csv", render([&](std::ostream& os) { io::write_trajectory_states_csv(os, traj); }));
  dir.write("pi.csv",
            render([&](std::ostream& os) { io::write_trajectory_popularity_csv(os, traj); }));
  dir.write("z.csv", render([&](std::ostream& os) { io::write_trajectory_totals_csv(os, traj); }));
  dir.write("report.json", report.dump(2) + "\n");
  dir.write_manifest(manifest_for(in, "simulate"));

  out << json{{"converged", conv.converged},
              {"t_converged", conv.t_converged ? json(*conv.t_converged) : json(nullptr)},
              {"terminal_popularity", conv.terminal_popularity.pi},
              {"out_dir", g.out_dir}}
             .dump()
      << '\n';
  return kOk;
}

bool theory_not_applicable(ErrorCode c) {
  switch (c) {
    case ErrorCode::HypothesisViolated:
    case ErrorCode::StabilityConditionUnmet:
    case ErrorCode::SingularSystem:
    case ErrorCode::NotUnique:
    case ErrorCode::NoConvergence:
    case ErrorCode::VerificationFailed:
      return true;
    default:
      return false;
  }
}

json equilibrium_json(const Scenario& sc, bool& theory_failed) {
  const Regime regime = matching_regimes(sc.params).front();
  const AttentionTotals z0 = totals(sc.x0);
  const SchurCertificate cert = schur_certificate(sc.params, sc.p, regime, sc.q.total(), z0);
  const std::size_t n = sc.p.n();
  const std::size_t m = sc.q.m();

  json j{{"regime", to_string(regime)}, {"hypotheses", io::to_json(cert)}};
  std::vector<std::string> warnings;
  auto attempt = [&](const char* what, auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      if (!theory_not_applicable(e.code())) throw;
      theory_failed = true;
      warnings.push_back(std::string(what) + ": " + std::string(to_string(e.code())) + ": " +
                         e.what());
    }
  };

  switch (regime) {
    case Regime::NoNetwork:
      attempt("no-network limit", [&] {
        const auto lim = no_network_limit(sc.params, sc.q);
        j["pi_star"] = lim.pi.pi;
        j["fixed_point"] = lim.x.to_rows();
        j["rate"] = no_network_rate(sc.params, sc.q);
      });
      break;
    case Regime::NoRecommendation:
      attempt("decoupled fixed point", [&] {
        j["lambda1"] = spectral_radius(influence_matrix(sc.params, sc.p));
        json fp = json::array();
        for (std::size_t i = 0; i < m; ++i)
          fp.push_back(fj_decoupled_fixed_point(sc.params, sc.p, sc.q, i));
        j["fixed_point"] = fp;
        if (sc.q.total() > 0.0) {
          Vector pi(m);
          for (std::size_t i = 0; i < m; ++i) pi[i] = sc.q[i] / sc.q.total();
          j["pi_star"] = pi;
        }
      });
      break;
    case Regime::NoQuality: {
      std::optional<AugmentedSystem> sys;
      attempt("augmented limit", [&] {
        sys = augmented_limit(sc.params, sc.p, sc.q.total());
        j["z_star"] = sys->z_star;
        j["lambda1"] = sys->lambda1;
        j["lambda2"] = sys->lambda2;
      });
      std::optional<ConsensusFunctional> phi;
      attempt("consensus functional", [&] { phi = consensus_functional(sc.params, sc.p, z0); });
      if (!phi) {
        attempt("unchecked consensus product",
                [&] { phi = accumulate_consensus_product(sc.params, sc.p, z0); });
        j["phi_unchecked"] = true;
      }
      std::optional<Vector> phi_tilde;
      if (sys) {
        attempt("stationary distribution", [&] {
          phi_tilde = stationary_distribution(RowStochasticMatrix::validated(sys->u_tilde));
        });
      }
      if (phi) {
        j["phi"] = phi->phi;
        j["phi_steps"] = phi->steps;
        json values = json::array();
        for (std::size_t i = 0; i < m; ++i) {
          const Vector s0 = augmented_state(sc.x0, i);
          double v = 0.0;
          for (std::size_t k = 0; k <= n; ++k) v += phi->phi[k] * s0[k];
          values.push_back(v);
        }
        j["consensus_values"] = values;
      }
      if (phi_tilde) j["phi_tilde"] = *phi_tilde;
      if (phi && phi_tilde) {
        double l1 = 0.0;
        for (std::size_t k = 0; k <= n; ++k) l1 += std::abs(phi->phi[k] - (*phi_tilde)[k]);
        j["phi_l1_distance"] = l1;
      }
      if (sys && sys->lambda1 < 1.0) {
        double dev = 0.0;
        for (double z : z0.z) dev += std::abs(z - 1.0);
        const PhiBound b = phi_distance_bound(sys->lambda1, n, dev);
        j["phi_distance_bound"] = {{"value", b.value}, {"constant_omitted", b.constant_omitted}};
      }
      break;
    }
    case Regime::General:
      attempt("general fixed point", [&] {
        const auto sys = augmented_limit(sc.params, sc.p, sc.q.total());
        j["z_star"] = sys.z_star;
        j["lambda1"] = sys.lambda1;
        j["lambda2"] = sys.lambda2;
        json fp = json::array();
        for (std::size_t i = 0; i < m; ++i) fp.push_back(general_fixed_point(sys, sc.q, i));
        j["fixed_point"] = fp;
      });
      break;
  }
  j["warnings"] = warnings;
  theory_failed = theory_failed || !cert.hypotheses_met();
  return j;
}

int cmd_equilibrium(const std::string& path, const Globals& g, std::ostream& out) {
  const Loaded in = load(path, g);
  bool failed = false;
  const json j = equilibrium_json(in.scenario.scenario, failed);
  out << j.dump(2) << '\n';
  return failed ? kHypotheses : kOk;
}

int verification_exit(const VerificationReport& rep, double tol) {
  const auto& d = rep.convergence.theory_delta;
  return d && *d <= 100.0 * tol ? kOk : kVerification;
}

int cmd_verify(const std::string& path, const Globals& g, std::ostream& out) {
  const Loaded in = load(path, g);
  const Scenario& sc = in.scenario.scenario;
  const VerificationReport rep = verify_regime(sc);
  const int code = verification_exit(rep, sc.tol);
  json report = io::to_json(rep);
  report["tolerance"] = 100.0 * sc.tol;
  report["passed"] = code == kOk;

  OutputDir dir(g.out_dir);
  dir.write("report.json", report.dump(2) + "\n");
  dir.write_manifest(manifest_for(in, "verify"));
  out << json{{"regime", to_string(rep.regime)},
              {"converged", rep.convergence.converged},
              {"theory_delta", report["theory_delta"]},
              {"passed", code == kOk},
              {"warnings", rep.warnings}}
             .dump()
      << '\n';
  return code;
}

int cmd_series(long long n, double lam, std::ostream& out) {
  if (n < 0) throw Error(ErrorCode::DomainError, "series: n must be >= 0");
  if (!(lam > 0.0 && lam < 1.0)) throw Error(ErrorCode::DomainError, "series: lambda must lie in (0,1)");
  const auto nn = static_cast<std::size_t>(n);
  const double value = power_series_sum(nn, lam);
  const Vector coeffs = nn == 0 ? Vector{1.0} : series_polynomial(nn).coefficients;

  // Brute force: sum k^n lam^k until the terms are past their peak and negligible.
  const double peak = static_cast<double>(nn) / -std::log(lam);
  double partial = 0.0;
  std::size_t terms = 0;
  for (std::size_t k = 0; k < 100'000'000; ++k) {
    const double term = (k == 0 ? (nn == 0 ? 1.0 : 0.0)
                                : std::pow(static_cast<double>(k), static_cast<double>(nn)) *
                                      std::pow(lam, static_cast<double>(k)));
    partial += term;
    terms = k + 1;
    if (static_cast<double>(k) > peak && term < 1e-18 * partial) break;
  }
  out << json{{"n", nn},
              {"lambda", lam},
              {"value", value},
              {"coefficients", coeffs},
              {"partial_sum", partial},
              {"partial_terms", terms},
              {"relative_difference", std::abs(value - partial) / std::abs(value)}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_gen_graph(long long n, double p, std::uint64_t seed, bool write_file, const Globals& g,
                  std::ostream& out) {
  if (n < 1) throw Error(ErrorCode::DomainError, "gen-graph: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "gen-graph: p must lie in [0,1]");
  if (g.seed_override) seed = derive_seed(*g.seed_override, 0);
  const RowStochasticMatrix graph = erdos_renyi(static_cast<std::size_t>(n), p, seed);
  const json j{{"type", "explicit"},
               {"rows", graph.matrix().to_rows()},
               {"source", {{"type", "erdos_renyi"}, {"n", n}, {"p", p}, {"seed", seed}}}};
  if (write_file) {
    OutputDir dir(g.out_dir);
    dir.write("graph.json", j.dump(2) + "\n");
  }
  out << j.dump() << '\n';
  return kOk;
}

struct SweepOptions {
  std::string protocol;
  std::size_t count = 10;
  std::uint64_t seed = 0;
  std::size_t users = 20;
  std::size_t influencers = 3;
  double edge_probability = 0.2;
  std::int64_t horizon = 10000;
  double tol = 1e-10;
  bool lift = false;
};

int cmd_sweep(const SweepOptions& o, const Globals& g, std::ostream& out) {
  const Protocol protocol = protocol_from_string(o.protocol);
  const std::uint64_t base = g.seed_override.value_or(o.seed);
  OutputDir root(g.out_dir);

  std::vector<json> rows(o.count);
  std::vector<int> codes(o.count, kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < o.count;) {
      json row{{"index", k}, {"dir", "run_" + std::to_string(k)}};
      try {
        ProtocolSpec spec;
        spec.protocol = protocol;
        spec.seed = derive_seed(base, k);
        spec.users = o.users;
        spec.influencers = o.influencers;
        spec.edge_probability = o.edge_probability;
        spec.horizon = o.horizon;
        spec.tol = o.tol;
        spec.lift_totals_to_one = o.lift;
        const Scenario sc = sample_scenario(spec);
        const VerificationReport rep = verify_regime(sc);
        codes[k] = verification_exit(rep, sc.tol);
        OutputDir dir(fs::path(g.out_dir) / row["dir"].get<std::string>());
        dir.write("scenario.json", scenario_to_json(sc).dump(2) + "\n");
        json report = io::to_json(rep);
        report["passed"] = codes[k] == kOk;
        dir.write("report.json", report.dump(2) + "\n");
        row["seed"] = spec.seed;
        row["regime"] = to_string(rep.regime);
        row["converged"] = rep.convergence.converged;
        row["theory_delta"] = report["theory_delta"];
        row["hypotheses_met"] = rep.certificate.hypotheses_met();
      } catch (const Error& e) {
        codes[k] = exit_code_for(e.code());
        row["error"] = to_string(e.code());
        row["message"] = e.what();
      }
      row["exit_code"] = codes[k];
      rows[k] = std::move(row);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(g.jobs, static_cast<unsigned>(o.count)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const int code = o.count ? *std::max_element(codes.begin(), codes.end()) : kOk;
  const json summary{{"protocol", o.protocol}, {"seed", base}, {"runs", rows}, {"exit_code", code}};
  root.write("summary.json", summary.dump(2) + "\n");
  out << summary.dump() << '\n';
  return code;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DomainError:
    case ErrorCode::UnknownProtocol:
      return kUsage;
    case ErrorCode::HypothesisViolated:
    case ErrorCode::StabilityConditionUnmet:
    case ErrorCode::AmbiguousRegime:
      return kHypotheses;
    case ErrorCode::VerificationFailed:
      return kVerification;
    default:
      return kRuntime;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention dynamics under social influence, recommendations and quality."};
  app.name("popdyn");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--seed-override", g.seed_override,
                 "Replace the seeds of every sampled part of the scenario");
  app.add_option("--jobs", g.jobs, "Parallel scenarios for sweep")->check(CLI::PositiveNumber);

  std::string scenario_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario and write trajectories");
  simulate_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  auto* equilibrium_cmd =
      app.add_subcommand("equilibrium", "Print the predicted limit without simulating");
  equilibrium_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  auto* verify_cmd = app.add_subcommand("verify", "Simulate and compare against the prediction");
  verify_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();

  long long series_n = 0;
  double series_lambda = 0.0;
  auto* series_cmd = app.add_subcommand("series", "Closed form of sum_k k^n lambda^k");
  series_cmd->add_option("n", series_n, "Exponent n >= 0")->required();
  series_cmd->add_option("lambda", series_lambda, "Ratio in (0,1)")->required();

  long long graph_n = 20;
  double graph_p = 0.2;
  std::uint64_t graph_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen-graph", "Emit an Erdos-Renyi graph as JSON");
  gen_cmd->add_option("--n", graph_n, "Number of nodes");
  gen_cmd->add_option("--p", graph_p, "Edge probability");
  gen_cmd->add_option("--seed", graph_seed, "Generator seed");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Verify many sampled scenarios of one protocol");
  sweep_cmd->add_option("--protocol", sweep.protocol, "fig1, fig2 or fig3")->required();
  sweep_cmd->add_option("--count", sweep.count, "Number of scenarios");
  sweep_cmd->add_option("--seed", sweep.seed, "Base seed");
  sweep_cmd->add_option("--users", sweep.users, "Users per scenario")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--influencers", sweep.influencers, "Influencers per scenario")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--p", sweep.edge_probability, "Edge probability")
      ->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--horizon", sweep.horizon, "Steps per scenario")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--tol", sweep.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--lift-totals", sweep.lift, "Lift initial totals below 1 up to 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what(), kUsage);
    return kUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(scenario_path, g, out);
    if (*equilibrium_cmd) return cmd_equilibrium(scenario_path, g, out);
    if (*verify_cmd) return cmd_verify(scenario_path, g, out);
    if (*series_cmd) return cmd_series(series_n, series_lambda, out);
    if (*gen_cmd) return cmd_gen_graph(graph_n, graph_p, graph_seed, app.count("--out-dir") > 0, g, out);
    if (*sweep_cmd) return cmd_sweep(sweep, g, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    print_error(err, to_string(e.code()), e.what(), code, e.at());
    return code;
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what(), kRuntime);
    return kRuntime;
  }
  return kUsage;
}

}  // namespace popdyn::cli
