#include "popdyn/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "popdyn/error.hpp"

namespace popdyn::io {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json matrix_to_json(const RowStochasticMatrix& p) {
  return json{{"n", p.n()}, {"rows", p.matrix().to_rows()}};
}

RowStochasticMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows")) {
    throw Error(ErrorCode::ParseError, "matrix JSON needs a \"rows\" array");
  }
  const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
  Matrix m = Matrix::from_rows(rows);
  if (j.contains("n") && j.at("n").get<std::size_t>() != m.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix JSON: \"n\" disagrees with row count");
  }
  try {
    return RowStochasticMatrix::validated(m);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    return build_row_stochastic(m);
  }
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size() && cell.find_first_not_of(" \t\r", used) != std::string::npos) {
          throw std::invalid_argument(cell);
        }
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "CSV line " + std::to_string(rows.size() + 1) +
                                               ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return Matrix::from_rows(rows);
}

void write_state_csv_header(std::ostream& os) { os << "t,user,influencer,x\n"; }

void write_state_csv_rows(std::ostream& os, const AttentionState& state) {
  for (std::size_t v = 0; v < state.users(); ++v)
    for (std::size_t i = 0; i < state.influencers(); ++i)
      os << state.t() << ',' << v << ',' << i << ',' << format_double(state(v, i)) << '\n';
}

void write_state_csv(std::ostream& os, const AttentionState& state) {
  write_state_csv_header(os);
  write_state_csv_rows(os, state);
}

void write_trajectory_states_csv(std::ostream& os, const Trajectory& traj) {
  write_state_csv_header(os);
  for (const auto& s : traj.states) write_state_csv_rows(os, s);
}

void write_trajectory_popularity_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t m = traj.size() ? traj.popularity.front().pi.size() : 0;
  os << 't';
  for (std::size_t i = 0; i < m; ++i) os << ",pi_" << i;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k];
    for (double v : traj.popularity[k].pi) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_trajectory_totals_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.size() ? traj.totals.front().z.size() : 0;
  os << 't';
  for (std::size_t v = 0; v < n; ++v) os << ",z_" << v;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k];
    for (double v : traj.totals[k].z) os << ',' << format_double(v);
    os << '\n';
  }
}

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json node_set_json(const NodeSet& s) { return json(std::vector<std::size_t>(s.begin(), s.end())); }

}  // namespace

json to_json(const ConvergenceReport& rep) {
  return json{
      {"converged", rep.converged},
      {"t_converged", optional_json(rep.t_converged)},
      {"terminal_t", rep.terminal_state.t()},
      {"terminal_state", rep.terminal_state.users_by_influencers().to_rows()},
      {"terminal_popularity", rep.terminal_popularity.pi},
      {"estimated_rate", optional_json(rep.estimated_rate)},
      {"theory_delta", optional_json(rep.theory_delta)},
  };
}

json to_json(const SchurCertificate& cert) {
  return json{
      {"regime", to_string(cert.regime)},
      {"deficiency_set", node_set_json(cert.deficiency_set)},
      {"all_reach_deficiency", cert.all_reach_deficiency},
      {"aperiodic_deficient", node_set_json(cert.aperiodic_deficient)},
      {"all_reach_aperiodic_deficiency", cert.all_reach_aperiodic_deficiency},
      {"rho_ap", cert.rho_ap},
      {"q_tot", cert.q_tot},
      {"some_beta_below_one", optional_json(cert.some_beta_below_one)},
      {"positive_quality", optional_json(cert.positive_quality)},
      {"q_tot_at_least_one", optional_json(cert.q_tot_at_least_one)},
      {"z0_at_least_one", optional_json(cert.z0_at_least_one)},
      {"hypotheses_met", cert.hypotheses_met()},
      {"unmet", cert.unmet()},
  };
}

json to_json(const VerificationReport& rep) {
  json j = to_json(rep.convergence);
  j["regime"] = to_string(rep.regime);
  j["hypotheses"] = to_json(rep.certificate);
  j["warnings"] = rep.warnings;
  j["consensus_gap"] = rep.consensus_gap;
  j["predicted"] = rep.predicted;
  if (rep.phi) {
    j["phi"] = rep.phi->phi;
    j["phi_steps"] = rep.phi->steps;
  }
  if (rep.phi_tilde) j["phi_tilde"] = *rep.phi_tilde;
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace popdyn::io
