#pragma once

// JSON and CSV encodings. Doubles are written with 17 significant digits so
// they read back bit-exactly.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "popdyn/equilibria.hpp"
#include "popdyn/graph.hpp"
#include "popdyn/model.hpp"
#include "popdyn/sim.hpp"

namespace popdyn::io {

using nlohmann::json;

std::string format_double(double x);

/// {"n": int, "rows": [[...], ...]}
json matrix_to_json(const RowStochasticMatrix& p);
/// Rows already stochastic within kRowSumTolerance are kept verbatim,
/// otherwise each row is divided by its sum.
RowStochasticMatrix matrix_from_json(const json& j);

/// One row per line, comma separated.
void write_matrix_csv(std::ostream& os, const Matrix& m);
Matrix read_matrix_csv(std::istream& is);

/// Header "t,user,influencer,x".
void write_state_csv_header(std::ostream& os);
void write_state_csv_rows(std::ostream& os, const AttentionState& state);
void write_state_csv(std::ostream& os, const AttentionState& state);

/// "t,user,influencer,x" over every record.
void write_trajectory_states_csv(std::ostream& os, const Trajectory& traj);
/// Wide format, one line per record: "t,pi_0,...,pi_{m-1}".
void write_trajectory_popularity_csv(std::ostream& os, const Trajectory& traj);
/// Wide format, one line per record: "t,z_0,...,z_{n-1}".
void write_trajectory_totals_csv(std::ostream& os, const Trajectory& traj);

json to_json(const ConvergenceReport& rep);
json to_json(const SchurCertificate& cert);
json to_json(const VerificationReport& rep);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace popdyn::io
