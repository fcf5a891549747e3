#include "popdyn/scenario_file.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "popdyn/error.hpp"
#include "popdyn/io.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ParseError, "key '" + key + "': " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& path) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      fail(path.empty() ? k : path + "." + k, "unknown key");
    }
  }
}

const json& require_object(const json& j, const std::string& key) {
  if (!j.is_object()) fail(key, "must be an object");
  return j;
}

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) fail(key, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(key, "must be finite");
  return v;
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  if (!j.is_number_unsigned()) fail(key, "must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::int64_t get_positive_int(const json& j, const std::string& key) {
  if (!j.is_number_unsigned()) fail(key, "must be an integer >= 1");
  const auto v = j.get<std::uint64_t>();
  if (v < 1 || v > static_cast<std::uint64_t>(INT64_MAX)) fail(key, "must be an integer >= 1");
  return static_cast<std::int64_t>(v);
}

Vector get_vector(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) fail(key, "must be a nonempty array of numbers");
  Vector out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_real(j[k], key + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Matrix get_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) fail(key, "must be a nonempty array of rows");
  std::vector<Vector> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    rows.push_back(get_vector(j[r], key + "[" + std::to_string(r) + "]"));
    if (rows.back().size() != rows.front().size()) {
      fail(key + "[" + std::to_string(r) + "]", "row length differs from row 0");
    }
  }
  return Matrix::from_rows(rows);
}

// Converts a model-level validation failure into a parse error on `key`.
template <class F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    fail(key, std::string(to_string(e.code())) + ": " + e.what());
  }
}

RowStochasticMatrix parse_graph(const json& g, ResolvedSeeds& seeds,
                                std::optional<std::uint64_t> seed_override) {
  require_object(g, "graph");
  const json& type = require(g, "type", "graph");
  if (!type.is_string()) fail("graph.type", "must be a string");
  const auto t = type.get<std::string>();
  if (t == "erdos_renyi") {
    reject_unknown(g, {"type", "n", "p", "seed"}, "graph");
    const auto n = get_positive_int(require(g, "n", "graph"), "graph.n");
    const double p = get_real(require(g, "p", "graph"), "graph.p");
    if (p < 0.0 || p > 1.0) fail("graph.p", "must lie in [0,1]");
    std::uint64_t seed = get_seed(require(g, "seed", "graph"), "graph.seed");
    if (seed_override) seed = derive_seed(*seed_override, 0);
    seeds.graph = seed;
    return wrap("graph", [&] { return erdos_renyi(static_cast<std::size_t>(n), p, seed); });
  }
  if (t == "explicit") {
    reject_unknown(g, {"type", "rows", "source"}, "graph");
    const Matrix m = get_matrix(require(g, "rows", "graph"), "graph.rows");
    return wrap("graph.rows", [&] { return io::matrix_from_json(json{{"rows", m.to_rows()}}); });
  }
  fail("graph.type", "must be \"erdos_renyi\" or \"explicit\", got \"" + t + "\"");
}

ModelParams parse_params(const json& p, std::size_t n, ResolvedSeeds& seeds,
                         std::optional<std::uint64_t> seed_override) {
  require_object(p, "params");
  if (p.contains("protocol")) {
    reject_unknown(p, {"protocol", "seed"}, "params");
    const json& proto = p.at("protocol");
    if (!proto.is_string()) fail("params.protocol", "must be a string");
    const Protocol protocol = wrap("params.protocol", [&] {
      return protocol_from_string(proto.get<std::string>());
    });
    std::uint64_t seed = get_seed(require(p, "seed", "params"), "params.seed");
    if (seed_override) seed = derive_seed(*seed_override, 1);
    seeds.params = seed;
    return sample_params(protocol, n, seed);
  }
  reject_unknown(p, {"alpha", "beta", "gamma"}, "params");
  Vector a = get_vector(require(p, "alpha", "params"), "params.alpha");
  Vector b = get_vector(require(p, "beta", "params"), "params.beta");
  Vector c = get_vector(require(p, "gamma", "params"), "params.gamma");
  for (const auto& [name, v] : {std::pair{"alpha", &a}, {"beta", &b}, {"gamma", &c}}) {
    if (v->size() != n) {
      fail(std::string("params.") + name,
           "has " + std::to_string(v->size()) + " entries, graph has " + std::to_string(n) +
               " nodes");
    }
  }
  return wrap("params", [&] { return ModelParams(std::move(a), std::move(b), std::move(c)); });
}

AttentionState parse_x0(const json& x, std::size_t n, std::size_t m, ResolvedSeeds& seeds,
                        std::optional<std::uint64_t> seed_override) {
  require_object(x, "x0");
  if (x.contains("uniform_seed")) {
    reject_unknown(x, {"uniform_seed", "lift_totals_to_one"}, "x0");
    std::uint64_t seed = get_seed(x.at("uniform_seed"), "x0.uniform_seed");
    if (seed_override) seed = derive_seed(*seed_override, 2);
    bool lift = false;
    if (x.contains("lift_totals_to_one")) {
      if (!x.at("lift_totals_to_one").is_boolean()) fail("x0.lift_totals_to_one", "must be a boolean");
      lift = x.at("lift_totals_to_one").get<bool>();
    }
    seeds.x0 = seed;
    return AttentionState(sample_attention(n, m, seed, lift));
  }
  reject_unknown(x, {"explicit"}, "x0");
  const Matrix mat = get_matrix(require(x, "explicit", "x0"), "x0.explicit");
  if (mat.rows() != n || mat.cols() != m) {
    fail("x0.explicit", "must be " + std::to_string(n) + " x " + std::to_string(m) +
                            " (users x influencers), got " + std::to_string(mat.rows()) + " x " +
                            std::to_string(mat.cols()));
  }
  return wrap("x0.explicit", [&] { return AttentionState(mat); });
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

LoadedScenario parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (auto pos = msg.find(": ", msg.find("column")); pos != std::string::npos) {
      msg = msg.substr(pos + 2);
    }
    throw Error(ErrorCode::ParseError,
                "malformed JSON at " + locate(text, e.byte) + ": " + msg);
  }
  if (!doc.is_object()) fail("<root>", "must be an object");
  reject_unknown(doc,
                 {"description", "graph", "params", "quality", "x0", "horizon", "tol",
                  "record_every", "seed"},
                 "");

  ResolvedSeeds seeds;
  if (doc.contains("seed")) seeds.scenario = get_seed(doc.at("seed"), "seed");
  if (seed_override) seeds.scenario = *seed_override;

  RowStochasticMatrix p = parse_graph(require(doc, "graph", ""), seeds, seed_override);
  ModelParams params = parse_params(require(doc, "params", ""), p.n(), seeds, seed_override);
  QualityVector q = wrap("quality", [&] {
    return QualityVector(get_vector(require(doc, "quality", ""), "quality"));
  });
  AttentionState x0 = parse_x0(require(doc, "x0", ""), p.n(), q.m(), seeds, seed_override);

  Scenario sc{std::move(p), std::move(params), std::move(q), std::move(x0)};
  sc.seed = seeds.scenario;
  if (doc.contains("horizon")) sc.horizon = get_positive_int(doc.at("horizon"), "horizon");
  if (doc.contains("tol")) {
    sc.tol = get_real(doc.at("tol"), "tol");
    if (!(sc.tol > 0.0)) fail("tol", "must be positive");
  }
  if (doc.contains("record_every")) {
    sc.record_every = get_positive_int(doc.at("record_every"), "record_every");
  }
  return LoadedScenario{std::move(sc), seeds};
}

nlohmann::json scenario_to_json(const Scenario& sc) {
  return json{
      {"graph", {{"type", "explicit"}, {"rows", sc.p.matrix().to_rows()}}},
      {"params",
       {{"alpha", sc.params.alpha()}, {"beta", sc.params.beta()}, {"gamma", sc.params.gamma()}}},
      {"quality", sc.q.values()},
      {"x0", {{"explicit", sc.x0.users_by_influencers().to_rows()}}},
      {"horizon", sc.horizon},
      {"tol", sc.tol},
      {"record_every", sc.record_every},
      {"seed", sc.seed},
  };
}

nlohmann::json to_json(const RunManifest& m) {
  auto opt = [](const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); };
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}});
  return json{
      {"version", m.version},
      {"command", m.command},
      {"input", {{"path", m.input_path}, {"sha256", m.input_sha256}}},
      {"seeds",
       {{"scenario", m.seeds.scenario},
        {"graph", opt(m.seeds.graph)},
        {"params", opt(m.seeds.params)},
        {"x0", opt(m.seeds.x0)}}},
      {"kernel_backend", m.kernel_backend},
      {"outputs", outputs},
  };
}

}  // namespace popdyn
