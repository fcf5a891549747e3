#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "popdyn/cli.hpp"
#include "popdyn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using popdyn::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "popdyn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("popdyn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& contents) const {
    popdyn::io::write_file(path / name, contents);
    return (path / name).string();
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string scenario(const std::string& params, const std::string& x0 = R"({"uniform_seed": 3})",
                     int horizon = 1000, const std::string& quality = "[0.3, 0.7, 0.5]") {
  return R"({"graph": {"type": "erdos_renyi", "n": 20, "p": 0.2, "seed": 1}, "params": )" + params +
         R"(, "quality": )" + quality + R"(, "x0": )" + x0 +
         R"(, "horizon": )" + std::to_string(horizon) + "}";
}

void check_error_line(const std::string& err, int code) {
  REQUIRE_FALSE(err.empty());
  CHECK(err.find('\n') == err.size() - 1);
  const json j = json::parse(err);
  CHECK(j["exit_code"] == code);
  CHECK(j.contains("error"));
  CHECK(j.contains("message"));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes trajectories, report and manifest") {
  TempDir tmp;
  const auto path = tmp.file("fig1.json", scenario(R"({"protocol": "fig1", "seed": 2})"));
  const auto r = invoke({"simulate", path, "--out-dir", tmp.sub("out")});
  REQUIRE(r.code == 0);
  const fs::path out = tmp.sub("out");
  for (const char* f : {"x.csv", "pi.csv", "z.csv", "report.json", "manifest.json"})
    CHECK(fs::exists(out / f));

  std::istringstream pi(popdyn::io::read_file(out / "pi.csv"));
  std::string line, last;
  std::getline(pi, line);
  CHECK(line == "t,pi_0,pi_1,pi_2");
  while (std::getline(pi, line)) last = line;
  std::vector<double> values;
  std::stringstream cells(last);
  for (std::string c; std::getline(cells, c, ',');) values.push_back(std::stod(c));
  REQUIRE(values.size() == 4);
  CHECK(values[0] == 1000);
  CHECK(values[1] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(values[2] == doctest::Approx(0.7 / 1.5).epsilon(1e-9));
  CHECK(values[3] == doctest::Approx(0.5 / 1.5).epsilon(1e-9));

  const json manifest = json::parse(popdyn::io::read_file(out / "manifest.json"));
  CHECK(manifest["input"]["sha256"] == popdyn::io::sha256_hex(popdyn::io::read_file(path)));
  for (const auto& o : manifest["outputs"])
    CHECK(o["sha256"] == popdyn::io::sha256_hex(popdyn::io::read_file(out / o["path"].get<std::string>())));
  CHECK(manifest["seeds"]["graph"] == 1);
}

TEST_CASE("re-running simulate gives byte-identical outputs") {
  TempDir tmp;
  const auto path = tmp.file("s.json", scenario(R"({"protocol": "fig3", "seed": 2})", R"({"uniform_seed": 3})", 200));
  REQUIRE(invoke({"simulate", path, "--out-dir", tmp.sub("a")}).code == 0);
  REQUIRE(invoke({"simulate", path, "--out-dir", tmp.sub("b")}).code == 0);
  for (const char* f : {"x.csv", "pi.csv", "z.csv", "report.json", "manifest.json"})
    CHECK(popdyn::io::read_file(fs::path(tmp.sub("a")) / f) ==
          popdyn::io::read_file(fs::path(tmp.sub("b")) / f));
}

TEST_CASE("malformed JSON exits 2 with line and column") {
  TempDir tmp;
  const auto path = tmp.file("bad.json", "{\n  \"graph\": {,\n}");
  const auto r = invoke({"simulate", path, "--out-dir", tmp.sub("o")});
  CHECK(r.code == 2);
  check_error_line(r.err, 2);
  CHECK(r.err.find("line 2, column 13") != std::string::npos);
}

TEST_CASE("all-zero initial attention exits 3 at t = 0") {
  TempDir tmp;
  std::string zeros = "[";
  for (int v = 0; v < 20; ++v) zeros += std::string(v ? "," : "") + "[0,0,0]";
  zeros += "]";
  const auto path =
      tmp.file("z.json", scenario(R"({"protocol": "fig3", "seed": 2})", R"({"explicit": )" + zeros + "}"));
  const auto r = invoke({"simulate", path, "--out-dir", tmp.sub("o")});
  CHECK(r.code == 3);
  check_error_line(r.err, 3);
  const json j = json::parse(r.err);
  CHECK(j["error"] == "ZeroTotalAttention");
  CHECK(j["at"] == 0);
}

TEST_CASE("equilibrium outputs per regime") {
  TempDir tmp;
  SUBCASE("no recommendations: quality level") {
    std::string a = "[", b = "[", c = "[";
    for (int v = 0; v < 20; ++v) {
      const std::string sep = v ? "," : "";
      a += sep + "0.6";
      b += sep + "0";
      c += sep + "0.4";
    }
    const auto path = tmp.file(
        "b0.json", scenario(R"({"alpha": )" + a + R"(], "beta": )" + b + R"(], "gamma": )" + c + "]}"));
    const auto r = invoke({"equilibrium", path});
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["regime"] == "no_recommendation");
    for (double v : j["fixed_point"][1].get<std::vector<double>>())
      CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("no quality: phi and phi tilde") {
    const auto path = tmp.file(
        "g0.json", scenario(R"({"protocol": "fig2", "seed": 2})", R"({"uniform_seed": 3, "lift_totals_to_one": true})"));
    const auto r = invoke({"equilibrium", path});
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["regime"] == "no_quality");
    CHECK(j["phi"].size() == 21);
    CHECK(j["phi_tilde"].size() == 21);
    CHECK(j.contains("phi_l1_distance"));
    CHECK(j.contains("phi_distance_bound"));
  }
  SUBCASE("purely social: hypotheses unmet") {
    std::string ones = "[", zeros = "[";
    for (int v = 0; v < 20; ++v) {
      ones += std::string(v ? "," : "") + "1";
      zeros += std::string(v ? "," : "") + "0";
    }
    const auto path = tmp.file(
        "a1.json", scenario(R"({"alpha": )" + ones + R"(], "beta": )" + zeros + R"(], "gamma": )" + zeros + "]}"));
    const auto r = invoke({"equilibrium", path});
    CHECK(r.code == 4);
    const json j = json::parse(r.out);
    CHECK(j["hypotheses"]["deficiency_set"].empty());
    CHECK(j["hypotheses"]["hypotheses_met"] == false);
  }
}

TEST_CASE("verify exit codes") {
  TempDir tmp;
  SUBCASE("fig2 passes with consensus") {
    const auto path = tmp.file(
        "f2.json", scenario(R"({"protocol": "fig2", "seed": 2})", R"({"uniform_seed": 3, "lift_totals_to_one": true})", 10000));
    const auto r = invoke({"verify", path, "--out-dir", tmp.sub("v")});
    CHECK(r.code == 0);
    const json rep = json::parse(popdyn::io::read_file(fs::path(tmp.sub("v")) / "report.json"));
    for (double g : rep["consensus_gap"].get<std::vector<double>>()) CHECK(g <= 1e-8);
  }
  SUBCASE("fig3 passes with a hypotheses warning") {
    const auto path = tmp.file("f3.json", scenario(R"({"protocol": "fig3", "seed": 2})", R"({"uniform_seed": 3})", 10000));
    const auto r = invoke({"verify", path, "--out-dir", tmp.sub("v")});
    CHECK(r.code == 0);
    const json rep = json::parse(popdyn::io::read_file(fs::path(tmp.sub("v")) / "report.json"));
    REQUIRE_FALSE(rep["warnings"].empty());
    CHECK(rep["warnings"][0].get<std::string>().find("hypotheses unmet") != std::string::npos);
  }
  SUBCASE("truncated horizon fails verification") {
    const auto path = tmp.file("h3.json", scenario(R"({"protocol": "fig1", "seed": 2})", R"({"uniform_seed": 3})", 3));
    const auto r = invoke({"verify", path, "--out-dir", tmp.sub("v")});
    CHECK(r.code == 5);
    const json rep = json::parse(popdyn::io::read_file(fs::path(tmp.sub("v")) / "report.json"));
    CHECK(rep["converged"] == false);
  }
}

TEST_CASE("series subcommand") {
  auto r = invoke({"series", "1", "0.5"});
  CHECK(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["value"] == 2.0);
  CHECK(j["coefficients"] == json::array({1.0}));
  r = invoke({"series", "2", "0.5"});
  j = json::parse(r.out);
  CHECK(j["value"] == 6.0);
  CHECK(j["coefficients"] == json::array({1.0, 1.0}));
  CHECK(j["relative_difference"].get<double>() <= 1e-12);
  r = invoke({"series", "1", "1.5"});
  CHECK(r.code == 2);
  check_error_line(r.err, 2);
}

TEST_CASE("gen-graph and usage errors") {
  auto r = invoke({"gen-graph", "--n", "4", "--p", "0.5", "--seed", "3"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["type"] == "explicit");
  CHECK(j["rows"].size() == 4);
  CHECK(invoke({"gen-graph", "--n", "4", "--p", "0.5", "--seed", "3"}).out == r.out);

  r = invoke({});
  CHECK(r.code == 2);
  check_error_line(r.err, 2);
  r = invoke({"simulate"});
  CHECK(r.code == 2);
  r = invoke({"simulate", "/nonexistent/scenario.json"});
  CHECK(r.code == 3);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("sweep runs scenarios in parallel subdirectories") {
  TempDir tmp;
  const auto r = invoke({"sweep", "--protocol", "fig1", "--count", "4", "--seed", "5", "--horizon",
                         "500", "--jobs", "3", "--out-dir", tmp.sub("sw")});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["runs"].size() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(fs::exists(fs::path(tmp.sub("sw")) / ("run_" + std::to_string(k)) / "report.json"));
  const auto serial = invoke({"sweep", "--protocol", "fig1", "--count", "4", "--seed", "5",
                              "--horizon", "500", "--out-dir", tmp.sub("sw1")});
  CHECK(serial.out == r.out);
  CHECK(invoke({"sweep", "--protocol", "fig7", "--out-dir", tmp.sub("x")}).code == 2);
}

TEST_CASE("exit code table is total") {
  using popdyn::ErrorCode;
  for (int c = 0; c <= static_cast<int>(ErrorCode::IoError); ++c) {
    const int code = popdyn::cli::exit_code_for(static_cast<ErrorCode>(c));
    CHECK((code == 2 || code == 3 || code == 4 || code == 5));
  }
}

}  // TEST_SUITE
