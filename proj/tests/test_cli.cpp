#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diqkd/cli.hpp"
#include "diqkd/io.hpp"
#include "diqkd/sdp.hpp"

using namespace diqkd;
using namespace diqkd::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "diqkd");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "diqkd_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("csv serialization") {
  BoundRow r;
  r.s = 2.5;
  r.phi_a = 0.1;
  r.c_bar = 0.3;
  r.r_inf = -0.25;
  r.k_inf = -0.125;
  const std::string csv = to_csv({r});
  CHECK(csv == std::string(kCsvHeader) + "\n2.5,0.1,0,0,0,0.3,-0.25,-0.125,ok\n");
  const std::vector<BoundRow> back = rows_from_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].c_bar == 0.3);
  CHECK(back[0].status == "ok");
  CHECK_THROWS_AS(rows_from_csv("s,phi_a\n1,2\n"), ConfigError);
  CHECK_THROWS_AS(serialize({}, RunConfig{}), ConfigError);
}

TEST_CASE("json round trip keeps every field") {
  BoundRow r;
  r.s = 2.0 + 1.0 / 3.0;
  r.phi_a = 0.1234567890123456789;
  r.n_star = 1e-17;
  r.c_bar = 0.7;
  r.status = kStatusNumerical;
  r.objective = ObjectiveKind::frobenius;
  r.segments_solved = 42;
  r.detail = "x";
  RunConfig cfg;
  cfg.format = Format::json;
  const std::string text = to_json({r, r}, cfg);
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["meta"]["version"] == "0.1.0");
  CHECK(doc["meta"]["seed"] == 0);
  CHECK_FALSE(doc["meta"].contains("timestamp"));
  CHECK(doc["rows"][0]["grade"] == "analysis-grade");
  const std::vector<BoundRow> back = rows_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].s == r.s);
  CHECK(back[0].phi_a == r.phi_a);
  CHECK(back[0].n_star == r.n_star);
  CHECK(back[0].status == r.status);
  CHECK(back[0].objective == r.objective);
  CHECK(back[0].segments_solved == 42);
  CHECK_THROWS_AS(rows_from_json("{\"rows\": [{\"s\": 1}]}"), ConfigError);
  CHECK_THROWS_AS(rows_from_json("not json"), ConfigError);

  cfg.timestamp = true;
  CHECK(nlohmann::json::parse(to_json({r}, cfg))["meta"].contains("timestamp"));
}

TEST_CASE("exit codes") {
  const Run tsirelson = invoke({"bound", "--s", "2.9"});
  CHECK(tsirelson.code == kExitInfeasible);
  CHECK(tsirelson.err.find("2.8284271247461903") != std::string::npos);

  CHECK(invoke({"bound", "--s", "1.5"}).code == kExitConfig);
  CHECK(invoke({"sweep", "--s-min", "2.5", "--s-max", "2.4"}).code == kExitConfig);
  CHECK(invoke({"sweep", "--steps", "0"}).code == kExitConfig);
  CHECK(invoke({"sweep", "--format", "xml"}).code == kExitConfig);
  CHECK(invoke({"keyrate", "--p", "1.5"}).code == kExitConfig);
  CHECK(invoke({"sweep", "--eps0", "2"}).code == kExitConfig);
  CHECK(invoke({}).code == kExitConfig);
  CHECK(invoke({"--help"}).code == kExitOk);

  const auto dir = scratch("missing_dir") / "nested" / "out.csv";
  CHECK(invoke({"bound", "--s", "2.5", "--eps0", "0.3", "-o", dir.string()}).code == kExitIo);
}

TEST_CASE("bound writes one row atomically") {
  const auto path = scratch("bound.csv");
  std::filesystem::remove(path);
  const Run r = invoke({"bound", "--s", "2.5", "--eps0", "0.3", "-o", path.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.empty());
  const std::string text = read_file(path);
  const std::vector<BoundRow> rows = rows_from_csv(text);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].s == 2.5);
  CHECK(rows[0].status == "ok");
  for (const auto& entry : std::filesystem::directory_iterator(path.parent_path())) {
    CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);
  }
}

TEST_CASE("sweep row count and reproducibility") {
  const std::vector<std::string> args{"sweep",  "--s-min", "2.3",  "--s-max", "2.6",
                                      "--steps", "3",      "--eps0", "0.3",   "--format", "json"};
  const Run a = invoke(args);
  REQUIRE(a.code == kExitOk);
  const Run b = invoke(args);
  CHECK(a.out == b.out);
  const std::vector<BoundRow> rows = rows_from_json(a.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].s == 2.3);
  CHECK(rows[2].s == 2.6);
  for (const BoundRow& row : rows) CHECK(row.k_inf == doctest::Approx(0.5 * row.r_inf).epsilon(1e-15));
}

TEST_CASE("keyrate flags negative rates") {
  const Run r = invoke({"keyrate", "--s-min", "2.1", "--s-max", "2.2", "--steps", "2", "--eps0", "0.3", "--qber0",
                        "0.1", "--qber1", "0.1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("r_inf <= 0") != std::string::npos);
  const std::vector<BoundRow> rows = rows_from_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].r_inf < 0.0);
}

TEST_CASE("verify is deterministic") {
  const Run a = invoke({"verify", "--seed", "7"});
  const Run b = invoke({"verify", "--seed", "7"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("summary:") != std::string::npos);
  CHECK(a.out.find("FAIL") == std::string::npos);
}

TEST_CASE("export-sdp writes a parseable problem") {
  const auto path = scratch("problem.sdp");
  const Run r = invoke({"export-sdp", "--s", "2.4", "--phi-a", "1.0", "--phi-b", "1.3", "--objective", "frobenius",
                        "--mu", "0.01", "-o", path.string()});
  REQUIRE(r.code == kExitOk);
  const SdpProblem p = read_sdp_file(path);
  CHECK(p.kind == ObjectiveKind::frobenius);
  CHECK(p.s == 2.4);
  CHECK(p.mu == 0.01);
  CHECK(p.blocks.size() == 4);
  CHECK(invoke({"export-sdp", "--s", "2.9"}).code == kExitInfeasible);
}
