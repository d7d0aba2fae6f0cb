#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rpsopt/commands.hpp"
#include "support.hpp"

using namespace rpsopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rpsopt");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rpsopt_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("validate reports a summary") {
  auto r = cli({"validate", testing::data_path("desk2.json")});
  CHECK(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["valid"] == true);
  CHECK(j["nodes"] == 2);
}

TEST_CASE("missing instance file is a usage error") {
  auto r = cli({"validate", "/nonexistent/x.json"});
  CHECK(r.code == 2);
  auto e = json::parse(r.err);
  CHECK(e["error"]["kind"] == "file_not_found");
  CHECK(e["error"]["exit_code"] == 2);
}

TEST_CASE("invalid instance exits 1 with issues") {
  json doc = json::parse(std::ifstream(testing::data_path("desk2.json")));
  doc["network"]["lines"][0]["reactance"] = -1.0;
  auto path = scratch("bad.json");
  std::ofstream(path) << doc.dump();
  auto r = cli({"validate", path});
  CHECK(r.code == 1);
  auto j = json::parse(r.out);
  CHECK(j["valid"] == false);
  CHECK_FALSE(j["issues"].empty());
}

TEST_CASE("unknown flag and bad format value") {
  CHECK(cli({"validate", testing::data_path("desk2.json"), "--bogus"}).code == 2);
  CHECK(cli({"sweep", testing::data_path("desk1.json"), "--values", "1,2", "--format", "xml"}).code == 2);
}

TEST_CASE("sweep values must ascend") {
  auto r = cli({"sweep", testing::data_path("desk1.json"), "--values", "3,1", "--out-dir", scratch("desc")});
  CHECK(r.code != 0);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("retiring an absent fuel fails") {
  auto r = cli({"retire", testing::data_path("desk1.json"), "--retire-fuel", "unobtainium", "--out-dir", scratch("ret")});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["kind"] == "unknown_fuel");
}

TEST_CASE("retire_fuel zeroes every unit of the fuel") {
  auto raw = load_instance(testing::data_path("desk2.json"));
  auto out = retire_fuel(raw, "coal");
  for (const auto& g : out.generators)
    if (g.fuel == "coal") CHECK(g.g_max == 0.0);
  CHECK_THROWS_AS(retire_fuel(raw, "unobtainium"), std::invalid_argument);
}

TEST_CASE("solve writes its artifacts") {
  auto dir = scratch("solve");
  auto r = cli({"solve", testing::data_path("desk1.json"), "--starts", "10", "--out-dir", dir});
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(fs::path(dir) / "solution.json"));
  REQUIRE(fs::exists(fs::path(dir) / "iterations.jsonl"));
  auto sol = json::parse(std::ifstream(fs::path(dir) / "solution.json"));
  CHECK(sol["converged"] == true);
  CHECK(sol["regulator_objective"].get<double>() == doctest::Approx(6000).epsilon(0.01));
  std::ifstream log(fs::path(dir) / "iterations.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    CHECK(json::parse(line).contains("gap"));
    ++lines;
  }
  CHECK(lines == sol["iterations"].get<int>());
}
