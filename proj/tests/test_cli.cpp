#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wq/cli.hpp"

using namespace wq;
using doctest::Approx;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "wq");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) {
  const char* dir = std::getenv("WQ_DATA");
  return std::string(dir ? dir : "data/measures") + "/" + name;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream s(text);
  for (std::string line; std::getline(s, line);) out.push_back(line);
  return out;
}

// Data rows of a CSV report, split on commas, skipping comments and the header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (const auto& line : lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wq_cli_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("quantize examples") {
  const auto r = run({"quantize", "--measure", data("uniform1d.json"), "--n", "2", "--p", "2", "--seed", "7"});
  REQUIRE(r.code == kExitOk);
  const auto doc = json::parse(r.out);
  std::vector<double> xs{doc["result"]["points"][0][0], doc["result"]["points"][1][0]};
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == Approx(0.25).epsilon(1e-4));
  CHECK(xs[1] == Approx(0.75).epsilon(1e-4));
  CHECK(doc["result"]["N"] == 2);
  CHECK(doc["result"]["seed"] == 7);

  const auto k = run({"quantize", "--measure", data("cantor.json"), "--n", "1", "--p", "2"});
  REQUIRE(k.code == kExitOk);
  CHECK(double(json::parse(k.out)["result"]["points"][0][0]) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("quantize usage errors exit with 1") {
  const auto zero = run({"quantize", "--n", "0"});
  CHECK(zero.code == kExitUsage);
  CHECK(zero.err.find("N must be ≥ 1") != std::string::npos);
  CHECK(zero.out.empty());

  CHECK(run({"quantize", "--n", "2"}).code == kExitUsage);
  CHECK(run({"quantize", "--measure", data("missing.json"), "--n", "2"}).code == kExitUsage);
  CHECK(run({"quantize", "--measure", data("uniform1d.json"), "--n", "2", "--p", "0.5"}).code == kExitUsage);
  CHECK(run({"quantize", "--measure", data("uniform1d.json"), "--n", "2", "--format", "xml"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);

  const std::string bad = temp_path("bad.json");
  std::ofstream(bad) << R"({"type": "piecewise", "bounds": [[0, 1]], "resolution": [2], "values": [1]})";
  const auto spec = run({"quantize", "--measure", bad, "--n", "2"});
  CHECK(spec.code == kExitUsage);
  CHECK(spec.err.find("measure spec") != std::string::npos);
  std::filesystem::remove(bad);
}

TEST_CASE("non-converged runs still write the report and exit with 2") {
  const auto r = run({"quantize", "--measure", data("uniform2d.json"), "--n", "50", "--max-iters", "1", "--restarts",
                      "1", "--quad", "grid", "--quad-nodes", "64"});
  CHECK(r.code == kExitReported);
  const auto doc = json::parse(r.out);
  CHECK(doc["result"]["converged"] == false);
  CHECK(doc["result"]["points"].size() == 50);
}

TEST_CASE("JSON reports carry version and config") {
  const auto r = run({"quantize", "--measure", data("uniform1d.json"), "--n", "3", "--seed", "11"});
  const auto doc = json::parse(r.out);
  CHECK(doc["version"] == "wq 0.1.0");
  CHECK(doc["config"]["command"] == "quantize");
  CHECK(doc["config"]["seed"] == 11);
  CHECK(doc["config"]["N"] == 3);
  CHECK(doc["config"]["measure"] == data("uniform1d.json"));
  CHECK(doc["config"]["quad"]["mode"] == "auto");
}

TEST_CASE("CSV reports start with version and config lines") {
  const auto r = run({"cantor", "--p", "2", "--n-max", "4"});
  const auto ls = lines(r.out);
  REQUIRE(ls.size() >= 3);
  CHECK(ls[0] == "# wq 0.1.0");
  REQUIRE(ls[1].rfind("# config: ", 0) == 0);
  const auto cfg = json::parse(ls[1].substr(10));
  CHECK(cfg["command"] == "cantor");
  CHECK(cfg["N_max"] == 4);
}

TEST_CASE("identical configs give byte-identical output") {
  const std::vector<std::string> args{"quantize", "--measure", data("ramp2d.json"), "--n",     "20",
                                      "--seed",   "3",         "--quad",             "grid", "--quad-nodes",
                                      "96",       "--restarts", "3"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.out == b.out);

  auto threaded = args;
  threaded.insert(threaded.end(), {"--jobs", "3"});
  const auto c = run(threaded);
  CHECK(json::parse(c.out)["result"] == json::parse(a.out)["result"]);
}

TEST_CASE("--out writes the report instead of standard output") {
  const std::string path = temp_path("out.csv");
  const auto to_file = run({"cantor", "--p", "1", "--n-max", "20", "--out", path});
  CHECK(to_file.code == kExitOk);
  CHECK(to_file.out.empty());
  const auto written = lines(slurp(path));
  std::filesystem::remove(path);
  const auto printed = lines(run({"cantor", "--p", "1", "--n-max", "20"}).out);
  // Only the echoed config differs: it records the output path.
  REQUIRE(written.size() == printed.size());
  CHECK(json::parse(written[1].substr(10))["out"] == path);
  for (std::size_t k = 0; k < written.size(); ++k)
    if (k != 1) CHECK(written[k] == printed[k]);
  CHECK(run({"cantor", "--n-max", "4", "--out", "/nonexistent-dir/x.csv"}).code == kExitUsage);
}

TEST_CASE("WQ_DEFAULT_JOBS sets the default thread count") {
  setenv("WQ_DEFAULT_JOBS", "3", 1);
  const auto r = run({"cantor", "--n-max", "2", "--format", "json"});
  unsetenv("WQ_DEFAULT_JOBS");
  CHECK(json::parse(r.out)["config"]["jobs"] == 3);
  CHECK(json::parse(run({"cantor", "--n-max", "2", "--format", "json"}).out)["config"]["jobs"] == 1);
}

TEST_CASE("rate-scan examples") {
  const auto exact = run({"rate-scan", "--measure", data("cantor.json"), "--p", "1", "--exact", "--n-list",
                          "1,2,4,8,16,32"});
  REQUIRE(exact.code == kExitOk);
  const auto rows = csv_rows(exact.out);
  REQUIRE(rows.size() == 7);
  CHECK(rows.back()[0] == "slope");
  CHECK(std::stod(rows.back()[1]) == Approx(-std::log(3.0) / std::log(2.0)).epsilon(1e-9));
  CHECK(std::stod(rows[0][1]) == Approx(1.0 / 3.0));

  const auto square = run({"rate-scan", "--measure", data("uniform2d.json"), "--p", "2", "--n-list", "16,32,64",
                           "--quad", "grid", "--quad-nodes", "128", "--restarts", "2"});
  REQUIRE(square.code == kExitOk);
  CHECK(std::stod(csv_rows(square.out).back()[1]) == Approx(-0.5).epsilon(0.1));

  const auto json_out = run({"rate-scan", "--measure", data("cantor.json"), "--exact", "--n-list", "1,2,4",
                             "--format", "json"});
  CHECK(json::parse(json_out.out)["result"]["rows"].size() == 3);
}

TEST_CASE("rate-scan usage errors") {
  CHECK(run({"rate-scan", "--measure", data("uniform1d.json")}).code == kExitUsage);
  CHECK(run({"rate-scan", "--measure", data("uniform1d.json"), "--n-list", ""}).code == kExitUsage);
  CHECK(run({"rate-scan", "--measure", data("uniform1d.json"), "--n-list", "4,8"}).code == kExitUsage);
  CHECK(run({"rate-scan", "--measure", data("uniform1d.json"), "--n-list", "0,4,8"}).code == kExitUsage);
  CHECK(run({"rate-scan", "--measure", data("uniform1d.json"), "--exact", "--n-list", "1,2,4"}).code == kExitUsage);
}

TEST_CASE("cantor examples") {
  const auto r = run({"cantor", "--p", "1", "--n-max", "96"});
  REQUIRE(r.code == kExitOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 96);
  double lo = INFINITY, hi = 0.0;
  for (const auto& row : rows) {
    const auto n = std::stoul(row[0]);
    if (n < 16) continue;
    lo = std::min(lo, std::stod(row[2]));
    hi = std::max(hi, std::stod(row[2]));
  }
  CHECK(std::stod(rows[63][2]) == Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(std::stod(rows[47][2]) == Approx(0.4225572).epsilon(1e-6));
  CHECK(lo == Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(hi >= 0.4225572);
  CHECK(r.out.find("anchor_ratio 1.26767166549") != std::string::npos);

  const auto small = csv_rows(run({"cantor", "--p", "2", "--n-max", "4"}).out);
  REQUIRE(small.size() == 4);
  CHECK(std::stod(small[0][1]) == Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-11));

  CHECK(csv_rows(run({"cantor", "--n-max", "1"}).out).size() == 1);
  CHECK(run({"cantor", "--n-max", "0"}).code == kExitUsage);
}

TEST_CASE("check examples") {
  const auto r = run({"check"});
  REQUIRE(r.code == kExitOk);
  const auto doc = json::parse(r.out);
  CHECK(doc["result"]["all_passed"] == true);
  for (const auto& p : doc["result"]["properties"]) {
    CHECK(p["trials"] == 200);
    CHECK(p["passed"] == 200);
  }

  const auto fault = run({"check", "--inject-fault"});
  CHECK(fault.code == kExitReported);
  const auto fdoc = json::parse(fault.out);
  CHECK(fdoc["result"]["all_passed"] == false);
  bool marginal_flagged = false;
  for (const auto& p : fdoc["result"]["properties"])
    if (p["name"] == "plan-marginals") marginal_flagged = p["ok"] == false;
  CHECK(marginal_flagged);

  const auto zero = run({"check", "--trials", "0"});
  CHECK(zero.code == kExitUsage);
  CHECK(zero.err.find("--trials must be ≥ 1") != std::string::npos);
}

TEST_CASE("theta example") {
  const auto r = run({"theta", "--d", "1", "--p", "2"});
  REQUIRE(r.code == kExitOk);
  const auto doc = json::parse(r.out);
  CHECK(double(doc["result"]["theta"]) == Approx(0.288675).epsilon(0.01));
  CHECK(doc["config"]["N_list"] == json::array({256}));
  CHECK(run({"theta", "--d", "4"}).code == kExitUsage);
}

TEST_CASE("support-law example") {
  const auto r = run({"support-law", "--measure", data("ramp1d.json"), "--p", "2", "--n", "512"});
  REQUIRE(r.code == kExitOk);
  const auto doc = json::parse(r.out);
  CHECK(double(doc["result"]["ks"]) < 0.05);
  CHECK(run({"support-law", "--measure", data("cantor.json"), "--n", "8"}).code == kExitUsage);
}

TEST_CASE("equidist example through the installed binary") {
  const char* exe = std::getenv("WQ_CLI");
  if (!exe) {
    MESSAGE("WQ_CLI not set; skipping binary run");
    return;
  }
  const std::string cmd = std::string(exe) + " equidist --cells 4 --n 4096";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  std::array<char, 4096> buf{};
  for (std::size_t got; (got = fread(buf.data(), 1, buf.size(), pipe)) > 0;) text.append(buf.data(), got);
  const int status = pclose(pipe);
  CHECK(WEXITSTATUS(status) == kExitOk);
  const auto doc = json::parse(text);
  CHECK(double(doc["result"]["cv"]) < 0.10);
  CHECK(doc["result"]["empty_cells"].empty());
  CHECK(doc["result"]["cells"].size() == 16);
}
