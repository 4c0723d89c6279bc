#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "saoithe_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = scratch() / "stdout.txt";
  const std::string cmd =
      std::string("\"") + SAOITHE_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string config_path() { return std::string(SAOITHE_CONFIGS) + "/default.conf"; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("simulate --region high").code == 2);
  CHECK(run("simulate --config " + config_path() + " --bogus").code == 2);
  CHECK(run("simulate --config " + config_path() + " --region arctic").code == 2);
  CHECK(run("simulate --config /no/such/file --region low").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("validate") {
  const Run r = run("validate --suite whittle");
  CHECK(r.code == 0);
  const Run all = run("validate --suite all --json");
  CHECK(all.code == 0);
  CHECK(all.out.find("\"pass\": true") != std::string::npos);
  CHECK(run("validate --suite nonsense").code == 2);
}

TEST_CASE("invalid config exits with 1") {
  const fs::path bad = scratch() / "bad.conf";
  std::ofstream(bad) << "num_sources = -3\n";
  CHECK(run("simulate --config " + bad.string() + " --region low").code == 1);
}

TEST_CASE("boundary") {
  const Run r = run("boundary");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("xi,") != std::string::npos);
  CHECK(r.out.find("\n50,") != std::string::npos);
  CHECK(r.out.find("\n450,") != std::string::npos);
}

TEST_CASE("compose-energy") {
  const Run r = run("compose-energy --config " + config_path());
  CHECK(r.code == 0);
  CHECK(r.out.find("0.9403") != std::string::npos);
}

TEST_CASE("simulate writes its artefacts") {
  const fs::path out = scratch() / "sim";
  const Run r = run("simulate --config " + config_path() +
                    " --region high --policy round_robin --out " + out.string());
  REQUIRE(r.code == 0);
  const std::string stem = (out / "round_robin_high_N50_kappa21.5").string();
  for (const char* ext : {".csv", ".json", ".config", ".trace.csv", ".run.json"}) {
    CHECK(fs::exists(stem + ext));
  }
  std::ifstream in(stem + ".json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.at("policy") == "round_robin");
  CHECK(j.at("prefix_violations") == 0);

  // The saved config reproduces the run byte for byte.
  const fs::path again = scratch() / "again";
  REQUIRE(run("simulate --config " + stem + ".config --region high --policy round_robin --out " +
              again.string())
              .code == 0);
  std::ifstream a(stem + ".csv");
  std::ifstream b((again / "round_robin_high_N50_kappa21.5.csv").string());
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("simulate from a csv trace") {
  const fs::path trace = scratch() / "grid.csv";
  {
    std::ofstream t(trace);
    t << "timestamp,carbon_intensity\n";
    for (int h = 0; h <= 24; ++h) t << 1709251200 + 3600 * h << "," << 100 + 10 * (h % 12) << "\n";
  }
  const Run r = run("simulate --config " + config_path() + " --trace " + trace.string() +
                    " --policy saoithe --lambda 1e9 --out " + (scratch() / "csv").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(scratch() / "csv" / "saoithe_grid_N50_kappa21.5.json"));
  CHECK(run("simulate --config " + config_path() + " --trace " + trace.string() +
            " --region low")
            .code == 2);
}
