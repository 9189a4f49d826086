// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mfsir/cli.hpp"
#include "mfsir/config_io.hpp"

using namespace mfsir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfsir_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest(const fs::path& dir) {
  return nlohmann::json::parse(slurp(dir / "manifest.json"));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 64") {
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"frobnicate"}).code == kExitUsage);
  CHECK(invoke({"meanfield", "--no-such-flag"}).code == kExitUsage);
  CHECK(invoke({"meanfield", "--config", "/nonexistent/config.json"}).code == kExitUsage);
}

TEST_CASE("invalid configurations exit with 1 and name the field") {
  const fs::path dir = fresh_dir("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"initial": {"state_probabilities": [0.5, 0.1, 0.1]}})";
  const Result r = invoke({"meanfield", "--config", (dir / "c.json").string(), "--out-dir",
                           (dir / "out").string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("initial.state_probabilities") != std::string::npos);
}

TEST_CASE("meanfield writes density, masses and a complete manifest") {
  const fs::path dir = fresh_dir("meanfield");
  const Result r = invoke({"meanfield", "--T", "0.5", "--grid", "64", "--out-dir", dir.string()});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"density.csv", "masses.csv", "config.resolved.json", "manifest.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto m = manifest(dir);
  CHECK(m["command"] == "meanfield");
  CHECK(m["verdicts"]["mass_conservation"]["pass"] == true);
  for (const auto& o : m["outputs"]) {
    CHECK(sha256_file(dir / o["path"].get<std::string>()) == o["sha256"]);
  }
  const RunConfig rc = parse_config_file(dir / "config.resolved.json");
  CHECK(config_hash(rc) == m["config_hash"]);
  CHECK(rc.final_time == 0.5);
}

TEST_CASE("output is identical for any worker count") {
  const fs::path one = fresh_dir("w1"), two = fresh_dir("w2");
  for (const auto& [dir, w] : {std::pair{one, "1"}, std::pair{two, "2"}}) {
    REQUIRE(invoke({"simulate", "--N", "30", "--reps", "3", "--T", "0.2", "--workers", w,
                    "--out-dir", dir.string()})
                .code == kExitOk);
    REQUIRE(invoke({"lln", "--Ns", "20,40,80", "--reps", "3", "--T", "0.2", "--grid", "64",
                    "--workers", w, "--out-dir", (dir / "lln").string()})
                .code != kExitError);
  }
  for (const char* f : {"trajectory.csv", "events.csv", "lln/rates.csv",
                        "lln/lln_samples.csv"}) {
    CAPTURE(f);
    CHECK(slurp(one / f) == slurp(two / f));
  }
  CHECK(manifest(one)["config_hash"] == manifest(two)["config_hash"]);
}

TEST_CASE("lln reports the fitted slope") {
  const fs::path dir = fresh_dir("lln");
  const Result r = invoke({"lln", "--Ns", "50,100,200", "--reps", "4", "--T", "0.5", "--grid",
                           "64", "--out-dir", dir.string()});
  CHECK((r.code == kExitOk || r.code == kExitVerdict));
  const auto v = manifest(dir)["verdicts"]["lln_slope"];
  CHECK(v.contains("slope"));
  CHECK(v["pass"].is_boolean());
  CHECK(r.out.find("lln_slope") != std::string::npos);
}

}
