#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fpbp/io.hpp"

namespace fs = std::filesystem;
using namespace fpbp;

namespace {

const std::string kCli = FPBP_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fpbp_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli pipeline: demo, preprocess idempotence, simulate, locate, eval") {
  TempDir tmp;
  const std::string demo = tmp / "demo";
  REQUIRE(run("demo --out " + demo) == 0);

  // Re-running preprocess must produce a byte-identical artifact.
  const std::string map_a = tmp / "a.map.json";
  const std::string map_b = tmp / "b.map.json";
  REQUIRE(run("preprocess --raster " + demo + "/floor6.png --palette " + demo +
              "/palette.json --manifest " + demo + "/manifest6.json --out " + map_a) == 0);
  REQUIRE(run("preprocess --raster " + demo + "/floor6.png --palette " + demo +
              "/palette.json --manifest " + demo + "/manifest6.json --out " + map_b) == 0);
  CHECK(read_file(map_a) == read_file(map_b));
  CHECK(read_file(map_a) == read_file(demo + "/floor6.map.json"));

  // Seeded simulation determinism.
  REQUIRE(run("simulate --scenario " + demo + "/scenario.json --out " + (tmp / "r1") +
              " --seed 5") == 0);
  REQUIRE(run("simulate --scenario " + demo + "/scenario.json --out " + (tmp / "r2") +
              " --seed 5") == 0);
  REQUIRE(run("simulate --scenario " + demo + "/scenario.json --out " + (tmp / "r3") +
              " --seed 6") == 0);
  CHECK(read_file(tmp / "r1/events.jsonl") == read_file(tmp / "r2/events.jsonl"));
  CHECK(read_file(tmp / "r1/events.jsonl") != read_file(tmp / "r3/events.jsonl"));

  // Locate + eval for the full pipeline and an ablation.
  for (const std::string algo : {"fpbp", "bp", "pdr", "gml"}) {
    REQUIRE(run("locate --map " + demo + "/floor6.map.json --map " + demo +
                "/floor7.map.json --beacons " + demo + "/beacons.json --log " +
                (tmp / "r1/events.jsonl") + " --algo " + algo + " --out " +
                (tmp / ("out_" + algo + ".jsonl"))) == 0);
  }
  REQUIRE(run("eval --outputs " + (tmp / "out_fpbp.jsonl") + " --truth " +
              (tmp / "r1/truth.jsonl") + " --map " + demo + "/floor6.map.json --report " +
              (tmp / "metrics.json") + " --cdf " + (tmp / "cdf.csv") + " --per-step") == 0);
  const std::string metrics = read_file(tmp / "metrics.json");
  CHECK(metrics.find("fpbp-metrics/1") != std::string::npos);
  const std::string cdf = read_file(tmp / "cdf.csv");
  CHECK(cdf.rfind("error_m,cumulative_fraction", 0) == 0);

  // Debug trace flag emits one record per output.
  REQUIRE(run("locate --map " + demo + "/floor6.map.json --map " + demo +
              "/floor7.map.json --beacons " + demo + "/beacons.json --log " +
              (tmp / "r1/events.jsonl") + " --algo fpbp --out " + (tmp / "out_t.jsonl") +
              " --debug-trace " + (tmp / "trace.jsonl")) == 0);
  CHECK(!read_file(tmp / "trace.jsonl").empty());
}

TEST_CASE("cli calibrates the step-length coefficient from an IMU log") {
  TempDir tmp;
  const std::string demo = tmp / "demo";
  REQUIRE(run("demo --out " + demo) == 0);
  // Switch the demo scenario into the synthetic-IMU mode.
  auto scenario = nlohmann::json::parse(read_file(demo + "/scenario.json"));
  scenario["step_mode"] = "imu_sinusoid";
  write_file(demo + "/scenario_imu.json", scenario.dump());
  REQUIRE(run("simulate --scenario " + demo + "/scenario_imu.json --out " + (tmp / "r")) == 0);

  const std::string cmd = kCli + " calibrate-beta --log " + (tmp / "r/events.jsonl") +
                          " --stride 0.6 > " + (tmp / "beta.txt") + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const std::string text = read_file(tmp / "beta.txt");
  const auto pos = text.find("beta = ");
  REQUIRE(pos != std::string::npos);
  const double beta = std::stod(text.substr(pos + 7));
  // The synthetic gait has z_pp = 4, so beta must land near 0.6 / 4^(1/4).
  CHECK(beta == doctest::Approx(0.6 / std::pow(4.0, 0.25)).epsilon(0.05));
}

TEST_CASE("cli exit codes distinguish config and data errors") {
  TempDir tmp;
  const std::string demo = tmp / "demo";
  REQUIRE(run("demo --out " + demo) == 0);

  // Stray pixel color: data error (exit 3), coordinate reported.
  {
    ImageRgb img = read_png(demo + "/floor6.png");
    img.at(40, 40) = {7, 7, 7};
    write_png(tmp / "bad.png", img);
    CHECK(run("preprocess --raster " + (tmp / "bad.png") + " --manifest " + demo +
              "/manifest6.json --out " + (tmp / "bad.map.json")) == 3);
  }

  // Unknown algorithm: config error (exit 2).
  REQUIRE(run("simulate --scenario " + demo + "/scenario.json --out " + (tmp / "r")) == 0);
  CHECK(run("locate --map " + demo + "/floor6.map.json --beacons " + demo +
            "/beacons.json --log " + (tmp / "r/events.jsonl") +
            " --algo mystery --out " + (tmp / "o.jsonl")) == 2);

  // Truth/output mismatch: data error.
  REQUIRE(run("locate --map " + demo + "/floor6.map.json --map " + demo +
              "/floor7.map.json --beacons " + demo + "/beacons.json --log " +
              (tmp / "r/events.jsonl") + " --algo pdr --out " + (tmp / "o.jsonl")) == 0);
  write_file(tmp / "short_truth.jsonl", "{\"t_ms\":0,\"x\":0,\"y\":0}\n");
  CHECK(run("eval --outputs " + (tmp / "o.jsonl") + " --truth " +
            (tmp / "short_truth.jsonl")) == 3);

  // Missing file: data error.
  CHECK(run("eval --outputs missing.jsonl --truth also_missing.jsonl") == 3);
}
