#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "ambidoa_cli_test";

int run(const std::string& args, std::string* out = nullptr) {
  const fs::path log = kWork / "stdout.txt";
  const std::string cmd = std::string(AMBIDOA_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Fresh {
  Fresh() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fresh, "gridinfo") {
  std::string out;
  CHECK(run("gridinfo --resolution 10", &out) == 0);
  CHECK(out.find("classes 412") != std::string::npos);
  CHECK(out.find("coverage radius") != std::string::npos);
  CHECK(run("gridinfo --resolution 90 --csv " + (kWork / "g.csv").string()) == 0);
  CHECK(fs::exists(kWork / "g.csv"));
}

TEST_CASE_FIXTURE(Fresh, "usage errors exit 1, runtime errors exit 2") {
  std::string out;
  CHECK(run("train", &out) == 1);
  CHECK(out.find("--manifest") != std::string::npos);
  CHECK(run("frobnicate") == 1);
  CHECK(run("gridinfo --bogus") == 1);
  CHECK(run("train --manifest " + (kWork / "missing.jsonl").string()) == 2);
  CHECK(run("render --scenes " + (kWork / "missing.json").string() + " --out " + (kWork / "r").string()) == 2);
}

TEST_CASE_FIXTURE(Fresh, "pipeline smoke and reproducibility") {
  const std::string w = kWork.string();
  for (const char* tag : {"a", "b"}) {
    // Same paths for both runs; outputs are moved aside afterwards.
    const std::string d = w + "/run";
    REQUIRE(run("simulate --count 20 --seed 3 --out " + d + "/sim") == 0);
    REQUIRE(run("render --scenes " + d + "/sim/scenes.json --out " + d + "/data --synthetic-speech --seed 3") == 0);
    REQUIRE(run("train --manifest " + d + "/data/manifest.jsonl --preset desk --epochs 5 --seed 3 --out " + d +
                "/model.adom") == 0);
    REQUIRE(run("eval --model " + d + "/model.adom --manifest " + d + "/data/manifest.jsonl --report " + d +
                "/report.csv") == 0);
    fs::rename(kWork / "run", kWork / tag);
  }
  const fs::path a = kWork / "a", b = kWork / "b";
  CHECK(slurp(a / "sim/scenes.json") == slurp(b / "sim/scenes.json"));
  CHECK(slurp(a / "data/manifest.jsonl") == slurp(b / "data/manifest.jsonl"));
  CHECK(slurp(a / "model.adom") == slurp(b / "model.adom"));
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  const auto manifest = slurp(a / "data/manifest.jsonl");
  CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 60);
  for (const char* f : {"sim/run.json", "data/run.json", "run.json"}) CHECK(fs::exists(a / f));
  const auto run_json = nlohmann::json::parse(slurp(a / "data/run.json"));
  CHECK(run_json["subcommand"] == "render");
  CHECK(run_json["config"]["seed"] == 3);
  CHECK(fs::exists(a / "sim/srir/srir_00000.wav"));
}
