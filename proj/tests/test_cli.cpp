#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RPPG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// synth -> preprocess -> estimate, shared by the chain tests
struct Chain {
  testing::TempDir dir{"rppg_cli_chain"};
  fs::path raw = dir.path / "raw", prep = dir.path / "prep", preds = dir.path / "preds";

  Chain() {
    REQUIRE(run("synth --out " + raw.string() + " --sessions 3 --hr 62,80,97 --duration 20 --size 32 --seed 3") == 0);
    REQUIRE(run("preprocess --data " + raw.string() + " --out " + prep.string() + " --size 32") == 0);
    REQUIRE(run("estimate --data " + prep.string() + " --out " + preds.string() + " --method green") == 0);
  }

  json evaluate(const std::string& extra, const std::string& name) {
    const fs::path out = dir.path / name;
    REQUIRE(run("evaluate --data " + prep.string() + " --preds " + preds.string() + " --out " + out.string() + " " +
                extra) == 0);
    return read_json(out / "report.json");
  }
};

}  // namespace

TEST_CASE("synth writes one manifest and directory per session") {
  testing::TempDir dir("rppg_cli_synth");
  REQUIRE(run("synth --out " + (dir.path / "a").string() + " --sessions 5 --duration 2 --size 16 --seed 11") == 0);
  for (int i = 0; i < 5; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "synth_%03d", i);
    CHECK(fs::exists(dir.path / "a" / (std::string(id) + ".manifest.json")));
    CHECK(fs::is_directory(dir.path / "a" / id));
  }
  REQUIRE(run("synth --out " + (dir.path / "b").string() + " --sessions 5 --duration 2 --size 16 --seed 11") == 0);
  CHECK(slurp(dir.path / "a/synth_003/gt.csv") == slurp(dir.path / "b/synth_003/gt.csv"));
  CHECK(slurp(dir.path / "a/synth_003/frames/000010.png") == slurp(dir.path / "b/synth_003/frames/000010.png"));
}

TEST_CASE("out-of-range synth parameters exit with a validation error") {
  testing::TempDir dir("rppg_cli_bad");
  CHECK(run("synth --out " + dir.path.string() + " --hr 200 --duration 2") == 1);
  CHECK(run("synth --out " + dir.path.string() + " --kind ramp --slope 8 --duration 2") == 1);
  CHECK(run("synth --bogus") == 1);
  CHECK(run("preprocess --data " + (dir.path / "missing").string() + " --out " + (dir.path / "o").string()) != 0);
}

TEST_CASE("the full chain scores synthetic sessions closely") {
  Chain chain;
  CHECK(fs::exists(chain.prep / "index.json"));
  CHECK(fs::exists(chain.preds / "synth_000.pred.json"));

  const json w10 = chain.evaluate("--variant w10", "w10");
  CHECK(w10["aggregate"]["n_sessions"] == 3);
  CHECK(w10["aggregate"]["mae"]["mean"].get<double>() < 2.0);
  CHECK(std::abs(w10["aggregate"]["me"]["mean"].get<double>()) < 1.0);
  CHECK(fs::exists(chain.dir.path / "w10" / "report.csv"));
  CHECK(fs::exists(chain.dir.path / "w10" / "report.svg"));
  CHECK(w10["config"]["estimate"]["method"] == "green");

  const json full = chain.evaluate("--variant wfull --no-svg", "full");
  CHECK(full["aggregate"]["mae"]["mean"].get<double>() < 0.5);
  CHECK_FALSE(fs::exists(chain.dir.path / "full" / "report.svg"));

  const fs::path j1 = chain.dir.path / "j1", j2 = chain.dir.path / "j2";
  const std::string args = "evaluate --data " + chain.prep.string() + " --preds " + chain.preds.string() + " --out ";
  REQUIRE(run("--jobs 1 " + args + j1.string()) == 0);
  REQUIRE(run("--jobs 2 " + args + j2.string()) == 0);
  CHECK(slurp(j1 / "report.json") == slurp(j2 / "report.json"));
  CHECK(slurp(j1 / "report.csv") == slurp(j2 / "report.csv"));

  const fs::path aug = chain.dir.path / "aug";
  REQUIRE(run("augment --data " + chain.prep.string() + " --session synth_001 --clip-start 200 --seed 5 --out " +
              aug.string()) == 0);
  const json prov = read_json(aug / "provenance.json");
  CHECK(prov["seed"] == 5);
  CHECK(prov["source_hr"].get<double>() == doctest::Approx(80.0).epsilon(0.03));
  CHECK(fs::exists(aug / "clip.rppg"));

  REQUIRE(run("stats --data " + chain.raw.string() + " --out " + (chain.dir.path / "stats.json").string()) == 0);
  CHECK(fs::exists(chain.dir.path / "stats.json"));
}

TEST_CASE("missing predictions fail the run unless --keep-going") {
  Chain chain;
  fs::remove(chain.preds / "synth_001.pred.json");
  const std::string args = "evaluate --data " + chain.prep.string() + " --preds " + chain.preds.string() + " --out ";
  CHECK(run(args + (chain.dir.path / "strict").string()) != 0);
  REQUIRE(run("--keep-going " + args + (chain.dir.path / "lenient").string()) == 0);
  const json report = read_json(chain.dir.path / "lenient" / "report.json");
  CHECK(report["aggregate"]["n_sessions"] == 2);
  REQUIRE(report["failures"].size() == 1);
  CHECK(report["failures"][0].dump().find("synth_001") != std::string::npos);

  fs::remove(chain.preds / "synth_000.pred.json");
  fs::remove(chain.preds / "synth_002.pred.json");
  CHECK(run("--keep-going " + args + (chain.dir.path / "empty").string()) != 0);
}
