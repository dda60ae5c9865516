#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path dir = fs::temp_directory_path() / ("recipe_cli_test_" + std::to_string(::getpid()));

int run(const std::string &args, const std::string &env = "") {
  fs::create_directories(dir);
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " " RECIPE_CLI " " + args +
                          " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string &name) {
  std::ifstream in(dir / name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Cleanup {
  ~Cleanup() { fs::remove_all(dir); }
} cleanup;

} // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("dist shifted-soliton") == 1);     // --K missing
  CHECK(run("dist shifted-soliton --K x") == 1);
}

TEST_CASE("validation errors exit 2") {
  REQUIRE(run("dist ideal-soliton --K 5 -o is.json") == 0);
  CHECK(run("check is.json") == 2);
  CHECK(slurp("stdout.txt").find("infeasible") != std::string::npos);
  CHECK(run("derive-apa is.json -o apa.json") == 2);
  CHECK_FALSE(fs::exists(dir / "apa.json"));
  std::ofstream(dir / "bad.json") << "{\"K\": 2, \"mu\": [[1], [0.5]]}";
  CHECK(run("check bad.json") == 2);
  CHECK(run("dist pint --K 4 --alpha 2 --p 0.5") == 2);
}

TEST_CASE("runtime errors exit 3") { CHECK(run("check missing.json") == 3); }

TEST_CASE("bad RECIPE_SEED is a usage error") {
  CHECK(run("dist pint --K 4 --alpha 0.5 --p 0.25 -o p.json", "RECIPE_SEED=abc") == 1);
}

TEST_CASE("pipeline with manifests") {
  REQUIRE(run("dist shifted-soliton --K 6 -o ss.json") == 0);
  CHECK(run("check ss.json") == 0);
  REQUIRE(run("derive-apa ss.json -o apa.json") == 0);
  REQUIRE(run("gen-avst --apa apa.json --L 100 --seed 4 -o t.avst") == 0);
  CHECK(fs::file_size(dir / "t.avst") == 32 + 100 * 6 / 4);

  const auto manifest = nlohmann::json::parse(slurp("t.avst.manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest.contains("tool_version"));
  CHECK(manifest.contains("timestamp"));
  CHECK(manifest["inputs"].size() == 1);

  REQUIRE(run("simulate --mode d --apa apa.json --k 6 --seed 9 --codewords cw.jsonl") == 0);
  REQUIRE(run("decode --mode d --apa apa.json --k 6 --in cw.jsonl --seed 9") == 0);
  CHECK(slurp("stdout.txt").find("complete true") != std::string::npos);
}

TEST_CASE("evaluate is deterministic and honours RECIPE_SEED") {
  const std::string eval = "evaluate --mode d --seq ss.json --trials 200";
  REQUIRE(run("dist shifted-soliton --K 6 -o ss.json") == 0);
  REQUIRE(run(eval + " --seed 5 --threads 2 -o a.csv") == 0);
  REQUIRE(run(eval + " --seed 5 --threads 1 -o b.csv") == 0);
  REQUIRE(run(eval + " -o c.csv", "RECIPE_SEED=5") == 0);
  REQUIRE(run(eval + " --seed 6 -o d.csv") == 0);
  CHECK(slurp("a.csv") == slurp("b.csv"));
  CHECK(slurp("a.csv") == slurp("c.csv"));
  CHECK(slurp("a.csv") != slurp("d.csv"));
  CHECK(slurp("a.csv").rfind("scheme,K,k,trials,mean,stderr,q99,incomplete_rate\n", 0) == 0);

  REQUIRE(run("compare a.csv d.csv -o wide.csv") == 0);
  CHECK(slurp("wide.csv").rfind("k,", 0) == 0);
}
