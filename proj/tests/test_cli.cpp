#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "vipro_cli_test";

int vipro(const std::string& args) {
  const std::string cmd = std::string(VIPRO_CLI_PATH) + " " + args + " > " +
                          (kRoot / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

const char* kSmall = R"({
  "corpus": {"n_pairs": 64, "frames": 4, "n_scenes": 2, "n_categories": 4},
  "attack": {"eta": 4},
  "candidates": 3,
  "queries_k": 6,
  "seed": 11
})";

struct Scratch {
  Scratch() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
  ~Scratch() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_CASE("exit codes") {
  Scratch s;
  write(kRoot / "small.json", kSmall);
  write(kRoot / "typo.json", R"({"candidatez": 3})");
  write(kRoot / "tier.json", R"({"scenario": "black", "attack": {"sim_mode": "white"}})");
  write(kRoot / "broken.json", "{");

  CHECK(vipro("--version") == 0);
  CHECK(vipro("") == 2);
  CHECK(vipro("frobnicate") == 2);
  CHECK(vipro("attack --out x") == 2);
  CHECK(vipro("attack --config " + (kRoot / "typo.json").string() + " --out " + (kRoot / "o").string()) == 2);
  CHECK(vipro("attack --config " + (kRoot / "tier.json").string() + " --out " + (kRoot / "o").string()) == 2);
  CHECK(vipro("attack --config " + (kRoot / "broken.json").string() + " --out " + (kRoot / "o").string()) == 2);
  CHECK(vipro("attack --config " + (kRoot / "small.json").string() + " --threads 0 --out " + (kRoot / "o").string()) == 2);
  CHECK(vipro("ablate --config " + (kRoot / "small.json").string() + " --axis beta --out " + (kRoot / "o").string()) == 2);
  CHECK(vipro("attack --config " + (kRoot / "nope.json").string() + " --out " + (kRoot / "o").string()) == 3);
  fs::create_directories(kRoot / "empty");
  CHECK(vipro("report " + (kRoot / "empty").string()) == 3);
  CHECK(vipro("report " + (kRoot / "missing").string()) == 3);
  write(kRoot / "file", "x");
  CHECK(vipro("attack --config " + (kRoot / "small.json").string() + " --out " + (kRoot / "file" / "sub").string()) == 3);
}

TEST_CASE("gen, attack, ablate, report") {
  Scratch s;
  write(kRoot / "small.json", kSmall);
  write(kRoot / "spec.json", R"({"n_pairs": 64, "frames": 4, "n_scenes": 2, "n_categories": 4})");

  REQUIRE(vipro("gen --config " + (kRoot / "spec.json").string() + " --seed 3 --out " + (kRoot / "c1").string()) == 0);
  REQUIRE(vipro("gen --config " + (kRoot / "spec.json").string() + " --seed 3 --out " + (kRoot / "c2").string()) == 0);
  CHECK(slurp(kRoot / "c1" / "corpus.jsonl") == slurp(kRoot / "c2" / "corpus.jsonl"));
  CHECK(slurp(kRoot / "c1" / "corpus.meta.json") == slurp(kRoot / "c2" / "corpus.meta.json"));
  std::ifstream lines(kRoot / "c1" / "corpus.jsonl");
  int records = 0;
  for (std::string l; std::getline(lines, l);) records += !l.empty();
  CHECK(records == 64);
  write(kRoot / "bad_spec.json", R"({"frames": 4, "n_scenes": 5})");
  CHECK(vipro("gen --config " + (kRoot / "bad_spec.json").string() + " --out " + (kRoot / "c3").string()) == 2);

  const std::string cfg = (kRoot / "small.json").string();
  REQUIRE(vipro("attack --config " + cfg + " --out " + (kRoot / "runs" / "a").string()) == 0);
  REQUIRE(vipro("attack --config " + cfg + " --seed 12 --threads 2 --out " + (kRoot / "runs" / "b").string()) == 0);
  for (const char* f : {"report.json", "metrics.csv", "hist.csv"}) CHECK(fs::exists(kRoot / "runs" / "a" / f));
  CHECK(fs::is_directory(kRoot / "runs" / "a" / "loss_traces"));
  CHECK(slurp(kRoot / "runs" / "a" / "metrics.csv").rfind("seed,candidate,", 0) == 0);

  // Corpus generated by gen can be attacked from disk.
  write(kRoot / "from_disk.json", R"({"corpus_path": ")" + (kRoot / "c1").string() +
                                      R"(", "attack": {"eta": 2}, "candidates": 2, "queries_k": 4})");
  CHECK(vipro("attack --config " + (kRoot / "from_disk.json").string() + " --out " + (kRoot / "disk").string()) == 0);

  REQUIRE(vipro("ablate --config " + cfg + " --axis alpha --out " + (kRoot / "abl").string()) == 0);
  const std::string csv = slurp(kRoot / "abl" / "ablation.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  REQUIRE(vipro("report " + (kRoot / "runs").string() + " --out " + (kRoot / "summary").string()) == 0);
  CHECK(fs::exists(kRoot / "summary" / "summary.json"));
  CHECK(fs::exists(kRoot / "summary" / "hist.csv"));
}
