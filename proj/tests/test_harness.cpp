#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "test_util.hpp"
#include "vipro/commands.hpp"

using namespace vipro;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.corpus.n_pairs = 96;
  c.corpus.frames = 8;
  c.corpus.n_scenes = 2;
  c.corpus.n_categories = 4;
  c.candidates = 6;
  c.queries_k = 8;
  c.attack.eta = 12;
  c.attack.alpha = 2.0 / 255.0;
  return c;
}

// Pearson correlation of average ranks, ranks from pairwise counting.
double spearman_oracle(const Vec64& a, const Vec64& b) {
  auto ranks = [](const Vec64& v) {
    Vec64 r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double x : v) {
        less += x < v[i];
        equal += x == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const Vec64 ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.train_count() == 4);
  CHECK(c.test_count() == 4);
  c.n_train = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.scenario = Scenario::black;
  CHECK_THROWS_AS(c.validate(), ConfigError);  // still on the bilinear score
  c.attack.sim_mode = SimMode::grey;
  CHECK_NOTHROW(c.validate());
  c = small_config();
  c.victim.d_hid = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("spearman") {
  CHECK(spearman(Vec64{1, 2, 3, 4}, Vec64{10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman(Vec64{1, 2, 3, 4}, Vec64{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(Vec64{1, 1, 1}, Vec64{1, 2, 3}) == 0.0);
  CHECK(spearman(Vec64{1}, Vec64{1}) == 0.0);
  CHECK_THROWS_AS(spearman(Vec64{1, 2}, Vec64{1}), DimensionError);
  SeededRng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    Vec64 a(n), b(n);
    for (double& x : a) x = static_cast<double>(rng.below(4));
    for (double& x : b) x = rng.normal();
    a[0] = 0.0;
    a[1] = 5.0;
    REQUIRE(spearman(a, b) == doctest::Approx(spearman_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("white-box run on a small corpus") {
  const ExperimentConfig c = small_config();
  const ExperimentReport r = run_experiment(c);
  REQUIRE(r.seeds.size() == 1);
  const SeedReport& s = r.seeds[0];
  REQUIRE(!s.candidates.empty());
  CHECK(s.candidates.size() <= c.candidates);
  CHECK(std::is_sorted(s.candidates.begin(), s.candidates.end(),
                       [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (const auto& o : s.candidates) {
    CHECK(o.linf <= c.attack.epsilon + 1e-12);
    CHECK(o.in_range);
    CHECK(o.n_train >= 1);
    CHECK(o.n_test >= 1);
    CHECK(o.loss_trace.size() == c.attack.eta);
    CHECK(o.promoted <= o.promotable);
  }
  CHECK(s.range_violations == 0);
  CHECK(s.delta_r1 == doctest::Approx(s.mean_post_r1 - s.mean_pre_r1));
  double mass = 0.0;
  for (double m : s.top1.mass) mass += m;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.r_precision.size() == c.corpus.n_categories);
  CHECK(s.success_rate >= 0.0);
  CHECK(s.success_rate <= 1.0);
}

TEST_CASE("eta = 0 leaves recall untouched") {
  ExperimentConfig c = small_config();
  c.attack.eta = 0;
  const ExperimentReport r = run_experiment(c);
  CHECK(r.mean_delta_r1 == 0.0);
  CHECK(r.mean_delta_r5 == 0.0);
  for (const auto& o : r.seeds[0].candidates) {
    CHECK(o.pre_r1 == o.post_r1);
    CHECK(o.pre_r5 == o.post_r5);
    CHECK(o.linf == 0.0);
  }
}

TEST_CASE("reports are reproducible") {
  ExperimentConfig c = small_config();
  c.seeds = {5, 6};
  const std::string a = hash_region(run_experiment(c)).dump();
  const std::string b = hash_region(run_experiment(c)).dump();
  CHECK(a == b);
  c.threads = 3;
  ExperimentReport threaded = run_experiment(c);
  threaded.config.threads = 1;
  CHECK(hash_region(threaded).dump() == a);
  c.threads = 1;
  c.seeds = {5, 7};
  CHECK(hash_region(run_experiment(c)).dump() != a);
}

TEST_CASE("shuffle defense leaves the mean-pool victim's recall unchanged") {
  ExperimentConfig c = small_config();
  const ExperimentReport plain = run_experiment(c);
  c.defense.kind = DefenseKind::shuffle;
  c.defense.window = 8;
  const ExperimentReport shuffled = run_experiment(c);
  REQUIRE(plain.seeds[0].candidates.size() == shuffled.seeds[0].candidates.size());
  CHECK(shuffled.mean_delta_r1 == plain.mean_delta_r1);
  CHECK(shuffled.mean_delta_r5 == plain.mean_delta_r5);
}

TEST_CASE("grey and black scenarios") {
  ExperimentConfig c = small_config();
  c.scenario = Scenario::grey;
  c.attack.sim_mode = SimMode::grey;
  const ExperimentReport g = run_experiment(c);
  CHECK(!g.seeds[0].candidates.empty());

  c.scenario = Scenario::black;
  c.attack.more_enabled = true;
  c.victim.rho = 0.1;
  const ExperimentReport b = run_experiment(c);
  const SeedReport& s = b.seeds[0];
  CHECK(s.chosen_categories.size() == 2);
  for (const auto& o : s.candidates) {
    CHECK(std::count(s.chosen_categories.begin(), s.chosen_categories.end(), o.category) == 1);
    CHECK(o.clips == o.clip_ranges.size());
  }
  CHECK(s.source_id != s.victim_id);
}

TEST_CASE("harvest_category_queries") {
  const ExperimentConfig c = small_config();
  DatasetSpec spec = c.corpus;
  const Corpus corpus = generate_corpus(spec);
  const EncoderParams src = plant_model(corpus.generator_params(), 64, 3, 0.0);
  const CategoryHarvest h = harvest_category_queries(src, corpus, 0, 4, 4);
  CHECK(h.train.size() + h.test.size() <= 8);
  CHECK(!h.train.empty());
  for (auto k : h.train) CHECK(k < spec.n_categories);
  for (auto k : h.test) CHECK(k < spec.n_categories);
  const CategoryHarvest again = harvest_category_queries(src, corpus, 0, 4, 4);
  CHECK(again.train == h.train);
  CHECK(again.test == h.test);
}

TEST_CASE("ablation grid") {
  const ExperimentConfig base = small_config();
  CHECK(ablation_grid(base, AblationAxis::queries).size() == 5);
  CHECK(ablation_grid(base, AblationAxis::eta).size() == 5);
  CHECK(ablation_grid(base, AblationAxis::alpha).size() == 4);
  CHECK(ablation_grid(base, AblationAxis::epsilon).size() == 4);
  CHECK(ablation_grid(base, AblationAxis::clipping).size() == 3);
  CHECK(ablation_grid(base, AblationAxis::queries)[0].second.train_count() == 2);
  CHECK(parse_axis("eta") == AblationAxis::eta);
  CHECK(axis_name(AblationAxis::clipping) == "clipping");
  CHECK_THROWS_AS(parse_axis("beta"), ConfigError);

  SUBCASE("epsilon sweep") {
    ExperimentConfig c = base;
    c.seeds = {42, 43, 44};
    const auto rows = run_ablation(c, AblationAxis::epsilon);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].mean_final_sum_sims >= rows[i - 1].mean_final_sum_sims);
    for (const auto& r : rows) CHECK(r.n_seeds == 3);

    // Each grid point is the plain attack run with that config.
    const auto grid = ablation_grid(c, AblationAxis::epsilon);
    const ExperimentReport direct = cmd_attack(grid[2].second, {});
    CHECK(rows[2].delta_r1 == direct.mean_delta_r1);
    CHECK(rows[2].delta_r5 == direct.mean_delta_r5);
    CHECK(rows[2].mean_final_sum_sims == direct.mean_final_sum_sims);

    const std::string csv = ablation_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  }
}

TEST_CASE("report files and cmd_report") {
  const fs::path root = fs::temp_directory_path() / "vipro_harness_report";
  fs::remove_all(root);
  fs::create_directories(root / "empty");
  CHECK_THROWS_AS(cmd_report(root / "empty", {}), IoError);
  CHECK_THROWS_AS(cmd_report(root / "missing", {}), IoError);

  ExperimentConfig c = small_config();
  for (double rho : {0.0, 0.5}) {
    c.victim.rho = rho;
    const fs::path dir = root / "runs" / ("rho" + std::to_string(rho));
    cmd_attack(c, dir);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "metrics.csv"));
    CHECK(fs::exists(dir / "hist.csv"));
    CHECK(fs::is_directory(dir / "loss_traces"));
    CHECK(!fs::is_empty(dir / "loss_traces"));
    const Json doc = read_json_file(dir / "report.json");
    CHECK(doc.at("tool").at("version") == kToolVersion);
    CHECK(doc.at("report_hash") == hex64(fnv1a64(doc.at("hash_region").dump())));
  }
  const Json summary = cmd_report(root / "runs", root / "summary");
  CHECK(summary.at("runs").size() == 2);
  CHECK(summary.contains("top1_vs_success_spearman"));
  for (const auto& run : summary.at("runs"))
    for (const auto& seed : run.at("seeds")) {
      double mass = 0.0;
      for (double m : seed.at("top1_histogram").at("mass")) mass += m;
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  CHECK(fs::exists(root / "summary" / "summary.json"));
  CHECK(fs::exists(root / "summary" / "hist.csv"));
  fs::remove_all(root);
}
