#pragma once

// Experiment orchestration: builds the corpus and the victim/source models for
// each seed, picks candidates, harvests their queries, attacks them in a worker
// pool and aggregates recall deltas into an ExperimentReport.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vipro/defenses.hpp"
#include "vipro/more.hpp"
#include "vipro/retrieval.hpp"
#include "vipro/synthdata.hpp"

namespace vipro {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Scenario { white, grey, black };

struct ModelSpec {
  double rho = 0.0;
  std::size_t d_hid = 64;
  std::uint64_t seed_tag = 1;  // model seed = derive_seed(run seed, seed_tag)
};

struct ExperimentConfig {
  DatasetSpec corpus;
  std::string corpus_path;  // when set, the corpus is loaded instead of generated
  ModelSpec victim{0.0, 64, 1};
  ModelSpec source{0.0, 64, 2};
  AttackConfig attack;
  Scenario scenario = Scenario::white;
  DefenseConfig defense;
  std::size_t candidates = 32;
  std::size_t queries_k = 20;  // harvested per candidate
  std::size_t n_train = 0;     // 0: half of queries_k
  std::size_t rank_limit = 20;
  std::vector<std::uint64_t> seeds{42};
  std::size_t threads = 1;
  std::size_t hist_bins = 20;

  std::size_t train_count() const { return n_train ? n_train : queries_k / 2; }
  std::size_t test_count() const { return queries_k - train_count(); }

  /// Scenario tier constraints and value ranges; throws ConfigError.
  void validate() const;
};

struct CandidateOutcome {
  std::size_t id = 0;
  std::size_t category = 0;
  std::size_t harvested = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double pre_r1 = 0.0, post_r1 = 0.0;
  double pre_r5 = 0.0, post_r5 = 0.0;
  double pre_train_r1 = 0.0, post_train_r1 = 0.0;
  double initial_sum_sims = 0.0;  // on the attack model, target queries
  double final_sum_sims = 0.0;
  std::size_t promoted = 0;       // test queries newly at rank 1
  std::size_t promotable = 0;     // test queries not at rank 1 before
  double linf = 0.0;
  bool in_range = true;
  std::size_t clips = 1;
  std::vector<double> loss_trace;
  std::vector<std::pair<std::size_t, std::size_t>> clip_ranges;
};

struct SeedReport {
  std::uint64_t seed = 0;
  std::string victim_id;
  std::string source_id;
  double vanilla_r1 = 0.0;  // paired captions on the victim
  double vanilla_r5 = 0.0;
  std::vector<CandidateOutcome> candidates;  // sorted by id
  double mean_pre_r1 = 0.0, mean_post_r1 = 0.0;
  double mean_pre_r5 = 0.0, mean_post_r5 = 0.0;
  double delta_r1 = 0.0, delta_r5 = 0.0;
  double mean_final_sum_sims = 0.0;
  double success_rate = 0.0;  // promoted / promotable over all test queries
  double max_linf = 0.0;
  std::size_t range_violations = 0;
  std::vector<double> r_precision;          // per category, vanilla victim
  std::vector<std::size_t> chosen_categories;  // black scenario
  Histogram top1;                            // paired captions on the victim
  double mean_top1_margin = 0.0;             // top-1 minus top-2, paired captions
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedReport> seeds;
  double mean_delta_r1 = 0.0;
  double mean_delta_r5 = 0.0;
  double mean_final_sum_sims = 0.0;
  double mean_success_rate = 0.0;
  double mean_top1_similarity = 0.0;
  double runtime_seconds = 0.0;
};

/// Resolves scenario defaults: white keeps the bilinear score, grey and black
/// switch to cosine; black enables MoRe unless the config said otherwise.
ExperimentConfig resolve_scenario(ExperimentConfig cfg, bool more_explicit, bool sim_explicit);

SeedReport run_seed(const ExperimentConfig& cfg, std::uint64_t seed);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Black-box query harvest: the categories of the top-K videos retrieved by the
/// candidate's own caption on the source model, shuffled and split.
struct CategoryHarvest {
  std::vector<std::size_t> train;  // category ids
  std::vector<std::size_t> test;
};
CategoryHarvest harvest_category_queries(const EncoderParams& source, const Corpus& corpus,
                                         std::size_t candidate, std::size_t n_train,
                                         std::size_t n_test);

/// Spearman rank correlation with average ranks for ties; 0 when undefined.
double spearman(std::span<const double> a, std::span<const double> b);

enum class AblationAxis { queries, eta, alpha, epsilon, clipping };
AblationAxis parse_axis(const std::string& name);
std::string axis_name(AblationAxis axis);

struct AblationRow {
  std::string axis;
  std::string value;
  std::size_t n_seeds = 0;  // values are means over the config's seeds
  double mean_pre_r1 = 0.0, mean_post_r1 = 0.0;
  double delta_r1 = 0.0, delta_r5 = 0.0;
  double mean_final_sum_sims = 0.0;
};

/// The grid of one axis; each entry is a (label, config) pair. One output row
/// per grid point.
std::vector<std::pair<std::string, ExperimentConfig>> ablation_grid(const ExperimentConfig& base,
                                                                    AblationAxis axis);
std::vector<AblationRow> run_ablation(const ExperimentConfig& base, AblationAxis axis);

}  // namespace vipro
