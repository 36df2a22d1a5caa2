#include "vipro/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "vipro/io.hpp"

namespace vipro {

namespace {

constexpr std::uint64_t kCandidateTag = 0x63616e64;  // "cand"
constexpr std::uint64_t kHarvestTag = 0x68617276;    // "harv"

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

DefenseConfig per_video(const DefenseConfig& d, std::size_t id) {
  DefenseConfig out = d;
  out.seed = derive_seed(d.seed, id);
  return out;
}

/// Runs fn(i) for i in [0, n) on `threads` workers; the first exception wins.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

struct Plan {
  std::size_t id = 0;
  std::vector<QueryTokens> train;
  std::vector<QueryTokens> test;
  std::size_t harvested = 0;
};

struct SeedContext {
  const ExperimentConfig& cfg;
  const Corpus& corpus;
  const EncoderParams& victim;
  const EncoderParams& attacker;
  const RetrievalIndex& deployed;  // victim, defended corpus, bilinear score
};

CandidateOutcome attack_candidate(const SeedContext& ctx, const Plan& plan) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Video& clean = ctx.corpus.videos[plan.id];

  std::vector<QueryEmbedding> train;
  for (const auto& t : plan.train) train.push_back(encode_query(ctx.attacker, t));
  std::vector<LabeledQuery> test;
  for (const auto& t : plan.test) test.push_back({encode_query(ctx.victim, t).pooled, plan.id});
  std::vector<LabeledQuery> train_eval;
  for (const auto& t : plan.train) train_eval.push_back({encode_query(ctx.victim, t).pooled, plan.id});

  AttackResult r = cfg.attack.more_enabled ? vipro_more_attack(ctx.attacker, clean, train, cfg.attack)
                                           : vipro_attack(ctx.attacker, clean, train, cfg.attack);

  const Video shown = apply_defense(r.adversarial, per_video(cfg.defense, plan.id));
  const RetrievalIndex post =
      ctx.deployed.with_replaced(plan.id, encode_video(ctx.victim, shown).pooled);

  CandidateOutcome o;
  o.id = plan.id;
  o.category = ctx.corpus.categories[plan.id];
  o.harvested = plan.harvested;
  o.n_train = train.size();
  o.n_test = test.size();
  o.pre_r1 = recall_at_k(ctx.deployed, ctx.victim, test, 1);
  o.post_r1 = recall_at_k(post, ctx.victim, test, 1);
  o.pre_r5 = recall_at_k(ctx.deployed, ctx.victim, test, 5);
  o.post_r5 = recall_at_k(post, ctx.victim, test, 5);
  o.pre_train_r1 = recall_at_k(ctx.deployed, ctx.victim, train_eval, 1);
  o.post_train_r1 = recall_at_k(post, ctx.victim, train_eval, 1);
  for (const auto& q : test) {
    if (rank_of(ctx.deployed, ctx.victim, q.query, plan.id) == 1) continue;
    ++o.promotable;
    if (rank_of(post, ctx.victim, q.query, plan.id) == 1) ++o.promoted;
  }
  const Vec64 initial =
      aggregate_sims(ctx.attacker, encode_video(ctx.attacker, clean), train, cfg.attack.sim_mode);
  o.initial_sum_sims = std::accumulate(initial.begin(), initial.end(), 0.0);
  o.final_sum_sims = std::accumulate(r.final_sims.begin(), r.final_sims.end(), 0.0);
  const BudgetCheck b = check_budget(clean, r.adversarial);
  o.linf = b.linf;
  o.in_range = b.in_range;
  o.clips = r.clips.size();
  o.clip_ranges = r.clips;
  o.loss_trace = std::move(r.loss_trace);
  return o;
}

std::vector<Vec64> pooled_queries(const EncoderParams& model, const std::vector<QueryTokens>& tokens) {
  std::vector<Vec64> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(encode_query(model, t).pooled);
  return out;
}

std::vector<QueryTokens> category_queries(const Corpus& corpus) {
  std::vector<QueryTokens> out;
  for (std::size_t c = 0; c < corpus.spec.n_categories; ++c) out.push_back(category_query(corpus, c));
  return out;
}

CategoryHarvest harvest_categories(const EncoderParams& source, const RetrievalIndex& index,
                                   const Corpus& corpus, std::size_t candidate, std::size_t n_train,
                                   std::size_t n_test) {
  const Vec64 caption = encode_query(source, corpus.captions.at(candidate)).pooled;
  const std::size_t k = std::min(n_train + n_test, index.size());
  std::vector<std::size_t> cats;
  for (std::size_t id : rank(index, source, caption, k)) cats.push_back(corpus.categories[id]);
  SeededRng rng(derive_seed(derive_seed(corpus.spec.seed, kHarvestTag), candidate));
  rng.shuffle(cats);
  const std::size_t n_tr = std::min(n_train, cats.size());
  CategoryHarvest out;
  out.train.assign(cats.begin(), cats.begin() + static_cast<std::ptrdiff_t>(n_tr));
  out.test.assign(cats.begin() + static_cast<std::ptrdiff_t>(n_tr), cats.end());
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (scenario == Scenario::black && attack.sim_mode == SimMode::white)
    throw ConfigError("black scenario forbids the white-box similarity (attack.sim_mode = white)");
  if (scenario == Scenario::grey && attack.sim_mode != SimMode::grey)
    throw ConfigError("grey scenario requires cosine similarity (attack.sim_mode = grey)");
  if (candidates == 0) throw ConfigError("candidates must be positive");
  if (queries_k < 2) throw ConfigError("queries_k must be at least 2");
  if (train_count() == 0 || train_count() >= queries_k)
    throw ConfigError("n_train must leave at least one test query");
  if (rank_limit == 0) throw ConfigError("rank_limit must be positive");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (hist_bins < 2) throw ConfigError("hist_bins must be at least 2");
  for (const ModelSpec* m : {&victim, &source}) {
    if (!(m->rho >= 0.0)) throw ConfigError("model rho must be >= 0");
    if (corpus_path.empty() && m->d_hid < corpus.dim) throw ConfigError("model d_hid must be >= corpus dim");
  }
  attack.validate();
  if (corpus_path.empty()) {
    corpus.validate();
    defense.validate(corpus.frames);
  }
}

ExperimentConfig resolve_scenario(ExperimentConfig cfg, bool more_explicit, bool sim_explicit) {
  if (!sim_explicit) cfg.attack.sim_mode = cfg.scenario == Scenario::white ? SimMode::white : SimMode::grey;
  if (!more_explicit && cfg.scenario == Scenario::black) cfg.attack.more_enabled = true;
  return cfg;
}

CategoryHarvest harvest_category_queries(const EncoderParams& source, const Corpus& corpus,
                                         std::size_t candidate, std::size_t n_train,
                                         std::size_t n_test) {
  const RetrievalIndex index = RetrievalIndex::build(source, corpus.videos, SimMode::white);
  return harvest_categories(source, index, corpus, candidate, n_train, n_test);
}

SeedReport run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  Corpus corpus;
  if (cfg.corpus_path.empty()) {
    DatasetSpec spec = cfg.corpus;
    spec.seed = seed;
    corpus = generate_corpus(spec);
  } else {
    corpus = load_corpus(cfg.corpus_path);
    cfg.defense.validate(corpus.spec.frames);
  }
  const GeneratorParams gp = corpus.generator_params();
  const bool black = cfg.scenario == Scenario::black;
  const EncoderParams victim =
      plant_model(gp, cfg.victim.d_hid, derive_seed(seed, cfg.victim.seed_tag), cfg.victim.rho);
  const EncoderParams source =
      black ? plant_model(gp, cfg.source.d_hid, derive_seed(seed, cfg.source.seed_tag), cfg.source.rho)
            : EncoderParams{};
  const EncoderParams& attacker = black ? source : victim;

  SeedReport rep;
  rep.seed = seed;
  rep.victim_id = victim.model_id;
  rep.source_id = black ? source.model_id : victim.model_id;

  // Vanilla retrieval on the undefended corpus.
  const RetrievalIndex clean_index = RetrievalIndex::build(victim, corpus.videos, SimMode::white);
  const std::vector<Vec64> captions = pooled_queries(victim, corpus.captions);
  {
    std::vector<LabeledQuery> paired;
    for (std::size_t i = 0; i < corpus.size(); ++i) paired.push_back({captions[i], i});
    rep.vanilla_r1 = recall_at_k(clean_index, victim, paired, 1);
    rep.vanilla_r5 = recall_at_k(clean_index, victim, paired, 5);
  }
  rep.top1 = top1_histogram(clean_index, victim, captions, cfg.hist_bins);
  {
    Vec64 margins;
    for (const auto& q : captions) margins.push_back(boundary_report(clean_index, victim, q).margin);
    rep.mean_top1_margin = mean(margins);
  }
  const std::vector<QueryTokens> cat_tokens = category_queries(corpus);
  rep.r_precision = r_precision(clean_index, victim, pooled_queries(victim, cat_tokens), corpus.categories);

  // The deployed index sees every video through the defense.
  std::vector<Video> shown(corpus.size());
  parallel_for(corpus.size(), cfg.threads,
               [&](std::size_t i) { shown[i] = apply_defense(corpus.videos[i], per_video(cfg.defense, i)); });
  const RetrievalIndex deployed = cfg.defense.kind == DefenseKind::none
                                      ? clean_index
                                      : RetrievalIndex::build(victim, shown, SimMode::white);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng pick_rng(derive_seed(seed, kCandidateTag));
  pick_rng.shuffle(order);

  std::vector<Plan> plans;
  if (black) {
    // Top half of categories by vanilla R-Precision, averaged over both models.
    const RetrievalIndex src_index = RetrievalIndex::build(source, corpus.videos, SimMode::white);
    const Vec64 src_rp =
        r_precision(src_index, source, pooled_queries(source, cat_tokens), corpus.categories);
    std::vector<std::size_t> cats(cat_tokens.size());
    std::iota(cats.begin(), cats.end(), std::size_t{0});
    std::stable_sort(cats.begin(), cats.end(), [&](std::size_t a, std::size_t b) {
      return rep.r_precision[a] + src_rp[a] > rep.r_precision[b] + src_rp[b];
    });
    cats.resize((cats.size() + 1) / 2);
    std::sort(cats.begin(), cats.end());
    rep.chosen_categories = cats;
    for (std::size_t id : order) {
      if (plans.size() == cfg.candidates) break;
      if (!std::binary_search(cats.begin(), cats.end(), corpus.categories[id])) continue;
      const CategoryHarvest h =
          harvest_categories(source, src_index, corpus, id, cfg.train_count(), cfg.test_count());
      if (h.train.empty() || h.test.empty()) continue;
      Plan p;
      p.id = id;
      p.harvested = h.train.size() + h.test.size();
      for (std::size_t c : h.train) p.train.push_back(cat_tokens[c]);
      for (std::size_t c : h.test) p.test.push_back(cat_tokens[c]);
      plans.push_back(std::move(p));
    }
  } else {
    for (std::size_t id : order) {
      if (plans.size() == cfg.candidates) break;
      const HarvestedQueries h = harvest_queries(victim, clean_index, captions, corpus.spec.seed, id, cfg.train_count(),
                                                 cfg.test_count(), cfg.rank_limit);
      if (h.train.empty() || h.test.empty()) continue;
      Plan p;
      p.id = id;
      p.harvested = h.kept;
      for (std::size_t o : h.train) p.train.push_back(corpus.captions[o]);
      for (std::size_t o : h.test) p.test.push_back(corpus.captions[o]);
      plans.push_back(std::move(p));
    }
  }
  std::sort(plans.begin(), plans.end(), [](const Plan& a, const Plan& b) { return a.id < b.id; });

  const SeedContext ctx{cfg, corpus, victim, attacker, deployed};
  rep.candidates.resize(plans.size());
  parallel_for(plans.size(), cfg.threads,
               [&](std::size_t i) { rep.candidates[i] = attack_candidate(ctx, plans[i]); });

  Vec64 pre1, post1, pre5, post5, sums;
  std::size_t promoted = 0, promotable = 0;
  for (const auto& c : rep.candidates) {
    pre1.push_back(c.pre_r1);
    post1.push_back(c.post_r1);
    pre5.push_back(c.pre_r5);
    post5.push_back(c.post_r5);
    sums.push_back(c.final_sum_sims);
    promoted += c.promoted;
    promotable += c.promotable;
    rep.max_linf = std::max(rep.max_linf, c.linf);
    if (!c.in_range) ++rep.range_violations;
  }
  rep.mean_pre_r1 = mean(pre1);
  rep.mean_post_r1 = mean(post1);
  rep.mean_pre_r5 = mean(pre5);
  rep.mean_post_r5 = mean(post5);
  rep.delta_r1 = delta_recall(rep.mean_pre_r1, rep.mean_post_r1);
  rep.delta_r5 = delta_recall(rep.mean_pre_r5, rep.mean_post_r5);
  rep.mean_final_sum_sims = mean(sums);
  rep.success_rate = promotable ? static_cast<double>(promoted) / static_cast<double>(promotable) : 0.0;
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.config = cfg;
  Vec64 d1, d5, sums, success, top1;
  for (std::uint64_t seed : cfg.seeds) {
    r.seeds.push_back(run_seed(cfg, seed));
    const SeedReport& s = r.seeds.back();
    d1.push_back(s.delta_r1);
    d5.push_back(s.delta_r5);
    sums.push_back(s.mean_final_sum_sims);
    success.push_back(s.success_rate);
    top1.push_back(s.top1.mean_raw);
  }
  r.mean_delta_r1 = mean(d1);
  r.mean_delta_r5 = mean(d5);
  r.mean_final_sum_sims = mean(sums);
  r.mean_success_rate = mean(success);
  r.mean_top1_similarity = mean(top1);
  r.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  const auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    Vec64 r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const Vec64 ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

AblationAxis parse_axis(const std::string& name) {
  if (name == "queries") return AblationAxis::queries;
  if (name == "eta") return AblationAxis::eta;
  if (name == "alpha") return AblationAxis::alpha;
  if (name == "epsilon") return AblationAxis::epsilon;
  if (name == "clipping") return AblationAxis::clipping;
  throw ConfigError("unknown ablation axis '" + name + "' (queries, eta, alpha, epsilon, clipping)");
}

std::string axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::queries: return "queries";
    case AblationAxis::eta: return "eta";
    case AblationAxis::alpha: return "alpha";
    case AblationAxis::epsilon: return "epsilon";
    case AblationAxis::clipping: break;
  }
  return "clipping";
}

std::vector<std::pair<std::string, ExperimentConfig>> ablation_grid(const ExperimentConfig& base,
                                                                    AblationAxis axis) {
  std::vector<std::pair<std::string, ExperimentConfig>> grid;
  ExperimentConfig c = base;
  switch (axis) {
    case AblationAxis::queries:
      for (std::size_t n : {2, 5, 10, 20, 50}) {
        c.n_train = n;
        c.queries_k = n + 10;
        grid.emplace_back(std::to_string(n), c);
      }
      break;
    case AblationAxis::eta:
      for (std::size_t e : {16, 32, 64, 128, 256}) {
        c.attack.eta = e;
        grid.emplace_back(std::to_string(e), c);
      }
      break;
    case AblationAxis::alpha:
      for (int a : {1, 2, 3, 4}) {
        c.attack.alpha = a / 255.0;
        grid.emplace_back(std::to_string(a) + "/255", c);
      }
      break;
    case AblationAxis::epsilon:
      for (int e : {4, 8, 16, 32}) {
        c.attack.epsilon = e / 255.0;
        grid.emplace_back(std::to_string(e) + "/255", c);
      }
      break;
    case AblationAxis::clipping:
      c.attack.more_enabled = false;
      grid.emplace_back("none", c);
      c.attack.more_enabled = true;
      c.attack.clipping = Clipping::random;
      grid.emplace_back("random", c);
      c.attack.clipping = Clipping::temporal;
      grid.emplace_back("temporal", c);
      break;
  }
  return grid;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base, AblationAxis axis) {
  std::vector<AblationRow> rows;
  for (const auto& [label, cfg] : ablation_grid(base, axis)) {
    const ExperimentReport r = run_experiment(cfg);
    AblationRow row;
    row.axis = axis_name(axis);
    row.value = label;
    row.n_seeds = r.seeds.size();
    Vec64 pre, post;
    for (const auto& s : r.seeds) {
      pre.push_back(s.mean_pre_r1);
      post.push_back(s.mean_post_r1);
    }
    row.mean_pre_r1 = mean(pre);
    row.mean_post_r1 = mean(post);
    row.delta_r1 = r.mean_delta_r1;
    row.delta_r5 = r.mean_delta_r5;
    row.mean_final_sum_sims = r.mean_final_sum_sims;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace vipro
