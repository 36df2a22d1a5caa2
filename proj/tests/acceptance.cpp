// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "test_util.hpp"
#include "vipro/commands.hpp"

using namespace vipro;
using namespace vipro::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. gradients -------------------------------------------------------

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  SeededRng rng(2024);
  double worst_plain = 0.0, worst_more = 0.0;
  int instances = 0, resampled = 0;
  while (instances < 20) {
    const EncoderParams m = random_model(48, 16, 8, 32, 9000 + instances + resampled);
    const Video v = random_video(4, 48, rng);
    std::vector<QueryEmbedding> qs;
    for (int i = 0; i < 3; ++i) qs.push_back(encode_query(m, random_tokens(3, 32, rng)));

    AttackConfig cfg;
    cfg.more_enabled = true;
    cfg.clipping = Clipping::random;
    cfg.min_clip_len = 1;
    cfg.clip_seed = static_cast<std::uint64_t>(instances);
    const MoreSetup setup = prepare_more(m, v, qs, cfg);
    const VideoEmbedding e = encode_video(m, v);
    bool near_kink = false;
    for (std::size_t c = 0; c < setup.partition.ranges.size(); ++c) {
      const auto [start, end] = setup.partition.ranges[c];
      for (std::size_t t = start; t < end; ++t)
        for (std::size_t q = 0; q < qs.size(); ++q)
          near_kink |= std::abs(setup.weights[c].query(t - start, q) *
                                similarity(m, qs[q].pooled, e.per_frame.row(t), cfg.sim_mode)) < 1e-6;
    }
    if (near_kink) {
      ++resampled;
      continue;
    }

    auto plain = [&](std::span<const double> x) { return plain_objective(m, reshape(x, 4, 48), qs, cfg); };
    worst_plain = std::max(worst_plain, max_relative_error(plain_objective_grad(m, v, qs, cfg).data(),
                                                           finite_diff_grad(plain, v.data(), 1e-5), 1e-6));
    auto more = [&](std::span<const double> x) {
      return more_objective(m, reshape(x, 4, 48), qs, setup, cfg.sim_mode);
    };
    worst_more = std::max(worst_more, max_relative_error(more_objective_grad(m, v, qs, setup, cfg.sim_mode).data(),
                                                         finite_diff_grad(more, v.data(), 1e-5), 1e-6));
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {worst_plain <= 1e-4 && worst_more <= 1e-4 && secs < 30.0,
          fmt("max rel err exp %.2e, more %.2e over 20 instances (%d resampled), %.1fs", worst_plain,
              worst_more, resampled, secs)};
}

// ---- 2. oracles ---------------------------------------------------------

std::vector<std::size_t> brute_order(const Mat64& e, const EncoderParams& m, const Vec64& q, SimMode mode) {
  std::vector<std::pair<double, std::size_t>> s;
  for (std::size_t r = 0; r < e.rows(); ++r) {
    double v = 0.0;
    if (mode == SimMode::white) {
      for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) v += q[i] * m.interaction(i, j) * e(r, j);
    } else {
      double qq = 0.0, ee = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        v += q[i] * e(r, i);
        qq += q[i] * q[i];
        ee += e(r, i) * e(r, i);
      }
      v /= std::sqrt(qq * ee);
    }
    s.emplace_back(v, r);
  }
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (const auto& p : s) out.push_back(p.second);
  return out;
}

double plain_cos(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

Verdict oracle_suite() {
  SeededRng rng(77);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const SimMode mode = trial % 2 ? SimMode::grey : SimMode::white;
    const EncoderParams m = random_model(4, 4, 6, 4, 500 + trial);
    const Mat64 e = random_unit_rows(64, 6, rng);
    std::vector<std::size_t> ids(64), member(64);
    for (std::size_t i = 0; i < 64; ++i) {
      ids[i] = i;
      member[i] = rng.below(4);
    }
    const RetrievalIndex idx = RetrievalIndex::from_embeddings(e, ids, "oracle", mode);

    std::vector<LabeledQuery> labeled;
    std::vector<std::vector<std::size_t>> orders;
    for (int q = 0; q < 8; ++q) {
      const Vec64 v = rng.normal_vec(6);
      labeled.push_back({v, rng.below(64)});
      orders.push_back(brute_order(e, m, v, mode));
      for (std::size_t l : {1, 5, 20, 64}) {
        const auto got = rank(idx, m, v, l);
        if (!std::equal(got.begin(), got.end(), orders.back().begin())) ++mismatches;
      }
    }
    for (std::size_t k : {1, 5, 10}) {
      std::size_t hits = 0;
      for (std::size_t q = 0; q < labeled.size(); ++q)
        hits += std::find(orders[q].begin(), orders[q].begin() + static_cast<std::ptrdiff_t>(k),
                          labeled[q].gold) != orders[q].begin() + static_cast<std::ptrdiff_t>(k);
      if (recall_at_k(idx, m, labeled, k) != static_cast<double>(hits) / static_cast<double>(labeled.size()))
        ++mismatches;
    }
    std::vector<Vec64> cat_q;
    for (int c = 0; c < 4; ++c) cat_q.push_back(rng.normal_vec(6));
    const auto rp = r_precision(idx, m, cat_q, member);
    for (std::size_t c = 0; c < 4; ++c) {
      const std::size_t size = static_cast<std::size_t>(std::count(member.begin(), member.end(), c));
      if (size == 0) continue;
      const auto order = brute_order(e, m, cat_q[c], mode);
      std::size_t in = 0;
      for (std::size_t r = 0; r < size; ++r) in += member[order[r]] == c;
      if (rp[c] != static_cast<double>(in) / static_cast<double>(size)) ++mismatches;
    }
  }

  std::size_t clip_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t frames = 1 + rng.below(24);
    const std::size_t min_len = 1 + rng.below(4);
    const double gamma = 0.05 + 1.5 * rng.uniform();
    Mat64 f(frames, 5);
    Vec64 cur = rng.normal_vec(5);
    for (std::size_t t = 0; t < frames; ++t) {
      if (rng.uniform() < 0.3) cur = rng.normal_vec(5);
      for (std::size_t i = 0; i < 5; ++i) f(t, i) = cur[i] + 0.3 * rng.normal();
    }
    std::vector<std::pair<std::size_t, std::size_t>> ref;
    std::size_t start = 0;
    for (std::size_t t = 1; t < frames; ++t)
      if (1.0 - plain_cos(f.row(t - 1), f.row(t)) >= gamma && t - start >= min_len) {
        ref.emplace_back(start, t);
        start = t;
      }
    ref.emplace_back(start, frames);
    if (temporal_clip(f, gamma, min_len).ranges != ref) ++clip_mismatches;
  }
  return {mismatches == 0 && clip_mismatches == 0,
          fmt("retrieval mismatches %zu over 200 corpora, clipping mismatches %zu over 1000 sequences",
              mismatches, clip_mismatches)};
}

// ---- experiment helpers -------------------------------------------------

ExperimentConfig white_default(std::vector<std::uint64_t> seeds) {
  ExperimentConfig c;
  c.seeds = std::move(seeds);
  c.threads = 1;
  return c;
}

ExperimentConfig black_config(Clipping clipping, bool more) {
  ExperimentConfig c;
  c.scenario = Scenario::black;
  c.victim = {0.1, 64, 2};
  c.source = {0.0, 64, 1};
  c.attack.sim_mode = SimMode::grey;
  c.attack.more_enabled = more;
  c.attack.clipping = clipping;
  c.seeds = {42, 43, 44};
  c.threads = 1;
  return c;
}

std::vector<std::size_t> candidate_ids(const SeedReport& s) {
  std::vector<std::size_t> ids;
  for (const auto& o : s.candidates) ids.push_back(o.id);
  return ids;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };

  report(1, "gradient suite", gradient_suite());
  report(2, "oracle suite", oracle_suite());

  const ExperimentReport first = cmd_attack(white_default({42}), {});
  {
    std::size_t emitted = 0, violations = 0;
    double worst = 0.0;
    const double eps = first.config.attack.epsilon;
    for (const auto& o : first.seeds[0].candidates) {
      ++emitted;
      worst = std::max(worst, o.linf);
      violations += (o.linf > eps + 1e-12) || !o.in_range;
    }
    report(3, "budget invariants",
           {emitted > 0 && violations == 0,
            fmt("%zu adversarial videos, max linf %.10f (eps %.10f), violations %zu", emitted, worst, eps,
                violations)});
  }

  const auto t_white = Clock::now();
  const ExperimentReport white = run_experiment(white_default({42, 43, 44}));
  const double white_secs = seconds_since(t_white);
  ExperimentConfig neg_cfg = white_default({42, 43, 44});
  neg_cfg.attack.loss = LossKind::neg;
  const ExperimentReport neg = run_experiment(neg_cfg);
  report(4, "effectiveness direction",
         {white.mean_delta_r1 > 0.0 && white.mean_delta_r5 > 0.0 && white.mean_delta_r1 >= neg.mean_delta_r1 &&
              white_secs < 600.0,
          fmt("exp dR@1 %+.4f dR@5 %+.4f, neg dR@1 %+.4f, %.1fs single-threaded", white.mean_delta_r1,
              white.mean_delta_r5, neg.mean_delta_r1, white_secs)});

  {
    ExperimentConfig c = white_default({42, 43, 44});
    c.attack.unbounded = true;
    const ExperimentReport unb = run_experiment(c);
    bool ok = unb.seeds.size() == white.seeds.size();
    std::string detail;
    for (std::size_t i = 0; ok && i < unb.seeds.size(); ++i) {
      const SeedReport& u = unb.seeds[i];
      const SeedReport& b = white.seeds[i];
      ok = ok && candidate_ids(u) == candidate_ids(b) && u.mean_final_sum_sims >= b.mean_final_sum_sims &&
           u.delta_r1 >= b.delta_r1;
      detail += fmt("seed %llu sims %.3f>=%.3f dR@1 %+.4f>=%+.4f; ", static_cast<unsigned long long>(u.seed),
                    u.mean_final_sum_sims, b.mean_final_sum_sims, u.delta_r1, b.delta_r1);
    }
    report(5, "upper-bound direction", {ok, detail});
  }

  {
    ExperimentConfig c = white_default({42, 43, 44});
    c.scenario = Scenario::grey;
    c.attack.sim_mode = SimMode::grey;
    const ExperimentReport grey = run_experiment(c);
    bool same = grey.seeds.size() == white.seeds.size();
    for (std::size_t i = 0; same && i < grey.seeds.size(); ++i)
      same = candidate_ids(grey.seeds[i]) == candidate_ids(white.seeds[i]);
    report(6, "tier ordering",
           {same && grey.mean_delta_r1 <= white.mean_delta_r1,
            fmt("grey dR@1 %+.4f <= white %+.4f, same candidates %s", grey.mean_delta_r1, white.mean_delta_r1,
                same ? "yes" : "no")});
  }

  {
    const ExperimentReport plain = run_experiment(black_config(Clipping::temporal, false));
    const ExperimentReport temporal = run_experiment(black_config(Clipping::temporal, true));
    const ExperimentReport random = run_experiment(black_config(Clipping::random, true));
    std::string per_seed;
    for (std::size_t i = 0; i < temporal.seeds.size(); ++i)
      per_seed += fmt(" [seed %llu T %+.4f P %+.4f R %+.4f]",
                      static_cast<unsigned long long>(temporal.seeds[i].seed), temporal.seeds[i].delta_r1,
                      plain.seeds[i].delta_r1, random.seeds[i].delta_r1);
    report(7, "MoRe transfer direction",
           {temporal.mean_delta_r1 >= plain.mean_delta_r1 && temporal.mean_delta_r1 >= random.mean_delta_r1,
            fmt("temporal dR@1 %+.4f, plain %+.4f (margin %+.4f), random %+.4f (margin %+.4f);",
                temporal.mean_delta_r1, plain.mean_delta_r1, temporal.mean_delta_r1 - plain.mean_delta_r1,
                random.mean_delta_r1, temporal.mean_delta_r1 - random.mean_delta_r1) +
                per_seed});
  }

  {
    // Pooled embeddings of every attacked video under a full-length shuffle.
    const ExperimentConfig base = white_default({42, 43, 44});
    double worst_pool = 0.0;
    for (const auto& s : white.seeds) {
      DatasetSpec spec = base.corpus;
      spec.seed = s.seed;
      const Corpus corpus = generate_corpus(spec);
      const EncoderParams victim =
          plant_model(corpus.generator_params(), base.victim.d_hid, derive_seed(s.seed, base.victim.seed_tag),
                      base.victim.rho);
      for (const auto& o : s.candidates) {
        const Vec64 a = encode_video(victim, corpus.videos[o.id]).pooled;
        const Vec64 b =
            encode_video(victim, temporal_shuffle(corpus.videos[o.id], spec.frames, derive_seed(s.seed, o.id))).pooled;
        for (std::size_t i = 0; i < a.size(); ++i) worst_pool = std::max(worst_pool, std::abs(a[i] - b[i]));
      }
    }
    ExperimentConfig sh = base;
    sh.defense.kind = DefenseKind::shuffle;
    const ExperimentReport shuffled = run_experiment(sh);
    ExperimentConfig jc = base;
    jc.defense.kind = DefenseKind::compress;
    jc.defense.quality = 75;
    const ExperimentReport compressed = run_experiment(jc);
    const double drop = white.mean_delta_r1 - compressed.mean_delta_r1;
    const bool exact = shuffled.mean_delta_r1 == white.mean_delta_r1 && shuffled.mean_delta_r5 == white.mean_delta_r5;
    report(8, "defense invariance",
           {worst_pool <= 1e-12 && exact && std::isfinite(drop) && drop > 0.0 && compressed.mean_delta_r1 > 0.0,
            fmt("max pooled change %.2e, shuffle dR@1 %+.4f == %+.4f, dR@5 %+.4f == %+.4f; "
                "compress q=75 dR@1 %+.4f (drop %.4f)",
                worst_pool, shuffled.mean_delta_r1, white.mean_delta_r1, shuffled.mean_delta_r5,
                white.mean_delta_r5, compressed.mean_delta_r1, drop)});
  }

  {
    Vec64 top1, success;
    std::string detail;
    for (double rho : {0.0, 0.2, 0.5}) {
      ExperimentConfig c = white_default({42, 43, 44});
      c.victim.rho = rho;
      const ExperimentReport r = rho == 0.0 ? white : run_experiment(c);
      top1.push_back(r.mean_top1_similarity);
      success.push_back(r.mean_success_rate);
      detail += fmt("rho %.1f top1 %.4f success %.4f; ", rho, r.mean_top1_similarity, r.mean_success_rate);
    }
    const double rc = spearman(top1, success);
    report(9, "boundary correlation", {rc < 0.0, detail + fmt("spearman %+.3f", rc)});
  }

  {
    const ExperimentReport again = cmd_attack(white_default({42}), {});
    const std::string a = hash_region(first).dump();
    const std::string b = hash_region(again).dump();
    report(10, "determinism",
           {a == b, fmt("hash %s vs %s", hex64(fnv1a64(a)).c_str(), hex64(fnv1a64(b)).c_str())});
  }

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
