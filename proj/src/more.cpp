#include "vipro/more.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vipro {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Mat64 slice_rows(const Mat64& m, std::size_t start, std::size_t end) {
  Mat64 out(end - start, m.cols());
  std::copy(m.data().begin() + static_cast<std::ptrdiff_t>(start * m.cols()),
            m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols()), out.data().begin());
  return out;
}

ClipPartition partition_for(const Mat64& frames, const AttackConfig& cfg) {
  const std::size_t t = frames.rows();
  const std::size_t min_len = cfg.min_clip_len ? cfg.min_clip_len : default_min_clip_len(t);
  switch (cfg.clipping) {
    case Clipping::none:
      return ClipPartition{{{0, t}}};
    case Clipping::random: {
      // Same number of cuts as temporal clipping would make; only placement differs.
      const std::size_t cuts = temporal_clip(frames, cfg.gamma, min_len).cuts();
      return random_clip(t, cuts, cfg.clip_seed, min_len);
    }
    case Clipping::temporal:
      break;
  }
  return temporal_clip(frames, cfg.gamma, min_len);
}

std::vector<ClipWeights> weights_for(const Mat64& frames, const ClipPartition& partition,
                                     const std::vector<QueryEmbedding>& queries) {
  std::vector<ClipWeights> out;
  out.reserve(partition.ranges.size());
  for (const auto& [start, end] : partition.ranges) {
    const Mat64 clip = slice_rows(frames, start, end);
    out.push_back({frame_weights(clip), query_weights(clip, queries), {}});
  }
  return out;
}

struct MoreStep {
  double loss = 0.0;
  Mat64 grad;  // pixels
};

MoreStep more_forward_backward(const EncoderParams& model, const VideoTape& tape,
                               const std::vector<QueryEmbedding>& queries,
                               const ClipPartition& partition, std::vector<ClipWeights>& weights,
                               SimMode mode, bool want_grad) {
  const Mat64& frames = tape.embedding.per_frame;
  Mat64 upstream(frames.rows(), frames.cols());
  MoreStep out;
  for (std::size_t c = 0; c < partition.ranges.size(); ++c) {
    const auto [start, end] = partition.ranges[c];
    ClipWeights& w = weights[c];
    w.sims = Mat64(end - start, queries.size());
    for (std::size_t t = start; t < end; ++t)
      for (std::size_t q = 0; q < queries.size(); ++q)
        w.sims(t - start, q) = similarity(model, queries[q].pooled, frames.row(t), mode);
    MatLoss lv = loss_more(w);
    out.loss += lv.value;
    if (!want_grad) continue;
    for (std::size_t t = start; t < end; ++t) {
      auto dst = upstream.row(t);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const double g = lv.grad(t - start, q);
        if (g == 0.0) continue;
        Vec64 gs = similarity_grad(model, queries[q].pooled, frames.row(t), mode);
        for (std::size_t i = 0; i < gs.size(); ++i) dst[i] += g * gs[i];
      }
    }
  }
  if (want_grad) out.grad = backprop_frames(model, tape, upstream);
  return out;
}

}  // namespace

bool ClipPartition::valid(std::size_t total_frames, std::size_t min_len) const {
  if (ranges.empty()) return false;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto [start, end] = ranges[i];
    if (start != expected || end <= start) return false;
    if (i + 1 < ranges.size() && end - start < min_len) return false;
    expected = end;
  }
  return expected == total_frames;
}

std::size_t default_min_clip_len(std::size_t frames) { return std::max<std::size_t>(1, frames / 4); }

ClipPartition temporal_clip(const Mat64& frame_embeddings, double gamma, std::size_t min_len) {
  const std::size_t t_total = frame_embeddings.rows();
  if (t_total == 0) throw std::invalid_argument("temporal_clip: no frames");
  if (!(gamma > 0.0 && gamma < 2.0)) throw std::invalid_argument("temporal_clip: gamma not in (0, 2)");
  if (min_len == 0) throw std::invalid_argument("temporal_clip: min_len must be >= 1");

  const Mat64 w = cos_sim_matrix(frame_embeddings, frame_embeddings);
  ClipPartition p;
  std::size_t start = 0;
  for (std::size_t t = 0; t + 1 < t_total; ++t) {
    const double diff = 1.0 - w(t, t + 1);
    if (diff >= gamma && t + 1 - start >= min_len) {
      p.ranges.emplace_back(start, t + 1);
      start = t + 1;
    }
  }
  p.ranges.emplace_back(start, t_total);
  return p;
}

ClipPartition random_clip(std::size_t frames, std::size_t n_cuts, std::uint64_t seed,
                          std::size_t min_len) {
  if (n_cuts >= frames) throw std::invalid_argument("random_clip: n_cuts must be < T");
  if (min_len == 0) throw std::invalid_argument("random_clip: min_len must be >= 1");
  const std::size_t parts = n_cuts + 1;
  const std::size_t reserved = n_cuts * min_len + 1;
  if (reserved > frames)
    throw std::invalid_argument("random_clip: " + std::to_string(n_cuts) + " cuts with min_len " +
                                std::to_string(min_len) + " do not fit in " +
                                std::to_string(frames) + " frames");
  // Stars and bars: spread the slack over the parts uniformly over all
  // compositions by choosing bar positions among slack + parts - 1 slots.
  const std::size_t slack = frames - reserved;
  std::vector<std::size_t> slots(slack + parts - 1);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  SeededRng rng(seed);
  rng.shuffle(slots);
  std::vector<std::size_t> bars(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(n_cuts));
  std::sort(bars.begin(), bars.end());

  ClipPartition p;
  std::size_t start = 0;
  std::size_t prev_bar = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const std::size_t bar = i < n_cuts ? bars[i] : slack + parts - 1;
    const std::size_t extra = bar - prev_bar - (i == 0 ? 0 : 1);
    const std::size_t len = (i + 1 < parts ? min_len : 1) + extra;
    p.ranges.emplace_back(start, start + len);
    start += len;
    prev_bar = bar;
  }
  return p;
}

Vec64 frame_weights(const Mat64& clip_frames) {
  if (clip_frames.rows() == 0) throw std::invalid_argument("frame_weights: empty clip");
  const Mat64 w = cos_sim_matrix(clip_frames, clip_frames);
  Vec64 out(w.rows());
  for (std::size_t t = 0; t < w.rows(); ++t) {
    double s = 0.0;
    for (std::size_t u = 0; u < w.cols(); ++u) s += w(t, u);
    out[t] = s / static_cast<double>(w.cols());
  }
  return out;
}

Mat64 query_weights(const Mat64& clip_frames, const std::vector<QueryEmbedding>& queries) {
  Mat64 out(clip_frames.rows(), queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Mat64& tokens = queries[q].per_token;
    if (tokens.rows() == 0) throw std::invalid_argument("query_weights: query without tokens");
    for (std::size_t t = 0; t < clip_frames.rows(); ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < tokens.rows(); ++j) s += cos_sim(clip_frames.row(t), tokens.row(j));
      out(t, q) = s / static_cast<double>(tokens.rows());
    }
  }
  return out;
}

MatLoss loss_more(const ClipWeights& w) {
  const std::size_t frames = w.frame.size();
  const std::size_t n = w.sims.cols();
  if (w.query.rows() != frames || w.sims.rows() != frames || w.query.cols() != n)
    throw DimensionError("loss_more: W_C, W_Cq and S disagree on T_C or N");
  MatLoss out;
  out.grad = Mat64(frames, n);
  for (std::size_t q = 0; q < n; ++q) {
    double a = 0.0;
    for (std::size_t t = 0; t < frames; ++t) a += w.frame[t] * std::abs(w.query(t, q) * w.sims(t, q));
    const double e = std::exp(-a);
    out.value += e;
    for (std::size_t t = 0; t < frames; ++t) {
      const double u = w.query(t, q) * w.sims(t, q);
      out.grad(t, q) = -e * w.frame[t] * sign(u) * w.query(t, q);
    }
  }
  return out;
}

MoreSetup prepare_more(const EncoderParams& model, const Video& clean,
                       const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg) {
  const VideoEmbedding emb = encode_video(model, clean);
  MoreSetup s;
  s.partition = partition_for(emb.per_frame, cfg);
  s.weights = weights_for(emb.per_frame, s.partition, queries);
  return s;
}

double more_objective(const EncoderParams& model, const Video& video,
                      const std::vector<QueryEmbedding>& queries, const MoreSetup& setup,
                      SimMode mode) {
  auto weights = setup.weights;
  return more_forward_backward(model, encode_video_taped(model, video), queries, setup.partition,
                               weights, mode, false)
      .loss;
}

Mat64 more_objective_grad(const EncoderParams& model, const Video& video,
                          const std::vector<QueryEmbedding>& queries, const MoreSetup& setup,
                          SimMode mode) {
  auto weights = setup.weights;
  return more_forward_backward(model, encode_video_taped(model, video), queries, setup.partition,
                               weights, mode, true)
      .grad;
}

AttackResult vipro_more_attack(const EncoderParams& model, const Video& video,
                               const std::vector<QueryEmbedding>& queries,
                               const AttackConfig& cfg) {
  cfg.validate();
  if (video.rows() == 0 || video.cols() != model.d_in())
    throw DimensionError("vipro_more_attack: video shape does not match the model");
  if (queries.empty()) throw std::invalid_argument("vipro_more_attack: no target queries");

  const VideoTape clean = encode_video_taped(model, video);
  if (std::all_of(clean.pre_norms.begin(), clean.pre_norms.end(),
                  [](double n) { return n <= kDegenerateNorm; }))
    throw AttackError("vipro_more_attack: every frame embedding is degenerate");

  const ClipPartition partition = partition_for(clean.embedding.per_frame, cfg);
  std::vector<ClipWeights> weights = weights_for(clean.embedding.per_frame, partition, queries);

  AttackResult r;
  r.delta = Mat64(video.rows(), video.cols());
  r.loss_trace.reserve(cfg.eta);
  for (std::size_t k = 0; k < cfg.eta; ++k) {
    const VideoTape tape = encode_video_taped(model, apply_delta(video, r.delta));
    if (cfg.recompute_weights && k > 0)
      weights = weights_for(tape.embedding.per_frame, partition, queries);
    // Clips own disjoint frames, so one joint step equals one step per clip.
    MoreStep step = more_forward_backward(model, tape, queries, partition, weights, cfg.sim_mode,
                                          true);
    r.loss_trace.push_back(step.loss);
    r.delta = pgd_step(r.delta, step.grad, cfg, video);
  }
  r.adversarial = apply_delta(video, r.delta);
  r.final_sims = aggregate_sims(model, encode_video(model, r.adversarial), queries, cfg.sim_mode);
  r.clips = partition.ranges;
  return r;
}

}  // namespace vipro
