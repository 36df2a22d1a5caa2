#include "vipro/attack.hpp"

#include <algorithm>
#include <cmath>

namespace vipro {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_shapes(const EncoderParams& model, const Video& video,
                    const std::vector<QueryEmbedding>& queries) {
  if (video.rows() == 0) throw DimensionError("attack: video has no frames");
  if (video.cols() != model.d_in()) throw DimensionError("attack: frame width != model D_in");
  if (queries.empty()) throw std::invalid_argument("attack: no target queries");
  for (const auto& q : queries)
    if (q.pooled.size() != model.dim()) throw DimensionError("attack: query width != model d");
}

struct PlainStep {
  double loss = 0.0;
  Vec64 sims;
  Mat64 grad;  // pixels
};

PlainStep plain_forward_backward(const EncoderParams& model, const Video& video,
                                 const std::vector<QueryEmbedding>& queries,
                                 const AttackConfig& cfg, bool want_grad) {
  const VideoTape tape = encode_video_taped(model, video);
  PlainStep out;
  out.sims = aggregate_sims(model, tape.embedding, queries, cfg.sim_mode);
  LossValue lv = evaluate_loss(cfg, out.sims);
  out.loss = lv.value;
  if (!want_grad) return out;
  Vec64 g_pooled(model.dim(), 0.0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (lv.grad[q] == 0.0) continue;
    Vec64 gs = similarity_grad(model, queries[q].pooled, tape.embedding.pooled, cfg.sim_mode);
    for (std::size_t i = 0; i < gs.size(); ++i) g_pooled[i] += lv.grad[q] * gs[i];
  }
  out.grad = backprop_frames(model, tape, backprop_pool(tape, g_pooled));
  return out;
}

}  // namespace

Video apply_delta(const Video& clean, const Mat64& delta) {
  if (clean.rows() != delta.rows() || clean.cols() != delta.cols())
    throw DimensionError("apply_delta: shapes differ");
  Video out(clean.rows(), clean.cols());
  for (std::size_t i = 0; i < clean.size(); ++i)
    out.data()[i] = std::clamp(clean.data()[i] + delta.data()[i], 0.0, 1.0);
  return out;
}

void AttackConfig::validate() const {
  if (!unbounded && !(epsilon > 0.0)) throw ConfigError("attack: epsilon must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("attack: alpha must be > 0");
  if (more_enabled && !(gamma > 0.0 && gamma < 2.0))
    throw ConfigError("attack: gamma must be in (0, 2)");
}

LossValue loss_neg(std::span<const double> sims) {
  LossValue out;
  out.grad.assign(sims.size(), -1.0);
  for (double s : sims) out.value -= s;
  return out;
}

LossValue loss_exp(std::span<const double> sims) {
  LossValue out;
  out.grad.resize(sims.size());
  for (std::size_t q = 0; q < sims.size(); ++q) {
    const double e = std::exp(-sims[q]);
    out.value += e;
    out.grad[q] = -e;
  }
  return out;
}

LossValue loss_exp_summed(std::span<const double> sims) {
  double total = 0.0;
  for (double s : sims) total += s;
  const double e = std::exp(-total);
  return {e, Vec64(sims.size(), -e)};
}

LossValue evaluate_loss(const AttackConfig& cfg, std::span<const double> sims) {
  if (cfg.loss == LossKind::neg) return loss_neg(sims);
  return cfg.exp_form == ExpForm::per_query ? loss_exp(sims) : loss_exp_summed(sims);
}

Vec64 aggregate_sims(const EncoderParams& model, const VideoEmbedding& video,
                     const std::vector<QueryEmbedding>& queries, SimMode mode) {
  Vec64 s(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q)
    s[q] = similarity(model, queries[q].pooled, video.pooled, mode);
  return s;
}

Mat64 pgd_step(const Mat64& delta, const Mat64& grad, const AttackConfig& cfg, const Video& clean) {
  if (delta.rows() != grad.rows() || delta.cols() != grad.cols() ||
      delta.rows() != clean.rows() || delta.cols() != clean.cols())
    throw DimensionError("pgd_step: delta, gradient and video shapes differ");
  Mat64 out(delta.rows(), delta.cols());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double g = grad.data()[i];
    double d = delta.data()[i] - cfg.alpha * (cfg.step_rule == StepRule::sign ? sign(g) : g);
    if (!cfg.unbounded) d = std::clamp(d, -cfg.epsilon, cfg.epsilon);
    const double c = clean.data()[i];
    const double x = c + d;
    out.data()[i] = (x >= 0.0 && x <= 1.0) ? d : std::clamp(x, 0.0, 1.0) - c;
  }
  return out;
}

double plain_objective(const EncoderParams& model, const Video& video,
                       const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg) {
  require_shapes(model, video, queries);
  return plain_forward_backward(model, video, queries, cfg, false).loss;
}

Mat64 plain_objective_grad(const EncoderParams& model, const Video& video,
                           const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg) {
  require_shapes(model, video, queries);
  return plain_forward_backward(model, video, queries, cfg, true).grad;
}

AttackResult vipro_attack(const EncoderParams& model, const Video& video,
                          const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg) {
  cfg.validate();
  require_shapes(model, video, queries);
  {
    const VideoTape clean = encode_video_taped(model, video);
    if (std::all_of(clean.pre_norms.begin(), clean.pre_norms.end(),
                    [](double n) { return n <= kDegenerateNorm; }))
      throw AttackError("vipro_attack: every frame embedding is degenerate");
  }

  AttackResult r;
  r.delta = Mat64(video.rows(), video.cols());
  r.loss_trace.reserve(cfg.eta);
  for (std::size_t k = 0; k < cfg.eta; ++k) {
    const Video current = apply_delta(video, r.delta);
    PlainStep step = plain_forward_backward(model, current, queries, cfg, true);
    r.loss_trace.push_back(step.loss);
    r.delta = pgd_step(r.delta, step.grad, cfg, video);
  }
  r.adversarial = apply_delta(video, r.delta);
  r.final_sims = aggregate_sims(model, encode_video(model, r.adversarial), queries, cfg.sim_mode);
  r.clips = {{0, video.rows()}};
  return r;
}

BudgetCheck check_budget(const Video& clean, const Video& adversarial) {
  if (clean.rows() != adversarial.rows() || clean.cols() != adversarial.cols())
    throw DimensionError("check_budget: shapes differ");
  BudgetCheck b;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double x = adversarial.data()[i];
    b.linf = std::max(b.linf, std::abs(x - clean.data()[i]));
    if (!(x >= 0.0 && x <= 1.0)) b.in_range = false;
  }
  return b;
}

}  // namespace vipro
