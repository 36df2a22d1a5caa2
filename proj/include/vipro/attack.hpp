#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "vipro/model.hpp"

namespace vipro {

enum class LossKind { neg, exp };

/// How the exponential loss combines queries: sum of per-query exponentials
/// (default) or a single exponential of the summed similarity.
enum class ExpForm { per_query, summed };

/// sign: delta -= alpha * sign(grad). raw: delta -= alpha * grad.
enum class StepRule { sign, raw };

enum class Clipping { none, temporal, random };

struct AttackConfig {
  double epsilon = 16.0 / 255.0;
  double alpha = 1.0 / 255.0;
  std::size_t eta = 128;
  LossKind loss = LossKind::exp;
  ExpForm exp_form = ExpForm::per_query;
  SimMode sim_mode = SimMode::white;
  StepRule step_rule = StepRule::sign;
  bool more_enabled = false;
  Clipping clipping = Clipping::temporal;  // used only when more_enabled
  double gamma = 1.0 - std::numbers::sqrt3 / 2.0;
  std::size_t min_clip_len = 0;            // 0 means T / 4 (at least 1)
  std::uint64_t clip_seed = 42;            // random clipping only
  bool recompute_weights = false;          // refresh MoRe weights every step
  bool unbounded = false;

  /// Throws ConfigError.
  void validate() const;
};

struct LossValue {
  double value = 0.0;
  Vec64 grad;  // d loss / d similarity
};

/// -sum(s); gradient -1 everywhere.
LossValue loss_neg(std::span<const double> sims);
/// sum_q exp(-s_q), gradient -exp(-s_q).
LossValue loss_exp(std::span<const double> sims);
/// exp(-sum_q s_q), gradient -exp(-sum) for every query.
LossValue loss_exp_summed(std::span<const double> sims);
LossValue evaluate_loss(const AttackConfig& cfg, std::span<const double> sims);

/// s_q = similarity(q, pooled video) for each target query.
Vec64 aggregate_sims(const EncoderParams& model, const VideoEmbedding& video,
                     const std::vector<QueryEmbedding>& queries, SimMode mode);

/// clamp(clean + delta, 0, 1)
Video apply_delta(const Video& clean, const Mat64& delta);

/// One projected step; afterwards |delta| <= epsilon (unless unbounded) and
/// clean + delta stays within [0, 1].
Mat64 pgd_step(const Mat64& delta, const Mat64& grad, const AttackConfig& cfg, const Video& clean);

struct AttackResult {
  Mat64 delta;               // T x D_in
  Video adversarial;         // clean + delta
  std::vector<double> loss_trace;  // loss before each of the eta updates
  Vec64 final_sims;          // per target query, on the pooled adversarial video
  std::vector<bool> success_at1;   // filled by the evaluation layer
  std::vector<bool> success_at5;
  /// [start, end) frame ranges attacked separately; one range for plain ViPro.
  std::vector<std::pair<std::size_t, std::size_t>> clips;
};

/// Plain ViPro: PGD on the pooled-video objective.
AttackResult vipro_attack(const EncoderParams& model, const Video& video,
                          const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg);

/// End-to-end loss of the plain attack as a function of the pixels; used by
/// gradient checks and the unbounded/bounded comparisons.
double plain_objective(const EncoderParams& model, const Video& video,
                       const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg);
/// Pixel gradient of plain_objective.
Mat64 plain_objective_grad(const EncoderParams& model, const Video& video,
                           const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg);

/// Largest |x' - x| and whether every pixel of x' lies in [0, 1].
struct BudgetCheck {
  double linf = 0.0;
  bool in_range = true;
};
BudgetCheck check_budget(const Video& clean, const Video& adversarial);

}  // namespace vipro
