#pragma once

// Modality refinement: cut a video into temporally coherent clips, weight
// frames by how well they agree with the rest of their clip and with each
// query's tokens, then attack every clip on its own weighted objective.

#include <utility>
#include <vector>

#include "vipro/attack.hpp"

namespace vipro {

/// Ordered, disjoint [start, end) ranges covering [0, T).
struct ClipPartition {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  std::size_t frames() const { return ranges.empty() ? 0 : ranges.back().second; }
  std::size_t cuts() const { return ranges.empty() ? 0 : ranges.size() - 1; }
  /// Coverage, contiguity and non-empty clips; every clip but the last at
  /// least min_len long.
  bool valid(std::size_t total_frames, std::size_t min_len) const;
};

/// Default minimum clip length: T / 4, at least 1.
std::size_t default_min_clip_len(std::size_t frames);

/// Scans adjacent-frame differences 1 - cos(f_t, f_{t+1}) left to right and cuts
/// after frame t once the difference reaches gamma and the open clip holds at
/// least min_len frames. The remainder is the final clip.
ClipPartition temporal_clip(const Mat64& frame_embeddings, double gamma, std::size_t min_len);

/// Uniformly random partition with exactly n_cuts cuts, all clips but the last
/// at least min_len long.
ClipPartition random_clip(std::size_t frames, std::size_t n_cuts, std::uint64_t seed,
                          std::size_t min_len = 1);

/// W_C[t]: mean cosine of frame t to every frame of its clip (itself included).
Vec64 frame_weights(const Mat64& clip_frames);

/// W_Cq[t][q]: mean cosine of frame t to the tokens of query q.
Mat64 query_weights(const Mat64& clip_frames, const std::vector<QueryEmbedding>& queries);

struct ClipWeights {
  Vec64 frame;  // W_C, T_C
  Mat64 query;  // W_Cq, T_C x N
  Mat64 sims;   // S, T_C x N
};

struct MatLoss {
  double value = 0.0;
  Mat64 grad;  // d loss / d S
};

/// sum_q exp(-a_q), a_q = sum_t W_C[t] |W_Cq[t][q] S[t][q]|. The kink of |u|
/// takes subgradient 0.
MatLoss loss_more(const ClipWeights& weights);

/// ViPro with modality refinement. Partition and weights come from the clean
/// video; S is recomputed from the perturbed frames at every step.
AttackResult vipro_more_attack(const EncoderParams& model, const Video& video,
                               const std::vector<QueryEmbedding>& queries,
                               const AttackConfig& cfg);

/// Frozen clip structure used by the refined objective.
struct MoreSetup {
  ClipPartition partition;
  std::vector<ClipWeights> weights;  // sims left empty
};

MoreSetup prepare_more(const EncoderParams& model, const Video& clean,
                       const std::vector<QueryEmbedding>& queries, const AttackConfig& cfg);

/// Total refined loss over all clips at `video` with the given frozen setup.
double more_objective(const EncoderParams& model, const Video& video,
                      const std::vector<QueryEmbedding>& queries, const MoreSetup& setup,
                      SimMode mode);
Mat64 more_objective_grad(const EncoderParams& model, const Video& video,
                          const std::vector<QueryEmbedding>& queries, const MoreSetup& setup,
                          SimMode mode);

}  // namespace vipro
