#pragma once

// The planted victim: a per-frame tanh encoder for video, a token table for
// text, mean-pool aggregation, and either a bilinear (white-box) or cosine
// (grey-box) cross-modal score. Every forward map has a matching analytic
// backward pass used by the attacks.

#include <cstdint>
#include <string>
#include <vector>

#include "vipro/numerics.hpp"

namespace vipro {

/// frames x pixels, values in [0, 1].
using Video = Mat64;
using QueryTokens = std::vector<std::size_t>;

enum class SimMode { white, grey };

/// What the data generator shares with a planted model.
struct GeneratorParams {
  Mat64 generator;    // D_in x d, latent -> pixel directions
  Mat64 vocab;        // V x d, unit rows
  double amplitude = 0.0;  // pixel amplitude a of the latent signal
};

struct EncoderParams {
  Mat64 w1;           // d_hid x D_in
  Mat64 w2;           // d x d_hid
  Mat64 token_table;  // V x d
  Mat64 interaction;  // d x d, symmetric
  double input_scale = 2.0;  // pixel p maps to input_scale * (p - 0.5)
  std::uint64_t seed = 0;
  double rho = 0.0;
  std::string model_id;

  std::size_t d_in() const { return w1.cols(); }
  std::size_t d_hid() const { return w1.rows(); }
  std::size_t dim() const { return w2.rows(); }
  std::size_t vocab_size() const { return token_table.rows(); }

  /// Throws DimensionError / std::invalid_argument on broken invariants.
  void validate() const;
};

struct VideoEmbedding {
  Mat64 per_frame;  // T x d
  Vec64 pooled;     // d
  bool degenerate = false;
};

struct QueryEmbedding {
  Mat64 per_token;  // N_tok x d
  Vec64 pooled;     // d
  bool degenerate = false;
};

Normalized encode_frame(const EncoderParams& params, std::span<const double> frame);
VideoEmbedding encode_video(const EncoderParams& params, const Video& video);
QueryEmbedding encode_query(const EncoderParams& params, const QueryTokens& tokens);

/// normalize(mean of rows), summed in ascending row order.
Normalized mean_pool(const Mat64& rows);

double similarity(const EncoderParams& params, std::span<const double> query,
                  std::span<const double> video, SimMode mode);
/// d similarity / d video
Vec64 similarity_grad(const EncoderParams& params, std::span<const double> query,
                      std::span<const double> video, SimMode mode);

/// Forward pass with the intermediates the backward pass needs.
struct VideoTape {
  VideoEmbedding embedding;
  Mat64 activations;  // T x d_hid, tanh outputs
  Vec64 pre_norms;    // T, norm of W2 * activation
  Vec64 pool_norm;    // 1 element: norm of the frame mean
};

VideoTape encode_video_taped(const EncoderParams& params, const Video& video);

/// Per-frame cotangents (T x d) -> pixel gradient (T x D_in).
Mat64 backprop_frames(const EncoderParams& params, const VideoTape& tape,
                      const Mat64& upstream);

/// Pooled-embedding cotangent -> per-frame cotangents (T x d).
Mat64 backprop_pool(const VideoTape& tape, std::span<const double> upstream);

/// Exact pixel gradient for per-frame embedding cotangents.
Mat64 grad_wrt_frames(const EncoderParams& params, const Video& video, const Mat64& upstream);

/// Builds a victim aligned with the generator; rho scales relative weight noise.
EncoderParams plant_model(const GeneratorParams& generator, std::size_t d_hid,
                          std::uint64_t seed, double rho);

}  // namespace vipro
