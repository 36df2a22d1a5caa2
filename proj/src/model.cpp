#include "vipro/model.hpp"

#include <cmath>
#include <sstream>

namespace vipro {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

bool all_finite(const Mat64& m) {
  for (double x : m.data())
    if (!std::isfinite(x)) return false;
  return true;
}

double rms(const Mat64& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return m.empty() ? 0.0 : std::sqrt(s / static_cast<double>(m.size()));
}

void add_noise(Mat64& m, double scale, SeededRng& rng) {
  // Always draw so that equal seeds give the same noise pattern at any rho.
  for (double& x : m.data()) x += scale * rng.normal();
}

/// d_hid x d matrix with orthonormal columns (modified Gram-Schmidt).
Mat64 orthonormal_columns(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Mat64 q(rows, cols);
  for (double& x : q.data()) x = rng.normal();
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double proj = 0.0;
      for (std::size_t r = 0; r < rows; ++r) proj += q(r, c) * q(r, p);
      for (std::size_t r = 0; r < rows; ++r) q(r, c) -= proj * q(r, p);
    }
    double n = 0.0;
    for (std::size_t r = 0; r < rows; ++r) n += q(r, c) * q(r, c);
    n = std::sqrt(n);
    for (std::size_t r = 0; r < rows; ++r) q(r, c) /= n;
  }
  return q;
}

/// Backward through v -> v / |v|.
void normalize_backward(std::span<const double> unit, double norm, std::span<const double> g_out,
                        std::span<double> g_in) {
  if (norm <= kDegenerateNorm) {
    for (double& x : g_in) x = 0.0;
    return;
  }
  const double proj = dot(unit, g_out);
  for (std::size_t i = 0; i < g_in.size(); ++i) g_in[i] = (g_out[i] - unit[i] * proj) / norm;
}

struct FrameForward {
  Vec64 activation;
  Vec64 pre_norm;
};

FrameForward frame_forward(const EncoderParams& params, std::span<const double> frame) {
  require(frame.size() == params.d_in(),
          "encode_frame: frame has " + std::to_string(frame.size()) + " values, model expects " +
              std::to_string(params.d_in()));
  Vec64 x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = params.input_scale * (frame[i] - 0.5);
  Vec64 h = matvec(params.w1, x);
  for (double& v : h) v = std::tanh(v);
  Vec64 u = matvec(params.w2, h);
  return {std::move(h), std::move(u)};
}

}  // namespace

void EncoderParams::validate() const {
  require(w1.rows() > 0 && w1.cols() > 0, "EncoderParams: empty w1");
  require(w2.cols() == w1.rows(), "EncoderParams: w2 cols != d_hid");
  require(w2.rows() > 0, "EncoderParams: empty w2");
  require(token_table.rows() > 0 && token_table.cols() == w2.rows(),
          "EncoderParams: token table width != d");
  require(interaction.rows() == dim() && interaction.cols() == dim(),
          "EncoderParams: interaction must be d x d");
  if (!all_finite(w1) || !all_finite(w2) || !all_finite(token_table) || !all_finite(interaction))
    throw std::invalid_argument("EncoderParams: non-finite weight");
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (interaction(i, j) != interaction(j, i))
        throw std::invalid_argument("EncoderParams: interaction not symmetric");
}

Normalized encode_frame(const EncoderParams& params, std::span<const double> frame) {
  return normalize(frame_forward(params, frame).pre_norm);
}

Normalized mean_pool(const Mat64& rows) {
  Vec64 mean(rows.cols(), 0.0);
  for (std::size_t t = 0; t < rows.rows(); ++t) {
    auto r = rows.row(t);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r[i];
  }
  const double inv = 1.0 / static_cast<double>(rows.rows());
  for (double& x : mean) x *= inv;
  return normalize(mean);
}

VideoTape encode_video_taped(const EncoderParams& params, const Video& video) {
  if (video.rows() == 0) throw DimensionError("encode_video: video has no frames");
  VideoTape tape;
  const std::size_t frames = video.rows();
  tape.embedding.per_frame = Mat64(frames, params.dim());
  tape.activations = Mat64(frames, params.d_hid());
  tape.pre_norms.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    FrameForward fwd = frame_forward(params, video.row(t));
    std::copy(fwd.activation.begin(), fwd.activation.end(), tape.activations.row(t).begin());
    tape.pre_norms[t] = norm2(fwd.pre_norm);
    Normalized f = normalize(fwd.pre_norm);
    std::copy(f.value.begin(), f.value.end(), tape.embedding.per_frame.row(t).begin());
  }
  Vec64 mean(params.dim(), 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    auto r = tape.embedding.per_frame.row(t);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r[i];
  }
  for (double& x : mean) x /= static_cast<double>(frames);
  tape.pool_norm = {norm2(mean)};
  Normalized pooled = normalize(mean);
  tape.embedding.pooled = std::move(pooled.value);
  tape.embedding.degenerate = pooled.degenerate;
  return tape;
}

VideoEmbedding encode_video(const EncoderParams& params, const Video& video) {
  return encode_video_taped(params, video).embedding;
}

QueryEmbedding encode_query(const EncoderParams& params, const QueryTokens& tokens) {
  if (tokens.empty()) throw DimensionError("encode_query: empty token sequence");
  QueryEmbedding q;
  q.per_token = Mat64(tokens.size(), params.dim());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (tokens[j] >= params.vocab_size()) {
      throw VocabularyError("encode_query: token id " + std::to_string(tokens[j]) +
                            " outside vocabulary of " + std::to_string(params.vocab_size()));
    }
    Normalized e = normalize(params.token_table.row(tokens[j]));
    std::copy(e.value.begin(), e.value.end(), q.per_token.row(j).begin());
  }
  Normalized pooled = mean_pool(q.per_token);
  q.pooled = std::move(pooled.value);
  q.degenerate = pooled.degenerate;
  return q;
}

double similarity(const EncoderParams& params, std::span<const double> query,
                  std::span<const double> video, SimMode mode) {
  if (mode == SimMode::grey) return cos_sim(query, video);
  return dot(query, matvec(params.interaction, video));
}

Vec64 similarity_grad(const EncoderParams& params, std::span<const double> query,
                      std::span<const double> video, SimMode mode) {
  if (query.size() != video.size()) throw DimensionError("similarity_grad: length mismatch");
  if (mode == SimMode::white) return matvec(params.interaction, query);  // M symmetric
  const double nq = norm2(query);
  const double nv = norm2(video);
  Vec64 g(video.size(), 0.0);
  if (nq <= kDegenerateNorm || nv <= kDegenerateNorm) return g;
  const double c = dot(query, video) / (nq * nv);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = query[i] / (nq * nv) - c * video[i] / (nv * nv);
  return g;
}

Mat64 backprop_pool(const VideoTape& tape, std::span<const double> upstream) {
  const Mat64& frames = tape.embedding.per_frame;
  Vec64 g_mean(frames.cols());
  normalize_backward(tape.embedding.pooled, tape.pool_norm.at(0), upstream, g_mean);
  const double inv = 1.0 / static_cast<double>(frames.rows());
  Mat64 out(frames.rows(), frames.cols());
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t i = 0; i < frames.cols(); ++i) out(t, i) = g_mean[i] * inv;
  return out;
}

Mat64 backprop_frames(const EncoderParams& params, const VideoTape& tape,
                      const Mat64& upstream) {
  const std::size_t frames = tape.embedding.per_frame.rows();
  require(upstream.rows() == frames && upstream.cols() == params.dim(),
          "grad_wrt_frames: upstream must be T x d");
  Mat64 out(frames, params.d_in());
  Vec64 g_u(params.dim());
  for (std::size_t t = 0; t < frames; ++t) {
    normalize_backward(tape.embedding.per_frame.row(t), tape.pre_norms[t], upstream.row(t), g_u);
    Vec64 g_a = matvec_transposed(params.w2, g_u);
    auto act = tape.activations.row(t);
    for (std::size_t k = 0; k < g_a.size(); ++k) g_a[k] *= 1.0 - act[k] * act[k];
    Vec64 g_x = matvec_transposed(params.w1, g_a);
    auto dst = out.row(t);
    for (std::size_t i = 0; i < g_x.size(); ++i) dst[i] = params.input_scale * g_x[i];
  }
  return out;
}

Mat64 grad_wrt_frames(const EncoderParams& params, const Video& video, const Mat64& upstream) {
  return backprop_frames(params, encode_video_taped(params, video), upstream);
}

EncoderParams plant_model(const GeneratorParams& generator, std::size_t d_hid,
                          std::uint64_t seed, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("plant_model: rho must be >= 0");
  const std::size_t d_in = generator.generator.rows();
  const std::size_t d = generator.generator.cols();
  if (d_hid < d) throw DimensionError("plant_model: d_hid must be >= d");
  if (generator.vocab.cols() != d) throw DimensionError("plant_model: vocab width != d");
  if (!(generator.amplitude > 0.0)) throw std::invalid_argument("plant_model: amplitude <= 0");

  SeededRng rng(seed);
  EncoderParams p;
  p.seed = seed;
  p.rho = rho;
  std::ostringstream id;
  id << "m" << seed << "-rho" << rho;
  p.model_id = id.str();

  // Hidden pre-activations of a clean frame get a per-unit rms near 0.5:
  // tanh stays smooth but not linear.
  const Mat64 lift = orthonormal_columns(d_hid, d, rng);  // d_hid x d
  const double gain = 0.5 * std::sqrt(static_cast<double>(d_hid)) /
                      (p.input_scale * generator.amplitude);
  p.w1 = Mat64(d_hid, d_in);
  for (std::size_t r = 0; r < d_hid; ++r)
    for (std::size_t c = 0; c < d_in; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += lift(r, k) * generator.generator(c, k);
      p.w1(r, c) = gain * s / static_cast<double>(d_in);
    }
  p.w2 = lift.transposed();
  p.token_table = generator.vocab;

  Mat64 a(d, d);
  for (double& x : a.data()) x = rng.normal();
  p.interaction = Mat64(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      p.interaction(i, j) = (i == j ? 1.0 : 0.0) + 0.1 * (a(i, j) + a(j, i)) / 2.0;

  // rho is the relative perturbation of each layer's output on typical inputs.
  // Planted rows are coherent with their d-dimensional input signal and random
  // rows are not, so matching output scale takes sqrt(fan_in / d) more per entry.
  const auto coherence = [d](std::size_t fan_in) {
    return std::sqrt(static_cast<double>(fan_in) / static_cast<double>(d));
  };
  add_noise(p.w1, rho * rms(p.w1) * coherence(d_in), rng);
  add_noise(p.w2, rho * rms(p.w2) * coherence(d_hid), rng);
  add_noise(p.token_table, rho * rms(p.token_table), rng);
  return p;
}

}  // namespace vipro
