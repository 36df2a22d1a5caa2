#pragma once

#include <array>
#include <cstdint>

#include "vipro/model.hpp"

namespace vipro {

enum class DefenseKind { none, shuffle, compress };

struct DefenseConfig {
  DefenseKind kind = DefenseKind::none;
  std::size_t window = 4;     // shuffle window w
  std::uint64_t seed = 42;    // shuffle seed
  int quality = 75;           // compression quality q
  std::size_t channels = 3;   // frame layout for compression: channels x side x side
  std::size_t side = 16;

  /// Throws ConfigError; `frames` is the video length the defense will see.
  void validate(std::size_t frames) const;
};

/// Permutes frames uniformly within consecutive windows of length w (the last
/// window may be shorter).
Video temporal_shuffle(const Video& video, std::size_t window, std::uint64_t seed);

/// libjpeg-style luminance table for a quality in [1, 100], entries >= 1.
std::array<int, 64> quantization_table(int quality);

/// Block-DCT compression surrogate: per channel and 8x8 block, forward DCT on
/// the 0..255 level-shifted scale, quantize, dequantize, inverse DCT, clamp.
Video compress(const Video& video, int quality, std::size_t channels = 3, std::size_t side = 16);

/// Orthonormal 8x8 type-II DCT and its inverse, row-major blocks.
std::array<double, 64> dct8x8(const std::array<double, 64>& block);
std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs);

/// Apply the configured defense (identity for none).
Video apply_defense(const Video& video, const DefenseConfig& cfg);

}  // namespace vipro
