#include "vipro/defenses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vipro {

namespace {

// Standard JPEG luminance quantization table (ITU-T T.81, Annex K), row-major.
constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const std::array<double, 64>& dct_basis() {
  // basis[u * 8 + x] = c(u) cos((2x + 1) u pi / 16)
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> b{};
    for (int u = 0; u < 8; ++u) {
      const double c = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x)
        b[u * 8 + x] = c * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return basis;
}

}  // namespace

void DefenseConfig::validate(std::size_t frames) const {
  if (kind == DefenseKind::shuffle && (window < 1 || window > frames))
    throw ConfigError("defense: shuffle window must be in [1, T]");
  if (kind == DefenseKind::compress && (quality < 1 || quality > 100))
    throw ConfigError("defense: quality must be in [1, 100]");
}

Video temporal_shuffle(const Video& video, std::size_t window, std::uint64_t seed) {
  if (window == 0 || window > video.rows())
    throw std::invalid_argument("temporal_shuffle: window must be in [1, T]");
  std::vector<std::size_t> order(video.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  for (std::size_t start = 0; start < order.size(); start += window) {
    const std::size_t end = std::min(order.size(), start + window);
    std::vector<std::size_t> block(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    rng.shuffle(block);
    std::copy(block.begin(), block.end(), order.begin() + static_cast<std::ptrdiff_t>(start));
  }
  Video out(video.rows(), video.cols());
  for (std::size_t t = 0; t < order.size(); ++t) {
    auto src = video.row(order[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

std::array<int, 64> quantization_table(int quality) {
  if (quality < 1 || quality > 100) throw std::invalid_argument("quantization_table: q not in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;  // percent
  std::array<int, 64> q{};
  for (std::size_t i = 0; i < 64; ++i) q[i] = std::max(1, (kLuminance[i] * scale + 50) / 100);
  return q;
}

std::array<double, 64> dct8x8(const std::array<double, 64>& block) {
  const auto& b = dct_basis();
  std::array<double, 64> rows{};  // transform along x
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u * 8 + x] * block[y * 8 + x];
      rows[y * 8 + u] = s;
    }
  std::array<double, 64> out{};
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[v * 8 + y] * rows[y * 8 + u];
      out[v * 8 + u] = s;
    }
  return out;
}

std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs) {
  const auto& b = dct_basis();
  std::array<double, 64> cols{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v * 8 + y] * coeffs[v * 8 + u];
      cols[y * 8 + u] = s;
    }
  std::array<double, 64> out{};
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u * 8 + x] * cols[y * 8 + u];
      out[y * 8 + x] = s;
    }
  return out;
}

Video compress(const Video& video, int quality, std::size_t channels, std::size_t side) {
  if (channels * side * side != video.cols() || side % 8 != 0)
    throw DimensionError("compress: frame of " + std::to_string(video.cols()) +
                         " values is not " + std::to_string(channels) + " x " +
                         std::to_string(side) + " x " + std::to_string(side) +
                         " with side a multiple of 8");
  const auto table = quantization_table(quality);
  Video out(video.rows(), video.cols());
  std::array<double, 64> block{};
  for (std::size_t t = 0; t < video.rows(); ++t) {
    auto src = video.row(t);
    auto dst = out.row(t);
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t plane = c * side * side;
      for (std::size_t by = 0; by < side; by += 8)
        for (std::size_t bx = 0; bx < side; bx += 8) {
          for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
              block[y * 8 + x] = 255.0 * src[plane + (by + y) * side + bx + x] - 128.0;
          auto coeffs = dct8x8(block);
          for (std::size_t i = 0; i < 64; ++i)
            coeffs[i] = std::round(coeffs[i] / table[i]) * table[i];
          const auto rec = idct8x8(coeffs);
          for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
              dst[plane + (by + y) * side + bx + x] =
                  std::clamp((rec[y * 8 + x] + 128.0) / 255.0, 0.0, 1.0);
        }
    }
  }
  return out;
}

Video apply_defense(const Video& video, const DefenseConfig& cfg) {
  switch (cfg.kind) {
    case DefenseKind::shuffle:
      return temporal_shuffle(video, cfg.window, cfg.seed);
    case DefenseKind::compress:
      return compress(video, cfg.quality, cfg.channels, cfg.side);
    case DefenseKind::none:
      break;
  }
  return video;
}

}  // namespace vipro
