#include "vipro/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vipro {

Mat64::Mat64(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Mat64: " + std::to_string(data_.size()) + " values for " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Mat64 Mat64::transposed() const {
  Mat64 out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Normalized normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (n <= kDegenerateNorm) return {Vec64(v.begin(), v.end()), true};
  Vec64 out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return {std::move(out), false};
}

double cos_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("cos_sim: length " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  }
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu <= kDegenerateNorm || nv <= kDegenerateNorm) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Mat64 cos_sim_matrix(const Mat64& a, const Mat64& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("cos_sim_matrix: inner dimension " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()));
  }
  Mat64 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = cos_sim(a.row(i), b.row(j));
  return out;
}

Vec64 matvec(const Mat64& m, std::span<const double> x) {
  if (m.cols() != x.size()) {
    throw DimensionError("matvec: " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " times " + std::to_string(x.size()));
  }
  Vec64 y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* w = m.data().data() + r * m.cols();
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += w[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vec64 matvec_transposed(const Mat64& m, std::span<const double> x) {
  if (m.rows() != x.size()) {
    throw DimensionError("matvec_transposed: " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " with " + std::to_string(x.size()));
  }
  Vec64 y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* w = m.data().data() + r * m.cols();
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += w[c] * xr;
  }
  return y;
}

Vec64 finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Vec64 probe(x.begin(), x.end());
  Vec64 grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw DimensionError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t state = seed ^ (tag * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  return splitmix64(state);
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

SeededRng::SeededRng(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("SeededRng::below: empty range");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double SeededRng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec64 SeededRng::normal_vec(std::size_t n, double scale) {
  Vec64 v(n);
  for (auto& x : v) x = scale * normal();
  return v;
}

}  // namespace vipro
