#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vipro/errors.hpp"

namespace vipro {

using Vec64 = std::vector<double>;

/// Row-major dense matrix of doubles.
class Mat64 {
 public:
  Mat64() = default;
  Mat64(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat64(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Mat64 transposed() const;

  friend bool operator==(const Mat64&, const Mat64&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Norms at or below this are treated as zero by normalize and cos_sim.
inline constexpr double kDegenerateNorm = 1e-12;

struct Normalized {
  Vec64 value;
  bool degenerate = false;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

Normalized normalize(std::span<const double> v);

/// Cosine similarity; 0 when either side is degenerate.
double cos_sim(std::span<const double> u, std::span<const double> v);

/// out(i, j) = cos_sim(a.row(i), b.row(j)).
Mat64 cos_sim_matrix(const Mat64& a, const Mat64& b);

/// y = m * x
Vec64 matvec(const Mat64& m, std::span<const double> x);
/// y = m^T * x
Vec64 matvec_transposed(const Mat64& m, std::span<const double> x);

/// Central-difference gradient of a scalar function.
Vec64 finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double h);

/// Largest |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

/// splitmix64 step; also used to derive independent seeds from (seed, tag).
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// xoshiro256** seeded through splitmix64. Bit-identical on every platform for
/// the raw 64-bit stream; floating draws are built from it with fixed recipes.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, no cached spare).
  double normal();
  Vec64 normal_vec(std::size_t n, double scale = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace vipro
