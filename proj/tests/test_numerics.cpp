#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "test_util.hpp"
#include "vipro/numerics.hpp"

using namespace vipro;

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Straight transcription of the public-domain reference generators.
struct RefXoshiro {
  std::uint64_t s[4];
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s) {
      std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

}  // namespace

TEST_CASE("normalize") {
  auto r = normalize(Vec64{3.0, 4.0});
  CHECK_FALSE(r.degenerate);
  CHECK(r.value[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r.value[1] == doctest::Approx(0.8).epsilon(1e-15));

  auto z = normalize(Vec64{0.0, 0.0});
  CHECK(z.degenerate);
  CHECK(z.value == Vec64{0.0, 0.0});

  SeededRng rng(1);
  Vec64 u = rng.normal_vec(7);
  u = normalize(u).value;
  auto again = normalize(u);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(again.value[i] == doctest::Approx(u[i]).epsilon(1e-15));
}

TEST_CASE("cos_sim") {
  CHECK(cos_sim(Vec64{2.0, 5.0}, Vec64{2.0, 5.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cos_sim(Vec64{1.0, 0.0}, Vec64{0.0, 1.0}) == 0.0);
  CHECK(cos_sim(Vec64{1.0, 0.0}, Vec64{1.0, 1.0}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(cos_sim(Vec64{0.0, 0.0}, Vec64{1.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(cos_sim(Vec64{1.0}, Vec64{1.0, 2.0}), DimensionError);
  // Never outside [-1, 1] even with rounding.
  SeededRng rng(3);
  for (int i = 0; i < 200; ++i) {
    Vec64 a = rng.normal_vec(5);
    Vec64 b = a;
    for (double& x : b) x *= 1.0 + 1e-16 * i;
    const double c = cos_sim(a, b);
    CHECK(c <= 1.0);
    CHECK(c >= -1.0);
  }
}

TEST_CASE("cos_sim_matrix") {
  Mat64 eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  const Mat64 out = cos_sim_matrix(eye, eye);
  CHECK(out == eye);

  Mat64 one(1, 3, {1.0, 2.0, 2.0});
  CHECK(cos_sim_matrix(one, one)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  SeededRng rng(5);
  Mat64 a(3, 5), b(4, 5);
  for (double& x : a.data()) x = rng.normal();
  for (double& x : b.data()) x = rng.normal();
  const Mat64 m = cos_sim_matrix(a, b);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(m(i, j) == cos_sim(a.row(i), b.row(j)));

  CHECK_THROWS_AS(cos_sim_matrix(a, Mat64(2, 4)), DimensionError);
}

TEST_CASE("finite_diff_grad") {
  auto sq = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  Vec64 g = finite_diff_grad(sq, Vec64{1.0, 2.0}, 1e-5);
  CHECK(std::abs(g[0] - 2.0) < 1e-6);
  CHECK(std::abs(g[1] - 4.0) < 1e-6);

  auto constant = [](std::span<const double>) { return 7.0; };
  for (double v : finite_diff_grad(constant, Vec64{0.3, -1.0, 2.0}, 1e-5)) CHECK(v == 0.0);

  auto e = [](std::span<const double> x) { return std::exp(-std::accumulate(x.begin(), x.end(), 0.0)); };
  for (double v : finite_diff_grad(e, Vec64(4, 0.0), 1e-5)) CHECK(v == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("matvec and transpose") {
  Mat64 m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(matvec(m, Vec64{1, 0, -1}) == Vec64{-2, -2});
  CHECK(matvec_transposed(m, Vec64{1, 1}) == Vec64{5, 7, 9});
  CHECK(m.transposed() == Mat64(3, 2, {1, 4, 2, 5, 3, 6}));
  CHECK_THROWS_AS(matvec(m, Vec64{1, 2}), DimensionError);
  CHECK_THROWS_AS(Mat64(2, 2, Vec64{1.0}), DimensionError);
}

TEST_CASE("max_relative_error") {
  CHECK(max_relative_error(Vec64{1.0, 2.0}, Vec64{1.0, 2.0}) == 0.0);
  CHECK(max_relative_error(Vec64{1.0}, Vec64{1.1}) == doctest::Approx(0.1 / 1.1));
  CHECK(max_relative_error(Vec64{0.0}, Vec64{1e-10}) == doctest::Approx(1e-2));
}

TEST_CASE("splitmix64 and xoshiro256** match reference") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);

  for (std::uint64_t seed : {0ULL, 42ULL, 0xdeadbeefULL}) {
    SeededRng ours(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 1000; ++i) REQUIRE(ours.next_u64() == ref.next());
  }
}

TEST_CASE("SeededRng draws") {
  SeededRng rng(42);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.04);

  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);

  SeededRng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("derive_seed separates tags") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 20; ++s)
    for (std::uint64_t t = 0; t < 20; ++t) seen.insert(derive_seed(s, t));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(42, 1) == derive_seed(42, 1));
}
