#include "vipro/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vipro/retrieval.hpp"

namespace vipro {

namespace {

constexpr double kPixelHalfRange = 0.45;    // pre-clamp target band [0.05, 0.95]
constexpr double kInBandFraction = 0.995;   // share of pixels the amplitude keeps in band
constexpr std::size_t kCentroidRetries = 64;

/// Isotropic Gaussian direction with unit expected norm.
Vec64 gaussian_direction(SeededRng& rng, std::size_t d) {
  return rng.normal_vec(d, 1.0 / std::sqrt(static_cast<double>(d)));
}

Vec64 perturbed_unit(std::span<const double> base, double sigma, SeededRng& rng) {
  Vec64 g = gaussian_direction(rng, base.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = base[i] + sigma * g[i];
  return normalize(g).value;
}

Mat64 unit_rows(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Mat64 m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    Vec64 v = normalize(rng.normal_vec(cols)).value;
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

double in_band_fraction(const std::vector<double>& signal, const std::vector<double>& noise,
                        std::size_t per_scene, const std::vector<std::size_t>& scene_of_frame,
                        std::size_t d_in, double a) {
  std::size_t inside = 0;
  for (std::size_t f = 0; f < scene_of_frame.size(); ++f) {
    const double* s = signal.data() + scene_of_frame[f] * per_scene;
    const double* n = noise.data() + f * d_in;
    for (std::size_t p = 0; p < d_in; ++p)
      if (std::abs(a * s[p] + n[p]) <= kPixelHalfRange) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(noise.size());
}

}  // namespace

void DatasetSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("DatasetSpec: " + m); };
  if (n_pairs == 0) fail("n_pairs must be positive");
  if (frames == 0) fail("frames must be positive");
  if (n_scenes == 0 || n_scenes > frames) fail("n_scenes must be in [1, frames]");
  if (dim == 0 || d_in == 0 || vocab == 0) fail("dimensions must be positive");
  if (n_categories == 0 || n_categories > n_pairs) fail("n_categories must be in [1, n_pairs]");
  if (tokens_per_caption == 0 || tokens_per_caption > vocab)
    fail("tokens_per_caption must be in [1, vocab]");
  if (sigma_scene < 0 || sigma_token < 0 || sigma_pixel < 0) fail("noise scales must be >= 0");
}

DatasetSpec DatasetSpec::preset(const std::string& name) {
  DatasetSpec s;
  if (name == "A") return s;
  if (name == "B") {
    s.sigma_scene = 0.3;
    s.n_scenes = 2;
    s.n_categories = 6;
    return s;
  }
  if (name == "C") {
    s.sigma_scene = 0.9;
    s.n_scenes = 4;
    s.n_categories = 10;
    return s;
  }
  throw ConfigError("unknown dataset preset '" + name + "' (expected A, B or C)");
}

std::vector<std::pair<std::size_t, std::size_t>> Corpus::scene_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t base = spec.frames / spec.n_scenes;
  for (std::size_t s = 0; s < spec.n_scenes; ++s) {
    const std::size_t start = s * base;
    const std::size_t end = (s + 1 == spec.n_scenes) ? spec.frames : start + base;
    out.emplace_back(start, end);
  }
  return out;
}

QueryTokens nearest_tokens(const Mat64& vocab, std::span<const double> direction,
                           std::size_t count) {
  std::vector<std::pair<double, std::size_t>> scored(vocab.rows());
  for (std::size_t v = 0; v < vocab.rows(); ++v) scored[v] = {cos_sim(vocab.row(v), direction), v};
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(count),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  QueryTokens out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = scored[i].second;
  return out;
}

Corpus generate_corpus(const DatasetSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  Corpus c;
  c.spec = spec;
  const std::size_t d = spec.dim;

  c.vocab = unit_rows(spec.vocab, d, rng);
  c.generator = Mat64(spec.d_in, d);
  for (double& x : c.generator.data()) x = rng.normal();

  // Categories must own distinct token sets, otherwise category queries collide.
  for (std::size_t attempt = 0;; ++attempt) {
    c.centroids = unit_rows(spec.n_categories, d, rng);
    std::set<std::vector<std::size_t>> sets;
    for (std::size_t k = 0; k < spec.n_categories; ++k) {
      QueryTokens t = nearest_tokens(c.vocab, c.centroids.row(k), spec.tokens_per_caption);
      std::sort(t.begin(), t.end());
      sets.insert(t);
    }
    if (sets.size() == spec.n_categories) break;
    if (attempt + 1 == kCentroidRetries)
      throw ConfigError("generate_corpus: categories keep sharing token sets; lower n_categories");
  }

  c.categories.resize(spec.n_pairs);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) c.categories[i] = i % spec.n_categories;
  rng.shuffle(c.categories);

  c.latents = Mat64(spec.n_pairs, d);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    Vec64 z = perturbed_unit(c.centroids.row(c.categories[i]), 0.5, rng);
    std::copy(z.begin(), z.end(), c.latents.row(i).begin());
  }

  // Pixel signal per scene and pixel noise per frame, before the amplitude is known.
  const auto ranges = [&] {
    Corpus probe;
    probe.spec = spec;
    return probe.scene_ranges();
  }();
  std::vector<std::size_t> scene_of_frame;  // global frame -> global scene
  std::vector<double> signal;                // (n * n_scenes) x d_in
  signal.reserve(spec.n_pairs * spec.n_scenes * spec.d_in);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    for (std::size_t s = 0; s < spec.n_scenes; ++s) {
      Vec64 scene = perturbed_unit(c.latents.row(i), spec.sigma_scene, rng);
      Vec64 pix = matvec(c.generator, scene);
      signal.insert(signal.end(), pix.begin(), pix.end());
      for (std::size_t t = ranges[s].first; t < ranges[s].second; ++t)
        scene_of_frame.push_back(i * spec.n_scenes + s);
    }
  }
  std::vector<double> noise = rng.normal_vec(spec.n_pairs * spec.frames * spec.d_in,
                                             spec.sigma_pixel);

  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (in_band_fraction(signal, noise, spec.d_in, scene_of_frame, spec.d_in, mid) >=
        kInBandFraction)
      lo = mid;
    else
      hi = mid;
  }
  c.amplitude = lo;
  if (!(c.amplitude > 0.0))
    throw ConfigError("generate_corpus: sigma_pixel too large to keep pixels in band");

  std::size_t clamped = 0;
  c.videos.reserve(spec.n_pairs);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    Video v(spec.frames, spec.d_in);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const std::size_t f = i * spec.frames + t;
      const double* s = signal.data() + scene_of_frame[f] * spec.d_in;
      const double* n = noise.data() + f * spec.d_in;
      auto row = v.row(t);
      for (std::size_t p = 0; p < spec.d_in; ++p) {
        const double raw = 0.5 + c.amplitude * s[p] + n[p];
        const double px = std::clamp(raw, 0.0, 1.0);
        if (px != raw) ++clamped;
        row[p] = px;
      }
    }
    c.videos.push_back(std::move(v));
  }
  c.clamp_fraction = static_cast<double>(clamped) / static_cast<double>(noise.size());

  c.captions.resize(spec.n_pairs);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    for (std::size_t j = 0; j < spec.tokens_per_caption; ++j) {
      Vec64 draw = perturbed_unit(c.latents.row(i), spec.sigma_token, rng);
      c.captions[i].push_back(nearest_tokens(c.vocab, draw, 1).front());
    }
  }
  return c;
}

QueryTokens category_query(const Corpus& corpus, std::size_t category) {
  if (category >= corpus.centroids.rows())
    throw std::out_of_range("category_query: no category " + std::to_string(category));
  return nearest_tokens(corpus.vocab, corpus.centroids.row(category),
                        corpus.spec.tokens_per_caption);
}

HarvestedQueries harvest_queries(const EncoderParams& model, const RetrievalIndex& index,
                                 std::span<const Vec64> captions, std::uint64_t shuffle_seed,
                                 std::size_t candidate, std::size_t n_train, std::size_t n_test,
                                 std::size_t rank_limit) {
  if (candidate >= index.size() || captions.size() != index.size())
    throw std::out_of_range("harvest_queries: no video " + std::to_string(candidate));
  HarvestedQueries out;
  out.requested = n_train + n_test;
  std::vector<std::size_t> kept;
  for (std::size_t owner : rank(index, model, captions[candidate], index.size())) {
    if (kept.size() == out.requested) break;
    if (rank_of(index, model, captions[owner], candidate) <= rank_limit) kept.push_back(owner);
  }
  out.kept = kept.size();

  SeededRng rng(derive_seed(shuffle_seed, candidate));
  rng.shuffle(kept);
  // A shortfall shrinks both halves in proportion, keeping one of each when possible.
  std::size_t n_tr = n_train;
  if (kept.size() < out.requested && out.requested > 0) {
    n_tr = (kept.size() * n_train + out.requested / 2) / out.requested;
    if (kept.size() >= 2) n_tr = std::clamp<std::size_t>(n_tr, 1, kept.size() - 1);
    n_tr = std::min(n_tr, kept.size());
  }
  out.train.assign(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n_tr));
  out.test.assign(kept.begin() + static_cast<std::ptrdiff_t>(n_tr), kept.end());
  return out;
}

HarvestedQueries harvest_queries(const EncoderParams& model, SimMode mode, const Corpus& corpus,
                                 std::size_t candidate, std::size_t n_train, std::size_t n_test,
                                 std::size_t rank_limit) {
  if (candidate >= corpus.size())
    throw std::out_of_range("harvest_queries: no video " + std::to_string(candidate));
  const RetrievalIndex index = RetrievalIndex::build(model, corpus.videos, mode);
  std::vector<Vec64> captions;
  captions.reserve(corpus.size());
  for (const auto& cap : corpus.captions) captions.push_back(encode_query(model, cap).pooled);
  return harvest_queries(model, index, captions, corpus.spec.seed, candidate, n_train, n_test,
                         rank_limit);
}

HarvestedQueries harvest_queries(const EncoderParams& model, SimMode mode, const Corpus& corpus,
                                 std::size_t candidate, std::size_t k) {
  if (k % 2 != 0) throw std::invalid_argument("harvest_queries: K must be even");
  return harvest_queries(model, mode, corpus, candidate, k / 2, k / 2);
}

}  // namespace vipro
