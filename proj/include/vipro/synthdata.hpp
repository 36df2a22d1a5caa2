#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vipro/model.hpp"
#include "vipro/retrieval.hpp"

namespace vipro {

struct DatasetSpec {
  std::size_t n_pairs = 256;
  std::size_t frames = 12;
  std::size_t n_scenes = 3;
  std::size_t dim = 16;
  std::size_t d_in = 768;
  std::size_t vocab = 512;
  std::size_t n_categories = 8;
  std::size_t tokens_per_caption = 8;
  double sigma_scene = 0.6;
  double sigma_token = 0.5;
  double sigma_pixel = 0.05;
  std::uint64_t seed = 42;

  /// Throws ConfigError.
  void validate() const;

  /// Named presets "A", "B", "C"; throws ConfigError for anything else.
  static DatasetSpec preset(const std::string& name);
};

struct Corpus {
  DatasetSpec spec;
  std::vector<Video> videos;
  std::vector<QueryTokens> captions;
  std::vector<std::size_t> categories;
  Mat64 latents;     // n x d
  Mat64 generator;   // D_in x d
  Mat64 vocab;       // V x d
  Mat64 centroids;   // n_categories x d
  double amplitude = 0.0;
  double clamp_fraction = 0.0;  // share of pixels the [0,1] clamp touched

  std::size_t size() const { return videos.size(); }
  GeneratorParams generator_params() const { return {generator, vocab, amplitude}; }
  /// [start, end) frame range of each planted scene.
  std::vector<std::pair<std::size_t, std::size_t>> scene_ranges() const;
};

Corpus generate_corpus(const DatasetSpec& spec);

/// The N_tok vocabulary rows nearest (cosine) to a category centroid.
QueryTokens category_query(const Corpus& corpus, std::size_t category);

/// Ids of the `count` vocab rows nearest to `direction`, best first.
QueryTokens nearest_tokens(const Mat64& vocab, std::span<const double> direction,
                           std::size_t count);

struct HarvestedQueries {
  std::vector<std::size_t> train;  // caption owners (video ids)
  std::vector<std::size_t> test;
  std::size_t requested = 0;
  std::size_t kept = 0;
  bool complete() const { return kept == requested; }
};

/// Candidate-wise query harvesting against `model` (scored in `mode`).
/// Harvests n_train + n_test captions whose re-query ranks the candidate
/// within `rank_limit`; a shortfall is reported through `kept`.
HarvestedQueries harvest_queries(const EncoderParams& model, SimMode mode, const Corpus& corpus,
                                 std::size_t candidate, std::size_t n_train, std::size_t n_test,
                                 std::size_t rank_limit = 20);

/// Same, against a prebuilt index and pooled caption embeddings (row i is the
/// caption of index row i). The split shuffle uses derive_seed(shuffle_seed, candidate).
HarvestedQueries harvest_queries(const EncoderParams& model, const RetrievalIndex& index,
                                 std::span<const Vec64> captions, std::uint64_t shuffle_seed,
                                 std::size_t candidate, std::size_t n_train, std::size_t n_test,
                                 std::size_t rank_limit = 20);

/// Even split of K; K must be even.
HarvestedQueries harvest_queries(const EncoderParams& model, SimMode mode, const Corpus& corpus,
                                 std::size_t candidate, std::size_t k);

}  // namespace vipro
