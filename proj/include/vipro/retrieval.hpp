#pragma once

#include <span>
#include <string>
#include <vector>

#include "vipro/model.hpp"

namespace vipro {

/// Pooled video embeddings of a corpus under one model and interaction mode.
struct RetrievalIndex {
  Mat64 embeddings;              // n x d, unit rows
  std::vector<std::size_t> ids;  // unique
  std::string model_id;
  SimMode mode = SimMode::white;

  std::size_t size() const { return ids.size(); }
  std::size_t position_of(std::size_t id) const;

  /// Ids default to 0..n-1.
  static RetrievalIndex build(const EncoderParams& model, const std::vector<Video>& videos,
                              SimMode mode);
  static RetrievalIndex from_embeddings(Mat64 embeddings, std::vector<std::size_t> ids,
                                        std::string model_id, SimMode mode);

  /// Copy with one video's embedding swapped (e.g. for an adversarial X').
  RetrievalIndex with_replaced(std::size_t id, std::span<const double> embedding) const;
};

/// Similarity of the query to every row, in row order.
Vec64 score_all(const RetrievalIndex& index, const EncoderParams& model,
                std::span<const double> query);

/// Top-L ids by descending similarity; ties go to the smaller id.
std::vector<std::size_t> rank(const RetrievalIndex& index, const EncoderParams& model,
                              std::span<const double> query, std::size_t top_l);

/// 1-based rank of `id` under the same ordering as rank().
std::size_t rank_of(const RetrievalIndex& index, const EncoderParams& model,
                    std::span<const double> query, std::size_t id);

struct LabeledQuery {
  Vec64 query;  // pooled query embedding
  std::size_t gold = 0;
};

/// Fraction of queries whose gold id is within the top K. An empty set gives 0
/// and a warning on std::clog.
double recall_at_k(const RetrievalIndex& index, const EncoderParams& model,
                   std::span<const LabeledQuery> queries, std::size_t k);

inline double delta_recall(double pre, double post) { return post - pre; }

/// Per category c with m members: share of the top-m results that belong to c.
/// `membership[i]` is the category of index row i.
std::vector<double> r_precision(const RetrievalIndex& index, const EncoderParams& model,
                                std::span<const Vec64> category_queries,
                                std::span<const std::size_t> membership);

struct BoundaryReport {
  double top1_similarity = 0.0;  // inverse-radius proxy of the retrieval boundary
  std::size_t top1_id = 0;
  double margin = 0.0;           // top-1 minus top-2 similarity
};

BoundaryReport boundary_report(const RetrievalIndex& index, const EncoderParams& model,
                               std::span<const double> query);

struct Histogram {
  std::vector<double> mass;  // sums to 1
  double min_value = 0.0;    // raw top-1 similarity mapped to 0
  double max_value = 0.0;    // raw top-1 similarity mapped to 1
  double mean_raw = 0.0;
};

/// Min-max normalized histogram of each query's top-1 similarity.
Histogram top1_histogram(const RetrievalIndex& index, const EncoderParams& model,
                         std::span<const Vec64> queries, std::size_t bins);

/// Histogram of values already in hand (same normalization as above).
Histogram normalized_histogram(std::span<const double> values, std::size_t bins);

}  // namespace vipro
