#include "vipro/retrieval.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <unordered_set>

namespace vipro {

std::size_t RetrievalIndex::position_of(std::size_t id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw std::out_of_range("RetrievalIndex: unknown id " + std::to_string(id));
  return static_cast<std::size_t>(it - ids.begin());
}

RetrievalIndex RetrievalIndex::build(const EncoderParams& model, const std::vector<Video>& videos,
                                     SimMode mode) {
  Mat64 emb(videos.size(), model.dim());
  for (std::size_t i = 0; i < videos.size(); ++i) {
    VideoEmbedding e = encode_video(model, videos[i]);
    std::copy(e.pooled.begin(), e.pooled.end(), emb.row(i).begin());
  }
  std::vector<std::size_t> ids(videos.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return from_embeddings(std::move(emb), std::move(ids), model.model_id, mode);
}

RetrievalIndex RetrievalIndex::from_embeddings(Mat64 embeddings, std::vector<std::size_t> ids,
                                               std::string model_id, SimMode mode) {
  if (embeddings.rows() != ids.size())
    throw DimensionError("RetrievalIndex: row count differs from id count");
  std::unordered_set<std::size_t> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw std::invalid_argument("RetrievalIndex: duplicate ids");
  RetrievalIndex idx;
  idx.embeddings = std::move(embeddings);
  idx.ids = std::move(ids);
  idx.model_id = std::move(model_id);
  idx.mode = mode;
  return idx;
}

RetrievalIndex RetrievalIndex::with_replaced(std::size_t id,
                                             std::span<const double> embedding) const {
  if (embedding.size() != embeddings.cols())
    throw DimensionError("with_replaced: embedding width mismatch");
  RetrievalIndex out = *this;
  auto row = out.embeddings.row(position_of(id));
  std::copy(embedding.begin(), embedding.end(), row.begin());
  return out;
}

Vec64 score_all(const RetrievalIndex& index, const EncoderParams& model,
                std::span<const double> query) {
  Vec64 s(index.size());
  if (index.mode == SimMode::white) {
    // q^T M v for every row: fold M into the query once.
    const Vec64 mq = matvec(model.interaction, query);
    for (std::size_t i = 0; i < index.size(); ++i) s[i] = dot(mq, index.embeddings.row(i));
  } else {
    for (std::size_t i = 0; i < index.size(); ++i) s[i] = cos_sim(query, index.embeddings.row(i));
  }
  return s;
}

namespace {

std::vector<std::size_t> sorted_positions(const RetrievalIndex& index, const Vec64& scores) {
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.ids[a] < index.ids[b];
  });
  return order;
}

}  // namespace

std::vector<std::size_t> rank(const RetrievalIndex& index, const EncoderParams& model,
                              std::span<const double> query, std::size_t top_l) {
  if (top_l > index.size())
    throw std::invalid_argument("rank: L=" + std::to_string(top_l) + " exceeds corpus size " +
                                std::to_string(index.size()));
  const Vec64 scores = score_all(index, model, query);
  const auto order = sorted_positions(index, scores);
  std::vector<std::size_t> out(top_l);
  for (std::size_t i = 0; i < top_l; ++i) out[i] = index.ids[order[i]];
  return out;
}

std::size_t rank_of(const RetrievalIndex& index, const EncoderParams& model,
                    std::span<const double> query, std::size_t id) {
  const Vec64 scores = score_all(index, model, query);
  const std::size_t pos = index.position_of(id);
  std::size_t better = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (scores[i] > scores[pos] || (scores[i] == scores[pos] && index.ids[i] < id)) ++better;
  }
  return better + 1;
}

double recall_at_k(const RetrievalIndex& index, const EncoderParams& model,
                   std::span<const LabeledQuery> queries, std::size_t k) {
  if (k == 0) throw std::invalid_argument("recall_at_k: K must be >= 1");
  if (queries.empty()) {
    std::clog << "warning: recall_at_k on an empty query set, reporting 0\n";
    return 0.0;
  }
  std::size_t hits = 0;
  for (const auto& q : queries)
    if (rank_of(index, model, q.query, q.gold) <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::vector<double> r_precision(const RetrievalIndex& index, const EncoderParams& model,
                                std::span<const Vec64> category_queries,
                                std::span<const std::size_t> membership) {
  if (membership.size() != index.size())
    throw DimensionError("r_precision: membership must cover every index row");
  std::vector<double> out(category_queries.size());
  for (std::size_t c = 0; c < category_queries.size(); ++c) {
    const auto members = static_cast<std::size_t>(
        std::count(membership.begin(), membership.end(), c));
    if (members == 0)
      throw std::invalid_argument("r_precision: category " + std::to_string(c) + " is empty");
    const Vec64 scores = score_all(index, model, category_queries[c]);
    const auto order = sorted_positions(index, scores);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < members; ++i)
      if (membership[order[i]] == c) ++hits;
    out[c] = static_cast<double>(hits) / static_cast<double>(members);
  }
  return out;
}

BoundaryReport boundary_report(const RetrievalIndex& index, const EncoderParams& model,
                               std::span<const double> query) {
  if (index.size() < 2) throw std::invalid_argument("boundary_report: needs at least 2 videos");
  const Vec64 scores = score_all(index, model, query);
  const auto order = sorted_positions(index, scores);
  BoundaryReport r;
  r.top1_similarity = scores[order[0]];
  r.top1_id = index.ids[order[0]];
  r.margin = scores[order[0]] - scores[order[1]];
  return r;
}

Histogram normalized_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  Histogram h;
  h.mass.assign(bins, 0.0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.min_value = *lo;
  h.max_value = *hi;
  h.mean_raw = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
  const double span = h.max_value - h.min_value;
  for (double v : values) {
    const double unit = span > 0.0 ? (v - h.min_value) / span : 0.0;
    auto b = static_cast<std::size_t>(unit * static_cast<double>(bins));
    h.mass[std::min(b, bins - 1)] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(values.size());
  return h;
}

Histogram top1_histogram(const RetrievalIndex& index, const EncoderParams& model,
                         std::span<const Vec64> queries, std::size_t bins) {
  std::vector<double> top1;
  top1.reserve(queries.size());
  for (const auto& q : queries) {
    const Vec64 s = score_all(index, model, q);
    top1.push_back(*std::max_element(s.begin(), s.end()));
  }
  return normalized_histogram(top1, bins);
}

}  // namespace vipro
