#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "starmine/graph.hpp"
#include "starmine/miner.hpp"

namespace starmine {

// Indexed by AttrId. kNoScore marks values no a-star supports.
using ScoreVector = std::vector<double>;
inline constexpr double kNoScore = -std::numeric_limits<double>::infinity();

// Weight of an a-star whose leafset is compared with the values found around
// the target node. Larger means less similar.
using SimilarityWeight = std::function<double(std::span<const AttrId> leafset,
                                              std::span<const AttrId> around)>;

// w = 2 - |leafset ∩ around| / |leafset|, in [1, 2]. Both inputs sorted.
double similarity_weight(std::span<const AttrId> leafset,
                         std::span<const AttrId> around);

// 1 + (1 - Jaccard), also in [1, 2].
double inverse_jaccard_weight(std::span<const AttrId> leafset,
                              std::span<const AttrId> around);

// Sorted union of the values of v's neighbours.
std::vector<AttrId> neighbor_attributes(const AttributedGraph &g, VertexId v);

struct NodeScores {
  ScoreVector scores;
  std::optional<std::string> warning;
};

// Every a-star scores its coreset values with -w * code_bits; each value
// keeps its best score. Values v already carries stay at kNoScore.
NodeScores score_node(std::span<const AStar> patterns, const AttributedGraph &g,
                      VertexId v,
                      const SimilarityWeight &weight = similarity_weight);

// Finite entries only, best first; ties by attribute id.
std::vector<AttrId> ranked_attributes(const ScoreVector &scores);

// Min-max normalisation with kNoScore entries mapped to the smallest finite
// value. A vector without spread normalises to all ones.
std::vector<double> min_max_normalize(const ScoreVector &v,
                                      bool *constant = nullptr);

struct FusionInput {
  ScoreVector model_scores;
  std::vector<double> external_scores;
};

std::vector<double> fuse_scores(const FusionInput &fi,
                                std::vector<std::string> *warnings = nullptr);

// Attribute ids ordered by their value strings; the layout of external score
// vectors.
std::vector<AttrId> lexicographic_order(const SymbolTable &attributes);

// Reorders an external vector given in lexicographic layout into AttrId
// layout.
std::vector<double> from_lexicographic(std::span<const double> external,
                                       std::span<const AttrId> order);

template <class T>
std::optional<double> recall_at_k(std::span<const T> ranking,
                                  const std::set<T> &truth, std::size_t k) {
  if (truth.empty())
    return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
    hits += truth.count(ranking[i]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

template <class T>
std::optional<double> ndcg_at_k(std::span<const T> ranking,
                                const std::set<T> &truth, std::size_t k) {
  if (truth.empty())
    return std::nullopt;
  double dcg = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
    if (truth.count(ranking[i]))
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  double ideal = 0;
  for (std::size_t i = 0; i < std::min(k, truth.size()); ++i)
    ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / ideal;
}

struct MetricRow {
  std::size_t k = 0;
  double recall = 0;
  double ndcg = 0;
  std::size_t nodes = 0;   // nodes with a non-empty truth set
  std::size_t skipped = 0; // nodes whose truth set is empty
};

struct RankedNode {
  std::string vertex;
  std::vector<std::string> ranking;
  std::set<std::string> truth;
};

// Mean Recall@k and NDCG@k over nodes, one row per k.
std::vector<MetricRow> evaluate_rankings(std::span<const RankedNode> nodes,
                                         std::span<const std::size_t> ks);

} // namespace starmine
