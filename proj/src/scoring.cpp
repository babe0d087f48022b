#include "starmine/scoring.hpp"

#include <numeric>

namespace starmine {

double similarity_weight(std::span<const AttrId> leafset,
                         std::span<const AttrId> around) {
  if (leafset.empty())
    throw InvariantViolation("similarity of an empty leafset");
  const auto overlap = intersection_size(leafset, around);
  return 2.0 - static_cast<double>(overlap) / static_cast<double>(leafset.size());
}

double inverse_jaccard_weight(std::span<const AttrId> leafset,
                              std::span<const AttrId> around) {
  if (leafset.empty())
    throw InvariantViolation("similarity of an empty leafset");
  const auto overlap = intersection_size(leafset, around);
  const auto uni = leafset.size() + around.size() - overlap;
  return 2.0 - static_cast<double>(overlap) / static_cast<double>(uni);
}

std::vector<AttrId> neighbor_attributes(const AttributedGraph &g, VertexId v) {
  std::set<AttrId> vals;
  for (auto u : g.neighbors(v))
    for (auto a : g.attrs(u))
      vals.insert(a);
  return {vals.begin(), vals.end()};
}

NodeScores score_node(std::span<const AStar> patterns, const AttributedGraph &g,
                      VertexId v, const SimilarityWeight &weight) {
  NodeScores out;
  out.scores.assign(g.attribute_count(), kNoScore);
  const auto around = neighbor_attributes(g, v);
  if (around.empty()) {
    out.warning = "vertex " + g.vertices().name(v) +
                  " has no attributed neighbour";
    return out;
  }
  for (const auto &s : patterns) {
    const double cl = -weight(s.leafset.values(), around) * s.code_bits;
    for (auto a : s.coreset.values())
      if (a < out.scores.size() && cl > out.scores[a])
        out.scores[a] = cl;
  }
  for (auto a : g.attrs(v))
    out.scores[a] = kNoScore;
  return out;
}

std::vector<AttrId> ranked_attributes(const ScoreVector &scores) {
  std::vector<AttrId> out;
  for (AttrId a = 0; a < scores.size(); ++a)
    if (std::isfinite(scores[a]))
      out.push_back(a);
  std::stable_sort(out.begin(), out.end(), [&](AttrId x, AttrId y) {
    return scores[x] > scores[y];
  });
  return out;
}

std::vector<double> min_max_normalize(const ScoreVector &v, bool *constant) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v)
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  const bool flat = !(hi > lo);
  if (constant)
    *constant = flat;
  if (flat)
    return std::vector<double>(v.size(), 1.0);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = std::isfinite(v[i]) ? v[i] : lo;
    out[i] = (x - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> fuse_scores(const FusionInput &fi,
                                std::vector<std::string> *warnings) {
  if (fi.model_scores.size() != fi.external_scores.size())
    throw InputError("fusion: model and external vectors differ in length (" +
                     std::to_string(fi.model_scores.size()) + " vs " +
                     std::to_string(fi.external_scores.size()) + ")");
  bool flat_model = false, flat_external = false;
  const auto m = min_max_normalize(fi.model_scores, &flat_model);
  const auto e = min_max_normalize(fi.external_scores, &flat_external);
  if (warnings) {
    if (flat_model)
      warnings->push_back("fusion: model scores are constant");
    if (flat_external)
      warnings->push_back("fusion: external scores are constant");
  }
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    out[i] = m[i] * e[i];
  return out;
}

std::vector<AttrId> lexicographic_order(const SymbolTable &attributes) {
  std::vector<AttrId> order(attributes.size());
  std::iota(order.begin(), order.end(), AttrId{0});
  std::sort(order.begin(), order.end(), [&](AttrId a, AttrId b) {
    return attributes.name(a) < attributes.name(b);
  });
  return order;
}

std::vector<double> from_lexicographic(std::span<const double> external,
                                       std::span<const AttrId> order) {
  if (external.size() != order.size())
    throw InputError("external scores: expected " +
                     std::to_string(order.size()) + " values, got " +
                     std::to_string(external.size()));
  std::vector<double> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    out[order[i]] = external[i];
  return out;
}

std::vector<MetricRow> evaluate_rankings(std::span<const RankedNode> nodes,
                                         std::span<const std::size_t> ks) {
  std::vector<MetricRow> rows;
  for (auto k : ks) {
    if (k == 0)
      throw InputError("k must be at least 1");
    MetricRow r;
    r.k = k;
    for (const auto &n : nodes) {
      const std::span<const std::string> ranking(n.ranking);
      auto rec = recall_at_k(ranking, n.truth, k);
      auto nd = ndcg_at_k(ranking, n.truth, k);
      if (!rec) {
        ++r.skipped;
        continue;
      }
      r.recall += *rec;
      r.ndcg += *nd;
      ++r.nodes;
    }
    if (r.nodes > 0) {
      r.recall /= static_cast<double>(r.nodes);
      r.ndcg /= static_cast<double>(r.nodes);
    }
    rows.push_back(r);
  }
  return rows;
}

} // namespace starmine
