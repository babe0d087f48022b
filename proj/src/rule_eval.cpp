#include "starmine/rule_eval.hpp"

#include <algorithm>
#include <istream>

#include <json.hpp>

namespace starmine {

std::vector<PairRule> split_to_pairs(std::span<const AStar> patterns) {
  std::vector<const AStar *> order;
  order.reserve(patterns.size());
  for (const auto &p : patterns)
    order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const AStar *a, const AStar *b) { return a->rank < b->rank; });

  std::vector<PairRule> out;
  std::set<std::pair<AttrId, AttrId>> seen;
  for (const auto *p : order)
    for (auto c : p->coreset.values())
      for (auto l : p->leafset.values())
        if (seen.emplace(c, l).second)
          out.push_back(PairRule{c, l, p->code_bits, p->rank});
  return out;
}

RuleLibrary load_rule_library(std::istream &in) {
  RuleLibrary lib;
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_array())
      throw InputError("rule library: expected a JSON array");
    for (const auto &r : j)
      lib.emplace(r.at("cause").get<std::string>(),
                  r.at("derivative").get<std::string>());
  } catch (const nlohmann::json::exception &e) {
    throw InputError(std::string("rule library: ") + e.what());
  }
  return lib;
}

double coverage_ratio(const RuleLibrary &valid, std::span<const PairRule> found,
                      const SymbolTable &attributes, std::size_t k) {
  if (valid.empty())
    throw InputError("coverage: empty rule library");
  if (k == 0)
    throw InputError("coverage: k must be at least 1");
  std::size_t hits = 0;
  std::set<std::pair<std::string, std::string>> counted;
  for (std::size_t i = 0; i < std::min(k, found.size()); ++i) {
    std::pair<std::string, std::string> key{attributes.name(found[i].cause),
                                            attributes.name(found[i].derivative)};
    if (valid.count(key) && counted.insert(key).second)
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(valid.size());
}

std::vector<std::pair<std::size_t, double>>
coverage_curve(const RuleLibrary &valid, std::span<const PairRule> found,
               const SymbolTable &attributes, std::span<const std::size_t> ks) {
  std::vector<std::pair<std::size_t, double>> out;
  for (auto k : ks)
    out.emplace_back(k, coverage_ratio(valid, found, attributes, k));
  return out;
}

} // namespace starmine
