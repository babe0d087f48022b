#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "starmine/graph.hpp"
#include "starmine/miner.hpp"

namespace starmine {

struct PairRule {
  AttrId cause = 0;      // a core value
  AttrId derivative = 0; // a leaf value
  double score = 0;      // code_bits of the originating a-star
  std::size_t rank = 0;  // rank of the originating a-star
};

// (cause, derivative) value strings.
using RuleLibrary = std::set<std::pair<std::string, std::string>>;

// Expands each a-star into its core x leaf value pairs, best a-star first.
// A pair produced by several a-stars keeps its first (best) occurrence.
std::vector<PairRule> split_to_pairs(std::span<const AStar> patterns);

// JSON array of {"cause": ..., "derivative": ...}.
RuleLibrary load_rule_library(std::istream &in);

// |valid ∩ top-k of found| / |valid|. Throws InputError on an empty library.
double coverage_ratio(const RuleLibrary &valid, std::span<const PairRule> found,
                      const SymbolTable &attributes, std::size_t k);

std::vector<std::pair<std::size_t, double>>
coverage_curve(const RuleLibrary &valid, std::span<const PairRule> found,
               const SymbolTable &attributes, std::span<const std::size_t> ks);

} // namespace starmine
