#pragma once

// Fixtures, generators and independent oracles shared by the unit tests and
// the acceptance binary. Oracles work on labels and plain containers and do
// not reuse the library's bookkeeping.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "starmine/encoding.hpp"
#include "starmine/graph.hpp"
#include "starmine/inverted_db.hpp"
#include "starmine/miner.hpp"

namespace starmine::testing {

using Names = std::vector<std::string>;

// Five vertices, values a, b, c; five edges.
extern const char *const kRunningEdges;
extern const char *const kRunningAttrs;
AttributedGraph running_example();

AttributedGraph graph_from_text(const std::string &edges,
                                const std::string &attrs);

struct RandomGraphSpec {
  std::size_t max_vertices = 30;
  std::size_t min_vertices = 4;
  std::size_t max_values = 8;
  std::size_t min_values = 2;
  double edge_probability = 0.2;
  std::size_t max_values_per_vertex = 3;
};

// Values are named a0, a1, ...; vertices v0, v1, .... Every vertex keeps at
// least one edge when possible and at least one vertex has a value.
AttributedGraph random_graph(std::mt19937_64 &rng, const RandomGraphSpec &spec);

// (core labels, leaf labels) -> position labels.
using RecordKey = std::pair<Names, Names>;
using RecordMap = std::map<RecordKey, std::set<std::string>>;

RecordMap records_of(const InvertedDatabase &db, const AttributedGraph &g);

// Initial database by direct enumeration of (core vertex, core value,
// neighbouring leaf value) triples.
RecordMap brute_force_records(const AttributedGraph &g);

// (position, core labels, leaf value) facts covered by a database.
using Fact = std::tuple<std::string, Names, std::string>;
std::map<Fact, std::size_t> fact_cover(const RecordMap &records);

// Number of facts of `initial` not covered exactly once by `current`, plus
// facts of `current` absent from `initial`.
std::size_t cover_violations(const RecordMap &initial,
                             const RecordMap &current);

// Σ c log c − Σ f log f straight from label-level records.
double oracle_data_length(const RecordMap &records);

// H(Y|X) from the joint (coreset, leafset) frequency matrix:
// −Σ p(x,y) log2 p(y|x), returned in bits per record use.
double oracle_conditional_entropy(const RecordMap &records);

// Data length drop of merging x and y, by copying the database, merging and
// recomputing from scratch.
double oracle_data_gain(const InvertedDatabase &db, LeafId x, LeafId y);

// Label-level merge: at every (coreset, position) holding both x and y, the
// two records give way to one record of x ∪ y.
RecordMap merge_records(const RecordMap &records, const Names &x,
                        const Names &y);

// Data length drop of merging x and y, computed on labels only.
double oracle_merge_gain(const RecordMap &records, const Names &x,
                         const Names &y);

// Total length from scratch: ST from raw λ counts, CT_c from the mapping
// table, CT_L and data from the label-level records.
double oracle_total_length(const AttributedGraph &g, const RecordMap &records);

// Closed forms of the merge term for the three cases at one coreset.
double partly_merged_form(double x, double y, double xy);
double both_totally_merged_form(double xy);
// The line of frequency `survivor` keeps survivor − xy positions.
double one_totally_merged_form(double survivor, double xy);

std::string describe(const RecordKey &k);

} // namespace starmine::testing
