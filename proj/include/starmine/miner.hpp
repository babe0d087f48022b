#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "starmine/encoding.hpp"
#include "starmine/graph.hpp"
#include "starmine/inverted_db.hpp"

namespace starmine {

enum class Algorithm { Basic, Partial };
enum class GainMode { Net, DataOnly };

const char *to_string(Algorithm a);
const char *to_string(GainMode g);

// Data term of the gain at one shared coreset: the drop of c log c when the
// coreset total shrinks by xy.
double core_gain_term(std::uint64_t core_total, std::uint64_t xy);

// Leaf term at one shared coreset for lines of frequency x and y sharing xy
// positions, merged into a line that already holds `existing` positions.
// With existing = 0 this covers the partly merged, two lines totally merged
// and one line totally merged cases in one expression.
double merge_gain_term(std::uint64_t x, std::uint64_t y, std::uint64_t xy,
                       std::uint64_t existing = 0);

struct PairGain {
  double data = 0;        // reduction of L(I|M)
  double model_delta = 0; // increase of L(M)
  double net() const { return data - model_delta; }
};

// Evaluates merge gains against one database state. Per-coreset row
// summaries are cached; call refresh() for the coresets a merge touched.
class GainEvaluator {
public:
  GainEvaluator(const InvertedDatabase &db, const Model &model);

  void refresh(std::span<const CoreId> cores);
  PairGain evaluate(LeafId x, LeafId y) const;
  double ordering_gain(LeafId x, LeafId y, GainMode mode) const;

private:
  const InvertedDatabase *db_;
  const Model *model_;
  std::vector<CoreRowSummary> summaries_;
};

double data_gain(const InvertedDatabase &db, LeafId x, LeafId y);
double data_gain(const InvertedDatabase &db, const Leafset &x,
                 const Leafset &y);
double net_gain(const InvertedDatabase &db, const Model &model, LeafId x,
                LeafId y);
double net_gain(const InvertedDatabase &db, const Model &model,
                const Leafset &x, const Leafset &y);

struct Candidate {
  LeafId x = 0; // canonical: leafset(x) < leafset(y)
  LeafId y = 0;
  double gain = 0;
  std::uint64_t stamp = 0;
};

// Descending gain, then ascending (x, y) by leafset value.
bool candidate_before(const LeafsetTable &t, const Candidate &a,
                      const Candidate &b);

// Orders x and y by leafset value.
std::pair<LeafId, LeafId> canonical_pair(const LeafsetTable &t, LeafId x,
                                         LeafId y);

// Max-priority candidate store with lazy invalidation: updates push a fresh
// entry with a new stamp, and stale heap entries are dropped when popped.
class CandidateStore {
public:
  explicit CandidateStore(const LeafsetTable &t);

  void upsert(LeafId x, LeafId y, double gain);
  bool erase(LeafId x, LeafId y);
  std::optional<Candidate> pop();

  std::optional<double> gain(LeafId x, LeafId y) const;
  std::size_t size() const { return live_.size(); }
  bool empty() const { return live_.empty(); }
  std::size_t stale_discarded() const { return stale_discarded_; }
  // Live candidates in pop order.
  std::vector<Candidate> snapshot() const;

private:
  struct Later {
    const LeafsetTable *t;
    bool operator()(const Candidate &a, const Candidate &b) const {
      return candidate_before(*t, b, a);
    }
  };

  const LeafsetTable *table_;
  std::priority_queue<Candidate, std::vector<Candidate>, Later> heap_;
  std::map<std::pair<LeafId, LeafId>, std::pair<double, std::uint64_t>> live_;
  std::uint64_t next_stamp_ = 0;
  std::size_t stale_discarded_ = 0;
};

// Symmetric leafset -> related leafsets map of pairs with positive gain.
class RelatedDict {
public:
  void add(LeafId a, LeafId b);
  void remove(LeafId a, LeafId b);
  // Drops every entry touching l; returns its former partners.
  std::vector<LeafId> remove_all(LeafId l);
  const std::set<LeafId> &related(LeafId l) const;
  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  bool symmetric() const;

private:
  std::map<LeafId, std::set<LeafId>> map_;
};

struct GenerateResult {
  std::vector<Candidate> candidates;
  std::size_t evaluated = 0;
};

// All pairs of live leafsets with positive gain, in pop order.
GenerateResult generate_candidates(const InvertedDatabase &db,
                                   const GainEvaluator &eval, GainMode mode,
                                   unsigned threads = 1);

// Unordered pairs of leafsets whose positions intersect at any of `cores`.
std::set<std::pair<LeafId, LeafId>>
colocated_pairs(const InvertedDatabase &db, std::span<const CoreId> cores);

// Coresets where x and y currently share at least one position.
std::vector<CoreId> merge_cores(const InvertedDatabase &db, LeafId x,
                                LeafId y);

struct UpdateResult {
  std::size_t evaluated = 0;
  std::size_t removed_total = 0;
  std::size_t added = 0;
  std::size_t updated = 0;
};

using GainObserver = std::function<void(LeafId, LeafId, const PairGain &)>;

// Brings the candidate store and rdict in line with the database after the
// merge described by `report`. `before` holds the pairs co-located at the
// touched coresets prior to the merge. `observe` sees every re-evaluation.
UpdateResult update_after_merge(CandidateStore &store, RelatedDict &rdict,
                                const MergeReport &report,
                                const InvertedDatabase &db,
                                const GainEvaluator &eval, GainMode mode,
                                const std::set<std::pair<LeafId, LeafId>> &before,
                                const GainObserver &observe = {});

struct AStar {
  Coreset coreset;
  Leafset leafset;
  double code_bits = 0; // Code_c + Code_L
  std::uint64_t frequency = 0;
  std::size_t rank = 0; // 1-based
};

std::vector<AStar> extract_patterns(const Model &model,
                                    const InvertedDatabase &db);
// Ascending code bits, then higher frequency, then coreset, then leafset.
void rank_patterns(std::vector<AStar> &patterns);

struct IterationStats {
  std::size_t iteration = 0;
  std::size_t evaluated_pairs = 0;
  std::size_t possible_pairs = 0;
  double update_ratio = 0;
  std::optional<std::pair<Leafset, Leafset>> accepted;
  double data_gain_bits = 0;
  double net_gain_bits = 0;
  double total_bits = 0;
};

struct MinerStats {
  std::vector<IterationStats> iterations;
  std::size_t merges = 0;
  std::size_t stale_discarded = 0;
  std::vector<std::string> warnings;
};

struct MinerHooks {
  // Called for every pair evaluation. Setting it forces single-threaded
  // candidate generation.
  std::function<void(const InvertedDatabase &, LeafId, LeafId,
                     const PairGain &)>
      on_gain;
  // Called before and after each merge is applied.
  std::function<void(const InvertedDatabase &, const Model &, LeafId, LeafId)>
      before_merge;
  std::function<void(const InvertedDatabase &, const Model &,
                     const MergeReport &, const IterationStats &)>
      after_merge;
};

struct MinerConfig {
  Algorithm algorithm = Algorithm::Partial;
  GainMode gain = GainMode::Net;
  unsigned threads = 1;
  std::size_t max_iterations = static_cast<std::size_t>(-1);
  MinerHooks hooks;
};

struct MiningResult {
  InvertedDatabase db;
  Model model;
  std::vector<AStar> patterns;
  MinerStats stats;
};

// Uses all singleton coresets when `coresets` is empty.
MiningResult mine(const AttributedGraph &g, const MinerConfig &config,
                  std::span<const Coreset> coresets = {});
MiningResult mine_basic(const AttributedGraph &g, MinerConfig config = {});
MiningResult mine_partial(const AttributedGraph &g, MinerConfig config = {});

void write_patterns_jsonl(std::span<const AStar> patterns,
                          const SymbolTable &attributes, std::ostream &out);
// Values unknown to `attributes` are interned into it.
std::vector<AStar> read_patterns_jsonl(std::istream &in,
                                       SymbolTable &attributes);
void write_stats_csv(const MinerStats &stats, const SymbolTable &attributes,
                     std::ostream &out);

} // namespace starmine
