#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "starmine/graph.hpp"
#include "starmine/types.hpp"

namespace starmine {

// Interns leafsets to stable ids. Ids are never reused, so a LeafId keeps
// naming the same value set after its records disappear.
class LeafsetTable {
public:
  LeafId intern(const Leafset &s);
  std::optional<LeafId> find(const Leafset &s) const;
  const Leafset &get(LeafId id) const { return sets_.at(id); }
  std::size_t size() const { return sets_.size(); }

  // Strict weak order on the value sets behind two ids.
  bool less(LeafId a, LeafId b) const { return sets_[a] < sets_[b]; }

private:
  std::vector<Leafset> sets_;
  std::map<Leafset, LeafId> ids_;
};

enum class MergeCase {
  PartlyMerged,      // both lines keep some positions
  BothTotallyMerged, // both lines disappear at this coreset
  FirstTotallyMerged,  // x disappears, y survives
  SecondTotallyMerged, // y disappears, x survives
};

const char *to_string(MergeCase c);

struct CoreMerge {
  CoreId core = 0;
  std::size_t x_freq = 0;
  std::size_t y_freq = 0;
  std::size_t xy = 0;
  // Frequency of the union leafset at this coreset before the merge (0 when
  // the record did not exist).
  std::size_t existing_freq = 0;
  MergeCase kind = MergeCase::PartlyMerged;
};

struct MergeReport {
  LeafId x = 0;
  LeafId y = 0;
  LeafId merged = 0;
  std::vector<CoreMerge> cores;
  std::vector<LeafId> l_total; // leafsets of the pair with no record left
  std::vector<LeafId> l_part;  // leafsets of the pair that lost positions but survive
  bool noop() const { return cores.empty(); }
  std::vector<CoreId> touched_cores() const;
};

// Three-column table (leafset, coreset, positions) with per-leafset and
// per-coreset indexes. The coreset universe is fixed at build time.
class InvertedDatabase {
public:
  using CoreRecords = std::map<LeafId, PositionList>;

  static InvertedDatabase build(const AttributedGraph &g,
                                const MappingTable &mapping);

  std::size_t core_count() const { return cores_.size(); }
  const Coreset &coreset(CoreId c) const { return cores_.at(c); }
  std::optional<CoreId> find_core(const Coreset &c) const;

  const CoreRecords &records_at(CoreId c) const { return by_core_.at(c); }
  const PositionList *positions(CoreId c, LeafId l) const;
  std::uint64_t core_total(CoreId c) const { return core_totals_.at(c); }
  // s: the sum of all record frequencies.
  std::uint64_t total_frequency() const;
  std::size_t record_count() const { return record_count_; }

  const LeafsetTable &leafsets() const { return leafsets_; }
  std::optional<LeafId> find_leafset(const Leafset &s) const {
    return leafsets_.find(s);
  }
  const std::set<CoreId> &cores_of(LeafId l) const;
  bool is_live(LeafId l) const { return !cores_of(l).empty(); }
  // Live leafsets ordered by value.
  std::vector<LeafId> live_leafsets() const;
  std::size_t live_leafset_count() const { return live_leafsets_; }

  // Coresets where both leafsets have a record.
  std::vector<CoreId> shared_cores(LeafId x, LeafId y) const;
  PositionList cooccurrence(CoreId e, LeafId x, LeafId y) const;
  PositionList cooccurrence(const Coreset &e, const Leafset &x,
                            const Leafset &y) const;

  // Moves the co-occurring positions of x and y at every shared coreset into
  // the record of x ∪ y. A pair with no co-occurrence yields a no-op report.
  MergeReport apply_merge(LeafId x, LeafId y);

  // Recomputes every index from the records; throws InvariantViolation on
  // any mismatch.
  void check_invariants() const;

private:
  void set_positions(CoreId c, LeafId l, PositionList p);

  std::vector<Coreset> cores_;
  std::vector<CoreRecords> by_core_;
  std::vector<std::uint64_t> core_totals_;
  LeafsetTable leafsets_;
  std::vector<std::set<CoreId>> cores_of_leaf_;
  std::size_t record_count_ = 0;
  std::size_t live_leafsets_ = 0;
};

// JSON Lines, one record per line, sorted by (core, leaves) value sequence.
void dump_jsonl(const InvertedDatabase &db, const SymbolTable &attributes,
                const SymbolTable &vertices, std::ostream &out);

} // namespace starmine
