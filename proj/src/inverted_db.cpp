#include "starmine/inverted_db.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>

#include <json.hpp>

namespace starmine {

LeafId LeafsetTable::intern(const Leafset &s) {
  auto it = ids_.find(s);
  if (it != ids_.end())
    return it->second;
  auto id = static_cast<LeafId>(sets_.size());
  sets_.push_back(s);
  ids_.emplace(s, id);
  return id;
}

std::optional<LeafId> LeafsetTable::find(const Leafset &s) const {
  auto it = ids_.find(s);
  if (it == ids_.end())
    return std::nullopt;
  return it->second;
}

const char *to_string(MergeCase c) {
  switch (c) {
  case MergeCase::PartlyMerged:
    return "partly merged";
  case MergeCase::BothTotallyMerged:
    return "two lines totally merged";
  case MergeCase::FirstTotallyMerged:
  case MergeCase::SecondTotallyMerged:
    return "one line totally merged";
  }
  return "?";
}

std::vector<CoreId> MergeReport::touched_cores() const {
  std::vector<CoreId> out;
  out.reserve(cores.size());
  for (const auto &c : cores)
    out.push_back(c.core);
  return out;
}

InvertedDatabase InvertedDatabase::build(const AttributedGraph &g,
                                         const MappingTable &mapping) {
  InvertedDatabase db;
  const auto n_cores = mapping.size();
  db.cores_.reserve(n_cores);
  db.by_core_.resize(n_cores);
  db.core_totals_.assign(n_cores, 0);

  // Singleton leafsets first, so their ids follow attribute id order.
  for (AttrId a = 0; a < g.attribute_count(); ++a)
    db.leafsets_.intern(Leafset{a});
  db.cores_of_leaf_.resize(db.leafsets_.size());

  std::vector<std::vector<VertexId>> hits(g.attribute_count());
  for (CoreId c = 0; c < n_cores; ++c) {
    const auto &entry = mapping.entry(c);
    db.cores_.push_back(entry.coreset);
    for (auto &h : hits)
      h.clear();
    for (auto p : entry.positions)
      for (auto u : g.neighbors(p))
        for (auto l : g.attrs(u))
          if (hits[l].empty() || hits[l].back() != p)
            hits[l].push_back(p);
    for (AttrId l = 0; l < hits.size(); ++l)
      if (!hits[l].empty())
        db.set_positions(c, static_cast<LeafId>(l), hits[l]);
  }
  return db;
}

std::optional<CoreId> InvertedDatabase::find_core(const Coreset &c) const {
  auto it = std::find(cores_.begin(), cores_.end(), c);
  if (it == cores_.end())
    return std::nullopt;
  return static_cast<CoreId>(it - cores_.begin());
}

const PositionList *InvertedDatabase::positions(CoreId c, LeafId l) const {
  const auto &recs = by_core_.at(c);
  auto it = recs.find(l);
  return it == recs.end() ? nullptr : &it->second;
}

std::uint64_t InvertedDatabase::total_frequency() const {
  std::uint64_t s = 0;
  for (auto t : core_totals_)
    s += t;
  return s;
}

const std::set<CoreId> &InvertedDatabase::cores_of(LeafId l) const {
  static const std::set<CoreId> none;
  return l < cores_of_leaf_.size() ? cores_of_leaf_[l] : none;
}

std::vector<LeafId> InvertedDatabase::live_leafsets() const {
  std::vector<LeafId> out;
  out.reserve(live_leafsets_);
  for (LeafId l = 0; l < cores_of_leaf_.size(); ++l)
    if (!cores_of_leaf_[l].empty())
      out.push_back(l);
  std::sort(out.begin(), out.end(),
            [&](LeafId a, LeafId b) { return leafsets_.less(a, b); });
  return out;
}

std::vector<CoreId> InvertedDatabase::shared_cores(LeafId x, LeafId y) const {
  const auto &a = cores_of(x);
  const auto &b = cores_of(y);
  std::vector<CoreId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

PositionList InvertedDatabase::cooccurrence(CoreId e, LeafId x,
                                            LeafId y) const {
  const auto *px = positions(e, x);
  const auto *py = positions(e, y);
  if (!px || !py)
    return {};
  return intersect(*px, *py);
}

PositionList InvertedDatabase::cooccurrence(const Coreset &e, const Leafset &x,
                                            const Leafset &y) const {
  auto c = find_core(e);
  auto lx = leafsets_.find(x);
  auto ly = leafsets_.find(y);
  if (!c || !lx || !ly)
    return {};
  return cooccurrence(*c, *lx, *ly);
}

void InvertedDatabase::set_positions(CoreId c, LeafId l, PositionList p) {
  if (l >= cores_of_leaf_.size())
    cores_of_leaf_.resize(l + 1);
  auto &recs = by_core_[c];
  auto it = recs.find(l);
  std::uint64_t old = 0;
  if (it != recs.end()) {
    old = it->second.size();
    if (p.empty()) {
      recs.erase(it);
      --record_count_;
      auto &cs = cores_of_leaf_[l];
      cs.erase(c);
      if (cs.empty())
        --live_leafsets_;
    } else {
      it->second = std::move(p);
    }
  } else if (!p.empty()) {
    auto &cs = cores_of_leaf_[l];
    if (cs.empty())
      ++live_leafsets_;
    cs.insert(c);
    ++record_count_;
    recs.emplace(l, std::move(p));
  }
  const auto *now = positions(c, l);
  core_totals_[c] = core_totals_[c] - old + (now ? now->size() : 0);
}

MergeReport InvertedDatabase::apply_merge(LeafId x, LeafId y) {
  MergeReport rep;
  rep.x = x;
  rep.y = y;
  if (x == y)
    throw InvariantViolation("apply_merge: a leafset cannot merge with itself");

  const Leafset merged = leafsets_.get(x).united(leafsets_.get(y));
  std::optional<LeafId> mid;
  for (auto e : shared_cores(x, y)) {
    const PositionList px = *positions(e, x);
    const PositionList py = *positions(e, y);
    PositionList both = intersect(px, py);
    if (both.empty())
      continue;
    if (!mid) {
      mid = leafsets_.intern(merged);
      if (*mid >= cores_of_leaf_.size())
        cores_of_leaf_.resize(*mid + 1);
    }
    if (*mid == x || *mid == y)
      throw InvariantViolation(
          "apply_merge: nested leafsets share a position at one coreset");

    CoreMerge cm;
    cm.core = e;
    cm.x_freq = px.size();
    cm.y_freq = py.size();
    cm.xy = both.size();
    const bool x_dies = both.size() == px.size();
    const bool y_dies = both.size() == py.size();
    cm.kind = x_dies && y_dies ? MergeCase::BothTotallyMerged
              : x_dies         ? MergeCase::FirstTotallyMerged
              : y_dies         ? MergeCase::SecondTotallyMerged
                               : MergeCase::PartlyMerged;

    PositionList rest_x, rest_y;
    std::set_difference(px.begin(), px.end(), both.begin(), both.end(),
                        std::back_inserter(rest_x));
    std::set_difference(py.begin(), py.end(), both.begin(), both.end(),
                        std::back_inserter(rest_y));
    PositionList into;
    if (const auto *pz = positions(e, *mid)) {
      cm.existing_freq = pz->size();
      std::set_union(pz->begin(), pz->end(), both.begin(), both.end(),
                     std::back_inserter(into));
    } else {
      into = std::move(both);
    }
    set_positions(e, x, std::move(rest_x));
    set_positions(e, y, std::move(rest_y));
    set_positions(e, *mid, std::move(into));
    rep.cores.push_back(cm);
  }
  if (!mid)
    return rep;
  rep.merged = *mid;
  for (auto l : {x, y}) {
    if (!is_live(l))
      rep.l_total.push_back(l);
    else
      rep.l_part.push_back(l);
  }
  return rep;
}

void InvertedDatabase::check_invariants() const {
  std::size_t records = 0;
  std::vector<std::set<CoreId>> expect(cores_of_leaf_.size());
  for (CoreId c = 0; c < by_core_.size(); ++c) {
    std::uint64_t total = 0;
    for (const auto &[l, pos] : by_core_[c]) {
      if (pos.empty())
        throw InvariantViolation("live record with empty positions");
      if (!std::is_sorted(pos.begin(), pos.end()) ||
          std::adjacent_find(pos.begin(), pos.end()) != pos.end())
        throw InvariantViolation("position list not sorted/unique");
      if (l >= expect.size())
        throw InvariantViolation("record leafset outside the index");
      expect[l].insert(c);
      total += pos.size();
      ++records;
    }
    if (total != core_totals_[c])
      throw InvariantViolation("core total differs from the column sum");
  }
  if (records != record_count_)
    throw InvariantViolation("record count mismatch");
  std::size_t live = 0;
  for (LeafId l = 0; l < expect.size(); ++l) {
    if (expect[l] != cores_of_leaf_[l])
      throw InvariantViolation("leafset index mismatch");
    live += !expect[l].empty();
  }
  if (live != live_leafsets_)
    throw InvariantViolation("live leafset count mismatch");
}

void dump_jsonl(const InvertedDatabase &db, const SymbolTable &attributes,
                const SymbolTable &vertices, std::ostream &out) {
  using Key = std::tuple<const Coreset *, const Leafset *, const PositionList *>;
  std::vector<Key> rows;
  for (CoreId c = 0; c < db.core_count(); ++c)
    for (const auto &[l, pos] : db.records_at(c))
      rows.emplace_back(&db.coreset(c), &db.leafsets().get(l), &pos);
  std::sort(rows.begin(), rows.end(), [](const Key &a, const Key &b) {
    if (*std::get<0>(a) != *std::get<0>(b))
      return *std::get<0>(a) < *std::get<0>(b);
    return *std::get<1>(a) < *std::get<1>(b);
  });
  for (const auto &[core, leaves, pos] : rows) {
    nlohmann::ordered_json j;
    j["core"] = value_names(core->values(), attributes);
    j["leaves"] = value_names(leaves->values(), attributes);
    j["positions"] = nlohmann::json::array();
    for (auto p : *pos)
      j["positions"].push_back(vertices.name(p));
    out << j.dump() << '\n';
  }
}

} // namespace starmine
