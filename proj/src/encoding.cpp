#include "starmine/encoding.hpp"

#include <sstream>

#include <json.hpp>

namespace starmine {

StandardCodeTable StandardCodeTable::build(const AttributedGraph &g) {
  std::vector<std::uint64_t> counts(g.attribute_count(), 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    for (auto a : g.attrs(v))
      ++counts[a];
  return from_counts(std::move(counts));
}

StandardCodeTable
StandardCodeTable::from_counts(std::vector<std::uint64_t> counts) {
  StandardCodeTable st;
  for (auto c : counts)
    st.total_ += c;
  if (st.total_ == 0)
    throw InputError("empty attribute universe");
  st.bits_.resize(counts.size(), 0.0);
  for (std::size_t a = 0; a < counts.size(); ++a)
    if (counts[a] > 0)
      st.bits_[a] = -std::log2(static_cast<double>(counts[a]) /
                               static_cast<double>(st.total_));
  st.counts_ = std::move(counts);
  return st;
}

double StandardCodeTable::bits(std::span<const AttrId> values) const {
  double b = 0;
  for (auto a : values)
    b += bits_.at(a);
  return b;
}

double leaf_code_length(std::uint64_t f_leaf, std::uint64_t f_core) {
  if (f_leaf == 0 || f_leaf > f_core)
    throw InvariantViolation("leaf code length needs 1 <= f_L <= f_c (got " +
                             std::to_string(f_leaf) + ", " +
                             std::to_string(f_core) + ")");
  return -std::log2(static_cast<double>(f_leaf) / static_cast<double>(f_core));
}

CoreCodeTable CoreCodeTable::build(const MappingTable &mapping) {
  CoreCodeTable t;
  std::uint64_t total = 0;
  for (const auto &e : mapping.entries()) {
    t.usage_.push_back(e.positions.size());
    total += e.positions.size();
  }
  t.bits_.assign(t.usage_.size(), 0.0);
  for (std::size_t c = 0; c < t.usage_.size(); ++c)
    if (t.usage_[c] > 0)
      t.bits_[c] = -std::log2(static_cast<double>(t.usage_[c]) /
                              static_cast<double>(total));
  return t;
}

void LeafCodeTable::fill(const InvertedDatabase &db, CoreId c) {
  auto &rows = rows_[c];
  rows.clear();
  const auto fc = db.core_total(c);
  for (const auto &[l, pos] : db.records_at(c))
    rows.emplace(l, leaf_code_length(pos.size(), fc));
}

void LeafCodeTable::rebuild(const InvertedDatabase &db) {
  rows_.assign(db.core_count(), {});
  for (CoreId c = 0; c < db.core_count(); ++c)
    fill(db, c);
}

void LeafCodeTable::refresh(const InvertedDatabase &db,
                            std::span<const CoreId> cores) {
  for (auto c : cores)
    fill(db, c);
}

std::size_t LeafCodeTable::row_count() const {
  std::size_t n = 0;
  for (const auto &r : rows_)
    n += r.size();
  return n;
}

Model Model::build(const AttributedGraph &g, const MappingTable &mapping,
                   const InvertedDatabase &db) {
  Model m{StandardCodeTable::build(g), CoreCodeTable::build(mapping), {}};
  m.ct_l.rebuild(db);
  return m;
}

double data_length(const InvertedDatabase &db) {
  double core_part = 0;
  double leaf_part = 0;
  for (CoreId c = 0; c < db.core_count(); ++c) {
    core_part += xlog2x(static_cast<double>(db.core_total(c)));
    for (const auto &[l, pos] : db.records_at(c))
      leaf_part += xlog2x(static_cast<double>(pos.size()));
  }
  // Rounding can leave a tiny negative residue when every line is certain.
  return std::max(0.0, core_part - leaf_part);
}

double data_length_per_record(const InvertedDatabase &db) {
  double bits = 0;
  for (CoreId c = 0; c < db.core_count(); ++c) {
    const auto fc = db.core_total(c);
    for (const auto &[l, pos] : db.records_at(c))
      bits += static_cast<double>(pos.size()) *
              leaf_code_length(pos.size(), fc);
  }
  return bits;
}

double conditional_entropy(const InvertedDatabase &db) {
  const auto s = db.total_frequency();
  if (s == 0)
    throw InvariantViolation("conditional entropy of an empty database");
  return data_length(db) / static_cast<double>(s);
}

double core_row_cost(const Model &m, const InvertedDatabase &db, CoreId c) {
  return m.st.bits(db.coreset(c).values()) + m.ct_c.bits(c);
}

double leaf_row_cost(const Model &m, const InvertedDatabase &db, CoreId c,
                     LeafId l, double code_leaf) {
  return m.st.bits(db.leafsets().get(l).values()) + m.ct_c.bits(c) +
         code_leaf;
}

double core_table_length(const Model &m, const InvertedDatabase &db) {
  double bits = 0;
  for (CoreId c = 0; c < db.core_count(); ++c)
    if (m.ct_c.used(c))
      bits += core_row_cost(m, db, c);
  return bits;
}

double model_length(const Model &m, const InvertedDatabase &db) {
  double bits = core_table_length(m, db);
  for (CoreId c = 0; c < db.core_count(); ++c)
    for (const auto &[l, code] : m.ct_l.rows_at(c))
      bits += leaf_row_cost(m, db, c, l, code);
  return bits;
}

double total_length(const Model &m, const InvertedDatabase &db) {
  return model_length(m, db) + data_length(db);
}

CoreRowSummary summarize_core(const InvertedDatabase &db,
                              const StandardCodeTable &st, CoreId c) {
  CoreRowSummary s;
  for (const auto &[l, pos] : db.records_at(c)) {
    ++s.rows;
    s.sum_log_freq += std::log2(static_cast<double>(pos.size()));
    s.leaf_bits += st.bits(db.leafsets().get(l).values());
  }
  return s;
}

LengthReport length_report(const Model &m, const InvertedDatabase &db) {
  LengthReport r;
  r.bits_model = model_length(m, db);
  r.bits_data = data_length(db);
  r.bits_total = r.bits_model + r.bits_data;
  r.records = db.record_count();
  r.s = db.total_frequency();
  return r;
}

std::string to_json(const LengthReport &r) {
  nlohmann::ordered_json j;
  j["bits_model"] = r.bits_model;
  j["bits_data"] = r.bits_data;
  j["bits_total"] = r.bits_total;
  j["records"] = r.records;
  j["s"] = r.s;
  return j.dump();
}

} // namespace starmine
