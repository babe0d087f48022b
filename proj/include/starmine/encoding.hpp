#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "starmine/graph.hpp"
#include "starmine/inverted_db.hpp"

namespace starmine {

// n·log2(n) with 0·log 0 = 0.
inline double xlog2x(double n) { return n > 0 ? n * std::log2(n) : 0.0; }

// Shannon code lengths of attribute values from their global frequency in
// lambda: bits(a) = -log2(count(a) / total).
class StandardCodeTable {
public:
  static StandardCodeTable build(const AttributedGraph &g);
  static StandardCodeTable from_counts(std::vector<std::uint64_t> counts);

  double bits(AttrId a) const { return bits_.at(a); }
  double bits(std::span<const AttrId> values) const;
  std::uint64_t count(AttrId a) const { return counts_.at(a); }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return bits_.size(); }

private:
  std::vector<std::uint64_t> counts_;
  std::vector<double> bits_;
  std::uint64_t total_ = 0;
};

// Code_L = -log2(f_L / f_c). Requires 1 <= f_L <= f_c.
double leaf_code_length(std::uint64_t f_leaf, std::uint64_t f_core);

// CT_c: code lengths of coresets from their mapping-table usage. For
// singleton coresets this is exactly the standard code table. Coresets with
// zero usage get no code and are not charged.
class CoreCodeTable {
public:
  static CoreCodeTable build(const MappingTable &mapping);

  double bits(CoreId c) const { return bits_.at(c); }
  std::uint64_t usage(CoreId c) const { return usage_.at(c); }
  bool used(CoreId c) const { return usage_.at(c) > 0; }
  std::size_t size() const { return bits_.size(); }

private:
  std::vector<double> bits_;
  std::vector<std::uint64_t> usage_;
};

// CT_L: one Code_L per live (coreset, leafset) record.
class LeafCodeTable {
public:
  void rebuild(const InvertedDatabase &db);
  void refresh(const InvertedDatabase &db, std::span<const CoreId> cores);

  const std::map<LeafId, double> &rows_at(CoreId c) const {
    return rows_.at(c);
  }
  double bits(CoreId c, LeafId l) const { return rows_.at(c).at(l); }
  std::size_t row_count() const;

private:
  void fill(const InvertedDatabase &db, CoreId c);
  std::vector<std::map<LeafId, double>> rows_;
};

struct Model {
  StandardCodeTable st;
  CoreCodeTable ct_c;
  LeafCodeTable ct_l;

  static Model build(const AttributedGraph &g, const MappingTable &mapping,
                     const InvertedDatabase &db);
};

// L(I|M) = Σ_j c_j log2 c_j - Σ_ij l_ij log2 l_ij. Never negative.
double data_length(const InvertedDatabase &db);
// The same quantity summed per record as Σ f_L · Code_L.
double data_length_per_record(const InvertedDatabase &db);
// H(Y|X) in bits per record use: data_length / s.
double conditional_entropy(const InvertedDatabase &db);

// Cost of one CT_c row: its values through ST plus its own code.
double core_row_cost(const Model &m, const InvertedDatabase &db, CoreId c);
// Cost of one CT_L row: leafset through ST, pointer to its coreset, Code_L.
double leaf_row_cost(const Model &m, const InvertedDatabase &db, CoreId c,
                     LeafId l, double code_leaf);

double core_table_length(const Model &m, const InvertedDatabase &db);
double model_length(const Model &m, const InvertedDatabase &db);
double total_length(const Model &m, const InvertedDatabase &db);

// Aggregates over the CT_L rows of one coreset. The summed row cost can be
// re-derived from these after a hypothetical change in O(1).
struct CoreRowSummary {
  std::size_t rows = 0;
  double sum_log_freq = 0;  // Σ log2 f_L
  double leaf_bits = 0;     // Σ ST bits of the leafsets
};

CoreRowSummary summarize_core(const InvertedDatabase &db,
                              const StandardCodeTable &st, CoreId c);

// Σ over rows of (leaf bits + code_core + Code_L), given the summary.
inline double leaf_rows_cost(const CoreRowSummary &s, std::uint64_t core_total,
                             double code_core) {
  const auto n = static_cast<double>(s.rows);
  const double log_total =
      core_total > 0 ? std::log2(static_cast<double>(core_total)) : 0.0;
  return s.leaf_bits + n * code_core + n * log_total - s.sum_log_freq;
}

struct LengthReport {
  double bits_model = 0;
  double bits_data = 0;
  double bits_total = 0;
  std::size_t records = 0;
  std::uint64_t s = 0;
};

LengthReport length_report(const Model &m, const InvertedDatabase &db);
std::string to_json(const LengthReport &r);

} // namespace starmine
