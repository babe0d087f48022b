#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "starmine/types.hpp"

namespace starmine {

// Interns strings to dense ids in first-appearance order.
class SymbolTable {
public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string &name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  std::span<const std::string> names() const { return names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Names of `ids`, sorted as strings.
std::vector<std::string> value_names(std::span<const AttrId> ids,
                                     const SymbolTable &t);

// Undirected simple graph with a set of attribute values per vertex.
// Immutable once built; see GraphBuilder.
class AttributedGraph {
public:
  std::size_t vertex_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t attribute_count() const { return attributes_.size(); }

  std::span<const VertexId> neighbors(VertexId v) const {
    return adjacency_.at(v);
  }
  std::span<const AttrId> attrs(VertexId v) const { return lambda_.at(v); }
  bool has_attr(VertexId v, AttrId a) const;

  const SymbolTable &vertices() const { return vertices_; }
  const SymbolTable &attributes() const { return attributes_; }

  // Number of (vertex, value) incidences in lambda.
  std::size_t incidence_count() const;

private:
  friend class GraphBuilder;

  SymbolTable vertices_;
  SymbolTable attributes_;
  std::vector<std::vector<VertexId>> adjacency_;
  std::vector<std::vector<AttrId>> lambda_;
  std::size_t edge_count_ = 0;
};

class GraphBuilder {
public:
  VertexId add_vertex(std::string_view label);
  AttrId add_attribute(std::string_view value);
  // Returns false for self-loops, which are rejected.
  bool add_edge(std::string_view u, std::string_view v);
  void add_attrs(std::string_view vertex,
                 std::span<const std::string> values);

  std::size_t vertex_count() const { return g_.adjacency_.size(); }

  AttributedGraph build() &&;

private:
  AttributedGraph g_;
};

struct LoadReport {
  std::size_t edge_lines = 0;
  std::size_t self_loops = 0;
  std::size_t duplicate_edges = 0;
  std::size_t attr_only_vertices = 0;
  std::vector<std::string> warnings;
};

// Edge lines are `u<TAB>v`; attribute lines are `v<TAB>a1,a2,...`. Lines
// starting with '#' and blank lines are skipped. Throws InputError naming the
// source and line number on malformed input.
AttributedGraph load_graph(std::istream &edges, std::istream &attrs,
                           LoadReport *report = nullptr);
AttributedGraph load_graph_files(const std::string &edges_path,
                                 const std::string &attrs_path,
                                 LoadReport *report = nullptr);

// Writes the two-file format ordered by label, so the output depends only on
// the labelled structure, not on interning order.
void write_graph(const AttributedGraph &g, std::ostream &edges,
                 std::ostream &attrs);

// True when both graphs have the same labelled vertices, edges and values.
bool same_structure(const AttributedGraph &a, const AttributedGraph &b);

std::vector<std::vector<VertexId>>
connected_components(const AttributedGraph &g);

// One line per coreset, comma-separated values. Values unknown to the graph
// are interned into `attributes` so that they map to empty positions.
std::vector<Coreset> load_coresets(std::istream &in, SymbolTable &attributes);

// All singleton coresets, in attribute id order.
std::vector<Coreset> singleton_coresets(const AttributedGraph &g);

class MappingTable {
public:
  struct Entry {
    Coreset coreset;
    PositionList positions;
  };

  std::span<const Entry> entries() const { return entries_; }
  const Entry &entry(CoreId c) const { return entries_.at(c); }
  std::size_t size() const { return entries_.size(); }
  std::optional<CoreId> find(const Coreset &c) const;
  // Coresets whose positions came out empty.
  std::size_t empty_count() const;

private:
  friend MappingTable build_mapping_table(const AttributedGraph &,
                                          std::span<const Coreset>);
  std::vector<Entry> entries_;
};

// Maps each coreset to the sorted vertices whose value set contains it.
// Duplicate coresets are collapsed to the first occurrence.
MappingTable build_mapping_table(const AttributedGraph &g,
                                 std::span<const Coreset> coresets);

} // namespace starmine
