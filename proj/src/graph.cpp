#include "starmine/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace starmine {

std::uint32_t SymbolTable::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end())
    return it->second;
  auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end())
    return std::nullopt;
  return it->second;
}

bool AttributedGraph::has_attr(VertexId v, AttrId a) const {
  const auto &l = lambda_.at(v);
  return std::binary_search(l.begin(), l.end(), a);
}

std::size_t AttributedGraph::incidence_count() const {
  std::size_t n = 0;
  for (const auto &l : lambda_)
    n += l.size();
  return n;
}

VertexId GraphBuilder::add_vertex(std::string_view label) {
  auto id = g_.vertices_.intern(label);
  if (id == g_.adjacency_.size()) {
    g_.adjacency_.emplace_back();
    g_.lambda_.emplace_back();
  }
  return id;
}

AttrId GraphBuilder::add_attribute(std::string_view value) {
  return g_.attributes_.intern(value);
}

bool GraphBuilder::add_edge(std::string_view u, std::string_view v) {
  auto a = add_vertex(u);
  auto b = add_vertex(v);
  if (a == b)
    return false;
  g_.adjacency_[a].push_back(b);
  g_.adjacency_[b].push_back(a);
  return true;
}

void GraphBuilder::add_attrs(std::string_view vertex,
                             std::span<const std::string> values) {
  auto v = add_vertex(vertex);
  for (const auto &s : values)
    g_.lambda_[v].push_back(add_attribute(s));
}

AttributedGraph GraphBuilder::build() && {
  std::size_t degree_sum = 0;
  for (auto &adj : g_.adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    degree_sum += adj.size();
  }
  for (auto &l : g_.lambda_) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  g_.edge_count_ = degree_sum / 2;
  return std::move(g_);
}

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r')
    s.remove_suffix(1);
  return s;
}

bool skippable(std::string_view line) {
  return line.empty() || line.front() == '#' ||
         line.find_first_not_of(" \t") == std::string_view::npos;
}

[[noreturn]] void malformed(const char *source, std::size_t line_no,
                            const std::string &what) {
  std::ostringstream os;
  os << source << " line " << line_no << ": " << what;
  throw InputError(os.str());
}

} // namespace

AttributedGraph load_graph(std::istream &edges, std::istream &attrs,
                           LoadReport *report) {
  LoadReport local;
  LoadReport &rep = report ? *report : local;
  GraphBuilder b;
  std::set<std::pair<VertexId, VertexId>> seen;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(edges, raw)) {
    ++line_no;
    auto line = trim_cr(raw);
    if (skippable(line))
      continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string_view::npos)
      malformed("edges", line_no, "expected `u<TAB>v`");
    auto u = line.substr(0, tab);
    auto v = line.substr(tab + 1);
    ++rep.edge_lines;
    if (u == v) {
      // The endpoint still becomes a vertex; only the loop is dropped.
      b.add_vertex(u);
      ++rep.self_loops;
      continue;
    }
    auto a = b.add_vertex(u);
    auto c = b.add_vertex(v);
    if (!seen.emplace(std::min(a, c), std::max(a, c)).second) {
      ++rep.duplicate_edges;
      continue;
    }
    b.add_edge(u, v);
  }
  if (edges.bad())
    throw InputError("edges: read error");
  const auto edge_vertices = b.vertex_count();

  line_no = 0;
  std::vector<std::string> values;
  while (std::getline(attrs, raw)) {
    ++line_no;
    auto line = trim_cr(raw);
    if (skippable(line))
      continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 ||
        line.find('\t', tab + 1) != std::string_view::npos)
      malformed("attrs", line_no, "expected `v<TAB>a1,a2,...`");
    auto vertex = line.substr(0, tab);
    auto rest = line.substr(tab + 1);
    values.clear();
    std::size_t start = 0;
    while (start <= rest.size() && !rest.empty()) {
      auto comma = rest.find(',', start);
      auto tok = rest.substr(start, comma == std::string_view::npos
                                        ? std::string_view::npos
                                        : comma - start);
      if (tok.empty())
        malformed("attrs", line_no, "empty attribute value");
      values.emplace_back(tok);
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    b.add_attrs(vertex, values);
  }
  if (attrs.bad())
    throw InputError("attrs: read error");

  if (b.vertex_count() > edge_vertices) {
    rep.attr_only_vertices = b.vertex_count() - edge_vertices;
    rep.warnings.push_back(std::to_string(rep.attr_only_vertices) +
                           " vertices appear only in the attribute source; "
                           "added as isolated vertices");
  }
  if (rep.self_loops > 0)
    rep.warnings.push_back(std::to_string(rep.self_loops) +
                           " self-loop edge lines rejected");
  if (rep.duplicate_edges > 0)
    rep.warnings.push_back(std::to_string(rep.duplicate_edges) +
                           " duplicate edges collapsed");
  return std::move(b).build();
}

AttributedGraph load_graph_files(const std::string &edges_path,
                                 const std::string &attrs_path,
                                 LoadReport *report) {
  std::ifstream edges(edges_path);
  if (!edges)
    throw InputError("cannot open edge file: " + edges_path);
  std::ifstream attrs(attrs_path);
  if (!attrs)
    throw InputError("cannot open attribute file: " + attrs_path);
  return load_graph(edges, attrs, report);
}

void write_graph(const AttributedGraph &g, std::ostream &edges,
                 std::ostream &attrs) {
  const auto &vn = g.vertices();
  const auto &an = g.attributes();
  std::vector<std::pair<std::string, std::string>> edge_lines;
  for (VertexId u = 0; u < g.vertex_count(); ++u)
    for (auto v : g.neighbors(u))
      if (vn.name(u) < vn.name(v))
        edge_lines.emplace_back(vn.name(u), vn.name(v));
  std::sort(edge_lines.begin(), edge_lines.end());
  for (const auto &[u, v] : edge_lines)
    edges << u << '\t' << v << '\n';

  std::vector<VertexId> order(g.vertex_count());
  for (VertexId v = 0; v < order.size(); ++v)
    order[v] = v;
  std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
    return vn.name(a) < vn.name(b);
  });
  for (auto v : order) {
    // Vertices with edges but no values are already named by the edge file.
    if (g.attrs(v).empty() && !g.neighbors(v).empty())
      continue;
    if (g.attrs(v).empty()) {
      attrs << vn.name(v) << "\t\n";
      continue;
    }
    std::vector<std::string> vals;
    for (auto a : g.attrs(v))
      vals.push_back(an.name(a));
    std::sort(vals.begin(), vals.end());
    attrs << vn.name(v) << '\t';
    for (std::size_t i = 0; i < vals.size(); ++i)
      attrs << (i ? "," : "") << vals[i];
    attrs << '\n';
  }
}

namespace {

using LabelledGraph =
    std::tuple<std::set<std::string>,
               std::set<std::pair<std::string, std::string>>,
               std::map<std::string, std::set<std::string>>>;

LabelledGraph labelled(const AttributedGraph &g) {
  LabelledGraph out;
  auto &[verts, edges, lambda] = out;
  for (VertexId u = 0; u < g.vertex_count(); ++u) {
    const auto &un = g.vertices().name(u);
    verts.insert(un);
    for (auto v : g.neighbors(u))
      edges.emplace(un, g.vertices().name(v));
    auto &vals = lambda[un];
    for (auto a : g.attrs(u))
      vals.insert(g.attributes().name(a));
  }
  return out;
}

} // namespace

bool same_structure(const AttributedGraph &a, const AttributedGraph &b) {
  return a.vertex_count() == b.vertex_count() &&
         a.edge_count() == b.edge_count() && labelled(a) == labelled(b);
}

std::vector<std::vector<VertexId>>
connected_components(const AttributedGraph &g) {
  std::vector<std::vector<VertexId>> out;
  std::vector<bool> seen(g.vertex_count(), false);
  std::vector<VertexId> stack;
  for (VertexId s = 0; s < g.vertex_count(); ++s) {
    if (seen[s])
      continue;
    std::vector<VertexId> comp;
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (auto v : g.neighbors(u)) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<Coreset> load_coresets(std::istream &in, SymbolTable &attributes) {
  std::vector<Coreset> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim_cr(raw);
    if (skippable(line))
      continue;
    std::vector<AttrId> ids;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      auto tok = line.substr(start, comma == std::string_view::npos
                                        ? std::string_view::npos
                                        : comma - start);
      if (tok.empty() || tok.find('\t') != std::string_view::npos)
        malformed("coresets", line_no, "empty or tab-containing value");
      ids.push_back(attributes.intern(tok));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    out.emplace_back(std::move(ids));
  }
  if (in.bad())
    throw InputError("coresets: read error");
  return out;
}

std::vector<std::string> value_names(std::span<const AttrId> ids,
                                     const SymbolTable &t) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto a : ids)
    out.push_back(t.name(a));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Coreset> singleton_coresets(const AttributedGraph &g) {
  std::vector<Coreset> out;
  out.reserve(g.attribute_count());
  for (AttrId a = 0; a < g.attribute_count(); ++a)
    out.push_back(Coreset{a});
  return out;
}

std::optional<CoreId> MappingTable::find(const Coreset &c) const {
  for (CoreId i = 0; i < entries_.size(); ++i)
    if (entries_[i].coreset == c)
      return i;
  return std::nullopt;
}

std::size_t MappingTable::empty_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(),
                    [](const Entry &e) { return e.positions.empty(); }));
}

MappingTable build_mapping_table(const AttributedGraph &g,
                                 std::span<const Coreset> coresets) {
  MappingTable t;
  std::set<Coreset> seen;
  for (const auto &c : coresets) {
    if (c.empty())
      throw InputError("empty coreset");
    if (!seen.insert(c).second)
      continue;
    MappingTable::Entry e{c, {}};
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      auto l = g.attrs(v);
      if (std::includes(l.begin(), l.end(), c.values().begin(),
                        c.values().end()))
        e.positions.push_back(v);
    }
    t.entries_.push_back(std::move(e));
  }
  return t;
}

} // namespace starmine
