#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace starmine::testing {

const char *const kRunningEdges = "v1\tv2\n"
                                  "v1\tv3\n"
                                  "v1\tv4\n"
                                  "v3\tv5\n"
                                  "v4\tv5\n";
const char *const kRunningAttrs = "v1\ta\n"
                                  "v2\ta,c\n"
                                  "v3\tc\n"
                                  "v4\tb\n"
                                  "v5\ta,b\n";

AttributedGraph graph_from_text(const std::string &edges,
                                const std::string &attrs) {
  std::istringstream e(edges), a(attrs);
  return load_graph(e, a);
}

AttributedGraph running_example() {
  return graph_from_text(kRunningEdges, kRunningAttrs);
}

AttributedGraph random_graph(std::mt19937_64 &rng,
                             const RandomGraphSpec &spec) {
  std::uniform_int_distribution<std::size_t> nv(spec.min_vertices,
                                                spec.max_vertices);
  std::uniform_int_distribution<std::size_t> na(spec.min_values,
                                                spec.max_values);
  std::bernoulli_distribution edge(spec.edge_probability);
  const auto n = nv(rng);
  const auto k = na(rng);

  std::ostringstream edges, attrs;
  auto vname = [](std::size_t i) { return "v" + std::to_string(i); };
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) {
        edges << vname(i) << '\t' << vname(j) << '\n';
        ++degree[i];
        ++degree[j];
      }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] == 0) {
      auto j = pick(rng);
      if (j == i)
        j = (i + 1) % n;
      edges << vname(i) << '\t' << vname(j) << '\n';
      ++degree[i];
      ++degree[j];
    }

  std::uniform_int_distribution<std::size_t> count(0,
                                                   spec.max_values_per_vertex);
  std::uniform_int_distribution<std::size_t> value(0, k - 1);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> vals;
    const auto c = std::min(count(rng), k);
    while (vals.size() < c)
      vals.insert(value(rng));
    if (i == 0 && vals.empty() && !any)
      vals.insert(value(rng));
    if (vals.empty())
      continue;
    any = true;
    attrs << vname(i) << '\t';
    bool first = true;
    for (auto v : vals) {
      attrs << (first ? "" : ",") << 'a' << v;
      first = false;
    }
    attrs << '\n';
  }
  return graph_from_text(edges.str(), attrs.str());
}

namespace {

Names names_of(std::span<const AttrId> ids, const SymbolTable &t) {
  Names out;
  for (auto a : ids)
    out.push_back(t.name(a));
  std::sort(out.begin(), out.end());
  return out;
}

double xlogx(double n) { return n > 0 ? n * std::log2(n) : 0.0; }

} // namespace

RecordMap records_of(const InvertedDatabase &db, const AttributedGraph &g) {
  RecordMap out;
  for (CoreId c = 0; c < db.core_count(); ++c)
    for (const auto &[l, pos] : db.records_at(c)) {
      auto &dst = out[{names_of(db.coreset(c).values(), g.attributes()),
                       names_of(db.leafsets().get(l).values(), g.attributes())}];
      for (auto p : pos)
        dst.insert(g.vertices().name(p));
    }
  return out;
}

RecordMap brute_force_records(const AttributedGraph &g) {
  RecordMap out;
  const auto &A = g.attributes();
  for (VertexId p = 0; p < g.vertex_count(); ++p)
    for (auto core : g.attrs(p))
      for (auto u : g.neighbors(p))
        for (auto leaf : g.attrs(u))
          out[{Names{A.name(core)}, Names{A.name(leaf)}}].insert(
              g.vertices().name(p));
  return out;
}

std::map<Fact, std::size_t> fact_cover(const RecordMap &records) {
  std::map<Fact, std::size_t> out;
  for (const auto &[key, pos] : records)
    for (const auto &p : pos)
      for (const auto &l : key.second)
        ++out[{p, key.first, l}];
  return out;
}

std::size_t cover_violations(const RecordMap &initial,
                             const RecordMap &current) {
  const auto want = fact_cover(initial);
  const auto have = fact_cover(current);
  std::size_t bad = 0;
  for (const auto &[f, n] : want) {
    auto it = have.find(f);
    if (it == have.end() || it->second != 1)
      ++bad;
  }
  for (const auto &[f, n] : have)
    if (!want.count(f))
      ++bad;
  return bad;
}

double oracle_data_length(const RecordMap &records) {
  std::map<Names, double> totals;
  double leaf = 0;
  for (const auto &[key, pos] : records) {
    totals[key.first] += static_cast<double>(pos.size());
    leaf += xlogx(static_cast<double>(pos.size()));
  }
  double core = 0;
  for (const auto &[c, t] : totals)
    core += xlogx(t);
  return core - leaf;
}

double oracle_conditional_entropy(const RecordMap &records) {
  std::map<Names, double> row;
  double s = 0;
  for (const auto &[key, pos] : records) {
    row[key.first] += static_cast<double>(pos.size());
    s += static_cast<double>(pos.size());
  }
  double h = 0;
  for (const auto &[key, pos] : records) {
    const double joint = static_cast<double>(pos.size()) / s;
    const double cond =
        static_cast<double>(pos.size()) / row.at(key.first);
    h -= joint * std::log2(cond);
  }
  return h;
}

double oracle_data_gain(const InvertedDatabase &db, LeafId x, LeafId y) {
  InvertedDatabase copy = db;
  const double before = data_length(copy);
  copy.apply_merge(x, y);
  return before - data_length(copy);
}

RecordMap merge_records(const RecordMap &records, const Names &x,
                        const Names &y) {
  std::map<std::pair<Names, std::string>, std::vector<Names>> at;
  for (const auto &[key, pos] : records)
    for (const auto &p : pos)
      at[{key.first, p}].push_back(key.second);
  Names u;
  std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(u));
  RecordMap out;
  for (const auto &[cp, leaves] : at) {
    const bool both = std::find(leaves.begin(), leaves.end(), x) != leaves.end() &&
                      std::find(leaves.begin(), leaves.end(), y) != leaves.end();
    for (const auto &l : leaves)
      if (!both || (l != x && l != y))
        out[{cp.first, l}].insert(cp.second);
    if (both)
      out[{cp.first, u}].insert(cp.second);
  }
  return out;
}

double oracle_merge_gain(const RecordMap &records, const Names &x,
                         const Names &y) {
  return oracle_data_length(records) -
         oracle_data_length(merge_records(records, x, y));
}

double oracle_total_length(const AttributedGraph &g,
                           const RecordMap &records) {
  std::map<std::string, double> count;
  double total = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    for (auto a : g.attrs(v)) {
      count[g.attributes().name(a)] += 1;
      total += 1;
    }
  auto st = [&](const Names &vals) {
    double b = 0;
    for (const auto &v : vals)
      b += -std::log2(count.at(v) / total);
    return b;
  };
  // Single-value coresets: the coreset code is the value's own code.
  double model = 0;
  for (const auto &[name, n] : count)
    model += 2 * st(Names{name});

  std::map<Names, double> core_total;
  for (const auto &[key, pos] : records)
    core_total[key.first] += static_cast<double>(pos.size());
  for (const auto &[key, pos] : records) {
    const double f = static_cast<double>(pos.size());
    model += st(key.second) + st(key.first) -
             std::log2(f / core_total.at(key.first));
  }
  return model + oracle_data_length(records);
}

double partly_merged_form(double x, double y, double xy) {
  return (xlogx(x) + xlogx(y)) -
         (xlogx(x - xy) + xlogx(y - xy) + xlogx(xy));
}

double both_totally_merged_form(double xy) { return xy * std::log2(xy); }

double one_totally_merged_form(double survivor, double xy) {
  return survivor * std::log2(survivor / (survivor - xy)) +
         xy * std::log2(survivor - xy);
}

std::string describe(const RecordKey &k) {
  std::string s = "({";
  for (std::size_t i = 0; i < k.second.size(); ++i)
    s += (i ? "," : "") + k.second[i];
  s += "},{";
  for (std::size_t i = 0; i < k.first.size(); ++i)
    s += (i ? "," : "") + k.first[i];
  s += "})";
  return s;
}

} // namespace starmine::testing
