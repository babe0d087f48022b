#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "starmine/encoding.hpp"
#include "starmine/graph.hpp"
#include "starmine/inverted_db.hpp"
#include "starmine/manifest.hpp"
#include "starmine/miner.hpp"
#include "starmine/rule_eval.hpp"
#include "starmine/scoring.hpp"

using namespace starmine;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

std::ifstream open_in(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write " + path);
  return out;
}

std::vector<std::string> lexicographic_names(const SymbolTable &t) {
  std::vector<std::string> out;
  for (auto a : lexicographic_order(t))
    out.push_back(t.name(a));
  return out;
}

struct GraphArgs {
  std::string edges;
  std::string attrs;
  std::string coresets;

  void add_to(CLI::App *cmd) {
    cmd->add_option("--edges", edges, "edge file (u<TAB>v)")->required();
    cmd->add_option("--attrs", attrs, "attribute file (v<TAB>a1,a2,...)")
        ->required();
  }
};

struct MineArgs {
  GraphArgs graph;
  std::string algo = "partial";
  std::string gain = "net";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool verbose = false;

  void add_to(CLI::App *cmd) {
    graph.add_to(cmd);
    cmd->add_option("--coresets", graph.coresets,
                    "coreset file, one comma-separated coreset per line");
    cmd->add_option("--algo", algo, "basic or partial")
        ->check(CLI::IsMember({"basic", "partial"}))
        ->capture_default_str();
    cmd->add_option("--gain", gain, "net or data-only")
        ->check(CLI::IsMember({"net", "data-only"}))
        ->capture_default_str();
    cmd->add_option("--threads", threads, "gain evaluation workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--verbose", verbose,
                  "print a description-length report per iteration to stderr");
  }
};

struct Loaded {
  AttributedGraph graph;
  std::vector<Coreset> coresets;
};

Loaded load(const GraphArgs &a) {
  LoadReport report;
  Loaded out{load_graph_files(a.edges, a.attrs, &report), {}};
  for (const auto &w : report.warnings)
    std::cerr << "warning: " << w << '\n';
  if (connected_components(out.graph).size() > 1)
    std::cerr << "warning: input graph is not connected\n";
  if (!a.coresets.empty()) {
    auto in = open_in(a.coresets);
    SymbolTable attributes = out.graph.attributes();
    out.coresets = load_coresets(in, attributes);
    if (attributes.size() != out.graph.attribute_count())
      std::cerr << "warning: coreset file names "
                << attributes.size() - out.graph.attribute_count()
                << " values absent from the graph\n";
    if (out.coresets.empty())
      throw InputError("coreset file " + a.coresets + " has no coresets");
    // Values absent from the graph cannot match any vertex.
    std::erase_if(out.coresets, [&](const Coreset &c) {
      return std::any_of(c.values().begin(), c.values().end(), [&](AttrId v) {
        return v >= out.graph.attribute_count();
      });
    });
    if (out.coresets.empty())
      throw InputError("no coreset in " + a.coresets +
                       " uses only values of the graph");
  }
  return out;
}

RunManifest base_manifest(const std::string &command, const GraphArgs &g,
                          const AttributedGraph &graph) {
  RunManifest m;
  m.command = command;
  m.inputs["edges"] = sha256_file(g.edges);
  m.inputs["attrs"] = sha256_file(g.attrs);
  if (!g.coresets.empty())
    m.inputs["coresets"] = sha256_file(g.coresets);
  m.attribute_order = lexicographic_names(graph.attributes());
  return m;
}

MiningResult run_miner(const MineArgs &a, const Loaded &in) {
  MinerConfig cfg;
  cfg.algorithm = a.algo == "basic" ? Algorithm::Basic : Algorithm::Partial;
  cfg.gain = a.gain == "net" ? GainMode::Net : GainMode::DataOnly;
  cfg.threads = a.threads;
  if (a.verbose) {
    cfg.hooks.after_merge = [](const InvertedDatabase &db, const Model &m,
                               const MergeReport &, const IterationStats &) {
      std::cerr << to_json(length_report(m, db)) << '\n';
    };
  }
  auto result = mine(in.graph, cfg, in.coresets);
  for (const auto &w : result.stats.warnings)
    std::cerr << "warning: " << w << '\n';
  return result;
}

int cmd_mine(const MineArgs &a, const std::string &out_path,
             std::string stats_path, const std::string &dump_path) {
  const auto in = load(a.graph);
  const auto result = run_miner(a, in);
  {
    auto out = open_out(out_path);
    write_patterns_jsonl(result.patterns, in.graph.attributes(), out);
  }
  if (stats_path.empty())
    stats_path = out_path + ".stats.csv";
  {
    auto out = open_out(stats_path);
    write_stats_csv(result.stats, in.graph.attributes(), out);
  }
  if (!dump_path.empty()) {
    auto out = open_out(dump_path);
    dump_jsonl(result.db, in.graph.attributes(), in.graph.vertices(), out);
  }
  auto m = base_manifest("mine", a.graph, in.graph);
  m.algorithm = a.algo;
  m.gain = a.gain;
  write_manifest(m, out_path + ".manifest.json");
  return 0;
}

int cmd_stats(const MineArgs &a, const std::string &out_path) {
  const auto in = load(a.graph);
  const auto result = run_miner(a, in);
  if (out_path.empty()) {
    write_stats_csv(result.stats, in.graph.attributes(), std::cout);
    return 0;
  }
  {
    auto out = open_out(out_path);
    write_stats_csv(result.stats, in.graph.attributes(), out);
  }
  auto m = base_manifest("stats", a.graph, in.graph);
  m.algorithm = a.algo;
  m.gain = a.gain;
  write_manifest(m, out_path + ".manifest.json");
  return 0;
}

std::vector<std::string> read_lines(const std::string &path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    out.push_back(line);
  }
  return out;
}

int cmd_score(const GraphArgs &g, const std::string &patterns_path,
              const std::string &targets_path,
              const std::string &external_path, const std::string &out_path,
              unsigned threads) {
  const auto in = load(g);
  const auto &graph = in.graph;
  SymbolTable attributes = graph.attributes();
  std::vector<AStar> patterns;
  {
    auto pin = open_in(patterns_path);
    patterns = read_patterns_jsonl(pin, attributes);
  }
  // Values the graph has never seen cannot be scored against it.
  std::erase_if(patterns, [&](const AStar &p) {
    auto beyond = [&](AttrId v) { return v >= graph.attribute_count(); };
    return std::any_of(p.coreset.values().begin(), p.coreset.values().end(),
                       beyond) ||
           std::any_of(p.leafset.values().begin(), p.leafset.values().end(),
                       beyond);
  });

  nlohmann::json external;
  const auto order = lexicographic_order(graph.attributes());
  if (!external_path.empty()) {
    auto ein = open_in(external_path);
    try {
      external = nlohmann::json::parse(ein);
    } catch (const nlohmann::json::exception &e) {
      throw InputError("external scores: " + std::string(e.what()));
    }
    if (!external.is_object())
      throw InputError("external scores: expected an object keyed by vertex");
  }

  const auto targets = read_lines(targets_path);
  std::vector<VertexId> ids;
  std::vector<std::optional<std::vector<double>>> ext(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto v = graph.vertices().find(targets[i]);
    if (!v)
      throw InputError("target vertex " + targets[i] + " is not in the graph");
    ids.push_back(*v);
    if (!external.is_null() && external.contains(targets[i])) {
      try {
        ext[i] = from_lexicographic(
            external.at(targets[i]).get<std::vector<double>>(), order);
      } catch (const nlohmann::json::exception &e) {
        throw InputError("external scores for " + targets[i] + ": " +
                         e.what());
      }
    }
  }

  std::vector<std::string> lines(targets.size());
  std::vector<std::vector<std::string>> warnings(targets.size());
  auto work = [&](std::size_t i) {
    auto ns = score_node(patterns, graph, ids[i]);
    if (ns.warning)
      warnings[i].push_back(*ns.warning);
    ScoreVector final_scores = ns.scores;
    if (ext[i]) {
      final_scores = fuse_scores({ns.scores, *ext[i]}, &warnings[i]);
      for (auto a : graph.attrs(ids[i]))
        final_scores[a] = kNoScore;
    }
    nlohmann::ordered_json j;
    j["vertex"] = targets[i];
    j["ranked"] = nlohmann::json::array();
    for (auto a : ranked_attributes(final_scores))
      j["ranked"].push_back(nlohmann::ordered_json{
          {"attr", graph.attributes().name(a)}, {"score", final_scores[a]}});
    lines[i] = j.dump();
  };
  threads = std::max(1u, threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < targets.size(); i += threads)
          work(i);
      });
  }

  auto out = open_out(out_path);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (const auto &w : warnings[i])
      std::cerr << "warning: " << targets[i] << ": " << w << '\n';
    out << lines[i] << '\n';
  }
  auto m = base_manifest("score", g, graph);
  m.inputs["patterns"] = sha256_file(patterns_path);
  m.inputs["targets"] = sha256_file(targets_path);
  if (!external_path.empty())
    m.inputs["external"] = sha256_file(external_path);
  write_manifest(m, out_path + ".manifest.json");
  return 0;
}

std::map<std::string, std::set<std::string>> read_truth(const std::string &path) {
  std::map<std::string, std::set<std::string>> truth;
  std::size_t line_no = 0;
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw InputError("truth line " + std::to_string(line_no) +
                       ": expected vertex<TAB>values");
    auto &dst = truth[line.substr(0, tab)];
    std::stringstream vals(line.substr(tab + 1));
    std::string v;
    while (std::getline(vals, v, ','))
      if (!v.empty())
        dst.insert(v);
  }
  return truth;
}

int cmd_eval_completion(const std::string &scores_path,
                        const std::string &truth_path,
                        const std::vector<std::size_t> &ks,
                        const std::string &out_path) {
  const auto truth = read_truth(truth_path);
  std::vector<RankedNode> nodes;
  std::size_t line_no = 0;
  for (const auto &line : read_lines(scores_path)) {
    ++line_no;
    RankedNode n;
    try {
      const auto j = nlohmann::json::parse(line);
      n.vertex = j.at("vertex").get<std::string>();
      for (const auto &r : j.at("ranked"))
        n.ranking.push_back(r.at("attr").get<std::string>());
    } catch (const nlohmann::json::exception &e) {
      throw InputError("scores line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (auto it = truth.find(n.vertex); it != truth.end())
      n.truth = it->second;
    nodes.push_back(std::move(n));
  }
  const auto rows = evaluate_rankings(nodes, ks);
  std::ostringstream csv;
  csv << std::setprecision(17) << "k,recall,ndcg,nodes,skipped\n";
  for (const auto &r : rows)
    csv << r.k << ',' << r.recall << ',' << r.ndcg << ',' << r.nodes << ','
        << r.skipped << '\n';
  if (out_path.empty()) {
    std::cout << csv.str();
    return 0;
  }
  open_out(out_path) << csv.str();
  RunManifest m;
  m.command = "eval-completion";
  m.inputs["scores"] = sha256_file(scores_path);
  m.inputs["truth"] = sha256_file(truth_path);
  write_manifest(m, out_path + ".manifest.json");
  return 0;
}

int cmd_eval_coverage(const std::string &patterns_path,
                      const std::string &library_path,
                      std::vector<std::size_t> ks,
                      const std::string &out_path) {
  SymbolTable attributes;
  std::vector<AStar> patterns;
  {
    auto in = open_in(patterns_path);
    patterns = read_patterns_jsonl(in, attributes);
  }
  RuleLibrary lib;
  {
    auto in = open_in(library_path);
    lib = load_rule_library(in);
  }
  const auto pairs = split_to_pairs(patterns);
  if (ks.empty())
    for (std::size_t k = 1; k <= pairs.size(); ++k)
      ks.push_back(k);
  std::ostringstream csv;
  csv << std::setprecision(17) << "k,coverage\n";
  for (const auto &[k, c] : coverage_curve(lib, pairs, attributes, ks))
    csv << k << ',' << c << '\n';
  if (out_path.empty()) {
    std::cout << csv.str();
    return 0;
  }
  open_out(out_path) << csv.str();
  RunManifest m;
  m.command = "eval-coverage";
  m.inputs["patterns"] = sha256_file(patterns_path);
  m.inputs["library"] = sha256_file(library_path);
  write_manifest(m, out_path + ".manifest.json");
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Mine attribute-star patterns from an attributed graph"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  MineArgs mine_args;
  std::string mine_out, mine_stats, mine_dump;
  auto *mine_cmd = app.add_subcommand("mine", "mine a-star patterns");
  mine_args.add_to(mine_cmd);
  mine_cmd->add_option("--out", mine_out, "pattern file (JSON Lines)")
      ->required();
  mine_cmd->add_option("--stats", mine_stats,
                       "per-iteration CSV (default: <out>.stats.csv)");
  mine_cmd->add_option("--dump-db", mine_dump,
                       "final inverted database (JSON Lines)");

  MineArgs stats_args;
  std::string stats_out;
  auto *stats_cmd =
      app.add_subcommand("stats", "per-iteration mining report as CSV");
  stats_args.add_to(stats_cmd);
  stats_cmd->add_option("--out", stats_out, "CSV path (default: stdout)");

  GraphArgs score_graph;
  std::string score_patterns, score_targets, score_external, score_out;
  auto *score_cmd =
      app.add_subcommand("score", "score missing attribute values of nodes");
  score_graph.add_to(score_cmd);
  score_cmd->add_option("--patterns", score_patterns, "mined pattern file")
      ->required();
  score_cmd->add_option("--targets", score_targets,
                        "vertex labels to score, one per line")
      ->required();
  score_cmd->add_option("--external", score_external,
                        "JSON object: vertex -> scores in lexicographic "
                        "attribute order");
  score_cmd->add_option("--out", score_out, "output (JSON Lines)")->required();
  unsigned score_threads = std::max(1u, std::thread::hardware_concurrency());
  score_cmd->add_option("--threads", score_threads, "scoring workers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string comp_scores, comp_truth, comp_out;
  std::vector<std::size_t> comp_k{10, 20, 50};
  auto *comp_cmd = app.add_subcommand("eval-completion",
                                      "Recall@K and NDCG@K of scored nodes");
  comp_cmd->add_option("--scores", comp_scores, "output of score")->required();
  comp_cmd->add_option("--truth", comp_truth,
                       "true values, vertex<TAB>a1,a2,... per line")
      ->required();
  comp_cmd->add_option("--k", comp_k, "cut-offs")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  comp_cmd->add_option("--out", comp_out, "CSV path (default: stdout)");

  std::string cov_patterns, cov_library, cov_out;
  std::vector<std::size_t> cov_k;
  auto *cov_cmd = app.add_subcommand(
      "eval-coverage", "coverage of a valid-rule library by mined pairs");
  cov_cmd->add_option("--patterns", cov_patterns, "mined pattern file")
      ->required();
  cov_cmd->add_option("--library", cov_library,
                      "JSON array of {cause, derivative}")
      ->required();
  cov_cmd->add_option("--k", cov_k, "cut-offs (default: 1..number of pairs)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--out", cov_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*mine_cmd)
      return cmd_mine(mine_args, mine_out, mine_stats, mine_dump);
    if (*stats_cmd)
      return cmd_stats(stats_args, stats_out);
    if (*score_cmd)
      return cmd_score(score_graph, score_patterns, score_targets,
                       score_external, score_out, score_threads);
    if (*comp_cmd)
      return cmd_eval_completion(comp_scores, comp_truth, comp_k, comp_out);
    if (*cov_cmd)
      return cmd_eval_coverage(cov_patterns, cov_library, cov_k, cov_out);
  } catch (const InputError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvariantViolation &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return 0;
}
