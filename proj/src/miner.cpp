#include "starmine/miner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace starmine {

const char *to_string(Algorithm a) {
  return a == Algorithm::Basic ? "basic" : "partial";
}

const char *to_string(GainMode g) {
  return g == GainMode::Net ? "net" : "data-only";
}

double core_gain_term(std::uint64_t core_total, std::uint64_t xy) {
  return xlog2x(static_cast<double>(core_total)) -
         xlog2x(static_cast<double>(core_total - xy));
}

double merge_gain_term(std::uint64_t x, std::uint64_t y, std::uint64_t xy,
                       std::uint64_t existing) {
  const auto d = [](std::uint64_t n) { return xlog2x(static_cast<double>(n)); };
  return (d(x) + d(y) + d(existing)) -
         (d(x - xy) + d(y - xy) + d(existing + xy));
}

namespace {

// Row summary of a coreset after merging xy positions of x and y into a line
// that held `z` positions.
CoreRowSummary after_merge_summary(CoreRowSummary s, std::uint64_t x,
                                   std::uint64_t y, std::uint64_t xy,
                                   std::uint64_t z, double bits_x,
                                   double bits_y, double bits_merged) {
  const auto lg = [](std::uint64_t n) {
    return std::log2(static_cast<double>(n));
  };
  const auto shrink = [&](std::uint64_t f, double bits) {
    if (f == xy) {
      --s.rows;
      s.sum_log_freq -= lg(f);
      s.leaf_bits -= bits;
    } else {
      s.sum_log_freq += lg(f - xy) - lg(f);
    }
  };
  shrink(x, bits_x);
  shrink(y, bits_y);
  if (z == 0) {
    ++s.rows;
    s.sum_log_freq += lg(xy);
    s.leaf_bits += bits_merged;
  } else {
    s.sum_log_freq += lg(z + xy) - lg(z);
  }
  return s;
}

// Shared kernel of the cached and uncached gain paths, so that both produce
// bit-identical results for the same database state.
template <class SummaryOf>
PairGain pair_gain(const InvertedDatabase &db, const Model *model, LeafId x,
                   LeafId y, SummaryOf &&summary_of) {
  PairGain g;
  if (x == y)
    return g;
  const auto &cx = db.cores_of(x);
  const auto &cy = db.cores_of(y);
  std::optional<Leafset> merged;
  std::optional<LeafId> merged_id;
  auto ix = cx.begin();
  auto iy = cy.begin();
  while (ix != cx.end() && iy != cy.end()) {
    if (*ix < *iy) {
      ++ix;
      continue;
    }
    if (*iy < *ix) {
      ++iy;
      continue;
    }
    const CoreId e = *ix;
    ++ix;
    ++iy;
    const auto &px = *db.positions(e, x);
    const auto &py = *db.positions(e, y);
    const std::uint64_t xy = intersection_size(px, py);
    if (xy == 0)
      continue;
    if (!merged) {
      merged = db.leafsets().get(x).united(db.leafsets().get(y));
      merged_id = db.find_leafset(*merged);
    }
    std::uint64_t z = 0;
    if (merged_id) {
      if (*merged_id == x || *merged_id == y)
        throw InvariantViolation("nested leafsets share a position");
      if (const auto *pz = db.positions(e, *merged_id))
        z = pz->size();
    }
    const std::uint64_t c = db.core_total(e);
    g.data += core_gain_term(c, xy) - merge_gain_term(px.size(), py.size(), xy, z);
    if (model) {
      const CoreRowSummary &before = summary_of(e);
      const auto &st = model->st;
      const CoreRowSummary after = after_merge_summary(
          before, px.size(), py.size(), xy, z,
          st.bits(db.leafsets().get(x).values()),
          st.bits(db.leafsets().get(y).values()), st.bits(merged->values()));
      const double code_core = model->ct_c.bits(e);
      g.model_delta += leaf_rows_cost(after, c - xy, code_core) -
                       leaf_rows_cost(before, c, code_core);
    }
  }
  return g;
}

PairGain uncached_gain(const InvertedDatabase &db, const Model *model,
                       LeafId x, LeafId y) {
  std::map<CoreId, CoreRowSummary> cache;
  return pair_gain(db, model, x, y, [&](CoreId e) -> const CoreRowSummary & {
    auto it = cache.find(e);
    if (it == cache.end())
      it = cache.emplace(e, summarize_core(db, model->st, e)).first;
    return it->second;
  });
}

} // namespace

GainEvaluator::GainEvaluator(const InvertedDatabase &db, const Model &model)
    : db_(&db), model_(&model) {
  summaries_.reserve(db.core_count());
  for (CoreId c = 0; c < db.core_count(); ++c)
    summaries_.push_back(summarize_core(db, model.st, c));
}

void GainEvaluator::refresh(std::span<const CoreId> cores) {
  for (auto c : cores)
    summaries_[c] = summarize_core(*db_, model_->st, c);
}

PairGain GainEvaluator::evaluate(LeafId x, LeafId y) const {
  return pair_gain(*db_, model_, x, y,
                   [&](CoreId e) -> const CoreRowSummary & {
                     return summaries_[e];
                   });
}

double GainEvaluator::ordering_gain(LeafId x, LeafId y, GainMode mode) const {
  const auto g = evaluate(x, y);
  return mode == GainMode::Net ? g.net() : g.data;
}

double data_gain(const InvertedDatabase &db, LeafId x, LeafId y) {
  return uncached_gain(db, nullptr, x, y).data;
}

double data_gain(const InvertedDatabase &db, const Leafset &x,
                 const Leafset &y) {
  auto lx = db.find_leafset(x);
  auto ly = db.find_leafset(y);
  if (!lx || !ly)
    return 0.0;
  return data_gain(db, *lx, *ly);
}

double net_gain(const InvertedDatabase &db, const Model &model, LeafId x,
                LeafId y) {
  return uncached_gain(db, &model, x, y).net();
}

double net_gain(const InvertedDatabase &db, const Model &model,
                const Leafset &x, const Leafset &y) {
  auto lx = db.find_leafset(x);
  auto ly = db.find_leafset(y);
  if (!lx || !ly)
    return 0.0;
  return net_gain(db, model, *lx, *ly);
}

bool candidate_before(const LeafsetTable &t, const Candidate &a,
                      const Candidate &b) {
  if (a.gain != b.gain)
    return a.gain > b.gain;
  if (a.x != b.x)
    return t.less(a.x, b.x);
  return t.less(a.y, b.y);
}

std::pair<LeafId, LeafId> canonical_pair(const LeafsetTable &t, LeafId x,
                                         LeafId y) {
  return t.less(y, x) ? std::pair{y, x} : std::pair{x, y};
}

CandidateStore::CandidateStore(const LeafsetTable &t)
    : table_(&t), heap_(Later{&t}) {}

void CandidateStore::upsert(LeafId x, LeafId y, double gain) {
  auto key = canonical_pair(*table_, x, y);
  auto stamp = next_stamp_++;
  live_[key] = {gain, stamp};
  heap_.push(Candidate{key.first, key.second, gain, stamp});
}

bool CandidateStore::erase(LeafId x, LeafId y) {
  return live_.erase(canonical_pair(*table_, x, y)) > 0;
}

std::optional<Candidate> CandidateStore::pop() {
  while (!heap_.empty()) {
    Candidate top = heap_.top();
    heap_.pop();
    auto it = live_.find({top.x, top.y});
    if (it == live_.end() || it->second.second != top.stamp) {
      ++stale_discarded_;
      continue;
    }
    live_.erase(it);
    return top;
  }
  return std::nullopt;
}

std::optional<double> CandidateStore::gain(LeafId x, LeafId y) const {
  auto it = live_.find(canonical_pair(*table_, x, y));
  if (it == live_.end())
    return std::nullopt;
  return it->second.first;
}

std::vector<Candidate> CandidateStore::snapshot() const {
  std::vector<Candidate> out;
  out.reserve(live_.size());
  for (const auto &[k, v] : live_)
    out.push_back(Candidate{k.first, k.second, v.first, v.second});
  std::sort(out.begin(), out.end(),
            [&](const Candidate &a, const Candidate &b) {
              return candidate_before(*table_, a, b);
            });
  return out;
}

void RelatedDict::add(LeafId a, LeafId b) {
  map_[a].insert(b);
  map_[b].insert(a);
}

void RelatedDict::remove(LeafId a, LeafId b) {
  for (auto [k, v] : {std::pair{a, b}, std::pair{b, a}}) {
    auto it = map_.find(k);
    if (it == map_.end())
      continue;
    it->second.erase(v);
    if (it->second.empty())
      map_.erase(it);
  }
}

std::vector<LeafId> RelatedDict::remove_all(LeafId l) {
  auto it = map_.find(l);
  if (it == map_.end())
    return {};
  std::vector<LeafId> partners(it->second.begin(), it->second.end());
  map_.erase(it);
  for (auto p : partners) {
    auto jt = map_.find(p);
    if (jt == map_.end())
      continue;
    jt->second.erase(l);
    if (jt->second.empty())
      map_.erase(jt);
  }
  return partners;
}

const std::set<LeafId> &RelatedDict::related(LeafId l) const {
  static const std::set<LeafId> none;
  auto it = map_.find(l);
  return it == map_.end() ? none : it->second;
}

bool RelatedDict::symmetric() const {
  for (const auto &[k, vs] : map_)
    for (auto v : vs)
      if (!related(v).count(k))
        return false;
  return true;
}

GenerateResult generate_candidates(const InvertedDatabase &db,
                                   const GainEvaluator &eval, GainMode mode,
                                   unsigned threads) {
  const auto live = db.live_leafsets();
  const std::size_t n = live.size();
  GenerateResult out;
  out.evaluated = n < 2 ? 0 : n * (n - 1) / 2;
  if (n < 2)
    return out;

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::vector<Candidate>> parts(threads);
  auto work = [&](unsigned t) {
    // Strided rows balance the triangular workload.
    for (std::size_t i = t; i < n; i += threads)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double g = eval.ordering_gain(live[i], live[j], mode);
        if (g > 0)
          parts[t].push_back(Candidate{live[i], live[j], g, 0});
      }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, t);
  }
  for (auto &p : parts)
    out.candidates.insert(out.candidates.end(), p.begin(), p.end());
  const auto &t = db.leafsets();
  std::sort(out.candidates.begin(), out.candidates.end(),
            [&](const Candidate &a, const Candidate &b) {
              return candidate_before(t, a, b);
            });
  return out;
}

std::set<std::pair<LeafId, LeafId>>
colocated_pairs(const InvertedDatabase &db, std::span<const CoreId> cores) {
  std::set<std::pair<LeafId, LeafId>> out;
  std::map<VertexId, std::vector<LeafId>> at;
  for (auto e : cores) {
    at.clear();
    for (const auto &[l, pos] : db.records_at(e))
      for (auto p : pos)
        at[p].push_back(l);
    for (const auto &[p, ls] : at)
      for (std::size_t i = 0; i < ls.size(); ++i)
        for (std::size_t j = i + 1; j < ls.size(); ++j)
          out.emplace(std::min(ls[i], ls[j]), std::max(ls[i], ls[j]));
  }
  return out;
}

std::vector<CoreId> merge_cores(const InvertedDatabase &db, LeafId x,
                                LeafId y) {
  std::vector<CoreId> out;
  for (auto e : db.shared_cores(x, y))
    if (intersection_size(*db.positions(e, x), *db.positions(e, y)) > 0)
      out.push_back(e);
  return out;
}

UpdateResult
update_after_merge(CandidateStore &store, RelatedDict &rdict,
                   const MergeReport &report, const InvertedDatabase &db,
                   const GainEvaluator &eval, GainMode mode,
                   const std::set<std::pair<LeafId, LeafId>> &before,
                   const GainObserver &observe) {
  UpdateResult res;

  // (1) Remove leafsets that no longer have any record.
  for (auto l : report.l_total) {
    for (auto partner : rdict.remove_all(l)) {
      store.erase(l, partner);
      ++res.removed_total;
    }
  }
  // The merged pair itself is stale whatever its new gain.
  store.erase(report.x, report.y);
  rdict.remove(report.x, report.y);

  if (report.noop())
    return res;

  // Every pair whose gain can have moved shares a position at a touched
  // coreset, either before or after the merge. Gains of all other pairs
  // depend only on untouched coresets.
  const auto touched = report.touched_cores();
  auto affected = colocated_pairs(db, touched);
  affected.insert(before.begin(), before.end());

  auto reevaluate = [&](LeafId p, LeafId q) {
    // Same argument order as full generation, so gains are bit-identical.
    const auto [a, b] = canonical_pair(db.leafsets(), p, q);
    ++res.evaluated;
    const auto pg = eval.evaluate(a, b);
    if (observe)
      observe(a, b, pg);
    const double g = mode == GainMode::Net ? pg.net() : pg.data;
    if (g > 0) {
      const bool existed = store.gain(a, b).has_value();
      store.upsert(a, b, g);
      rdict.add(a, b);
      existed ? ++res.updated : ++res.added;
    } else {
      store.erase(a, b);
      rdict.remove(a, b);
    }
  };

  // (2) Pairs with the merged leafset, then (3) every other influenced pair.
  const LeafId m = report.merged;
  for (const auto &[a, b] : affected)
    if ((a == m || b == m) && db.is_live(a) && db.is_live(b))
      reevaluate(a, b);
  for (const auto &[a, b] : affected)
    if (a != m && b != m && db.is_live(a) && db.is_live(b))
      reevaluate(a, b);
  return res;
}

void rank_patterns(std::vector<AStar> &patterns) {
  std::sort(patterns.begin(), patterns.end(),
            [](const AStar &a, const AStar &b) {
              if (a.code_bits != b.code_bits)
                return a.code_bits < b.code_bits;
              if (a.frequency != b.frequency)
                return a.frequency > b.frequency;
              if (a.coreset != b.coreset)
                return a.coreset < b.coreset;
              return a.leafset < b.leafset;
            });
  for (std::size_t i = 0; i < patterns.size(); ++i)
    patterns[i].rank = i + 1;
}

std::vector<AStar> extract_patterns(const Model &model,
                                    const InvertedDatabase &db) {
  std::vector<AStar> out;
  out.reserve(db.record_count());
  for (CoreId c = 0; c < db.core_count(); ++c)
    for (const auto &[l, pos] : db.records_at(c))
      out.push_back(AStar{db.coreset(c), db.leafsets().get(l),
                          model.ct_c.bits(c) + model.ct_l.bits(c, l),
                          pos.size(), 0});
  rank_patterns(out);
  return out;
}

namespace {

std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

double ratio(std::size_t evaluated, std::size_t possible) {
  return possible == 0 ? 0.0
                       : static_cast<double>(evaluated) /
                             static_cast<double>(possible);
}

class MiningRun {
public:
  MiningRun(const AttributedGraph &g, const MinerConfig &config,
            std::span<const Coreset> coresets)
      : config_(config),
        mapping_(build_mapping_table(
            g, coresets.empty() ? std::span<const Coreset>(singletons_ =
                                                               singleton_coresets(g))
                                : coresets)),
        db_(InvertedDatabase::build(g, mapping_)),
        model_(Model::build(g, mapping_, db_)), eval_(db_, model_) {
    if (config_.hooks.on_gain)
      config_.threads = 1;
    if (mapping_.empty_count() > 0)
      stats_.warnings.push_back(std::to_string(mapping_.empty_count()) +
                                " coresets match no vertex");
    total_ = total_length(model_, db_);
  }

  MiningResult run() {
    if (config_.algorithm == Algorithm::Basic)
      run_basic();
    else
      run_partial();
    stats_.merges = stats_.iterations.empty() ? 0 : stats_.iterations.size() - 1;
    auto patterns = extract_patterns(model_, db_);
    return MiningResult{std::move(db_), std::move(model_), std::move(patterns),
                        std::move(stats_)};
  }

private:
  GenerateResult generate() {
    if (!config_.hooks.on_gain)
      return generate_candidates(db_, eval_, config_.gain, config_.threads);
    // Instrumented path: same enumeration, reporting every evaluation.
    GenerateResult out;
    const auto live = db_.live_leafsets();
    out.evaluated = pair_count(live.size());
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        const auto pg = eval_.evaluate(live[i], live[j]);
        config_.hooks.on_gain(db_, live[i], live[j], pg);
        const double g = config_.gain == GainMode::Net ? pg.net() : pg.data;
        if (g > 0)
          out.candidates.push_back(Candidate{live[i], live[j], g, 0});
      }
    const auto &t = db_.leafsets();
    std::sort(out.candidates.begin(), out.candidates.end(),
              [&](const Candidate &a, const Candidate &b) {
                return candidate_before(t, a, b);
              });
    return out;
  }

  void record_initial(std::size_t evaluated) {
    IterationStats s;
    s.iteration = 0;
    s.evaluated_pairs = evaluated;
    s.possible_pairs = pair_count(db_.live_leafset_count());
    s.update_ratio = ratio(s.evaluated_pairs, s.possible_pairs);
    s.total_bits = total_;
    stats_.iterations.push_back(s);
  }

  // Applies the merge of (x, y) and refreshes the code tables.
  MergeReport merge(LeafId x, LeafId y, IterationStats &s) {
    const auto pg = eval_.evaluate(x, y);
    if (config_.hooks.before_merge)
      config_.hooks.before_merge(db_, model_, x, y);
    auto report = db_.apply_merge(x, y);
    if (report.noop())
      throw InvariantViolation("accepted candidate has no co-occurrence");
    const auto touched = report.touched_cores();
    model_.ct_l.refresh(db_, touched);
    eval_.refresh(touched);
    total_ -= pg.net();
    s.iteration = stats_.iterations.size();
    s.accepted = {db_.leafsets().get(x), db_.leafsets().get(y)};
    s.data_gain_bits = pg.data;
    s.net_gain_bits = pg.net();
    s.total_bits = total_;
    return report;
  }

  void finish_iteration(const MergeReport &report, IterationStats &s) {
    s.possible_pairs = pair_count(db_.live_leafset_count());
    s.update_ratio = ratio(s.evaluated_pairs, s.possible_pairs);
    stats_.iterations.push_back(s);
    if (config_.hooks.after_merge)
      config_.hooks.after_merge(db_, model_, report, s);
  }

  void run_basic() {
    auto gen = generate();
    record_initial(gen.evaluated);
    while (!gen.candidates.empty() &&
           stats_.iterations.size() <= config_.max_iterations) {
      const auto best = gen.candidates.front();
      IterationStats s;
      auto report = merge(best.x, best.y, s);
      gen = generate();
      s.evaluated_pairs = gen.evaluated;
      finish_iteration(report, s);
    }
  }

  void run_partial() {
    CandidateStore store(db_.leafsets());
    RelatedDict rdict;
    {
      auto gen = generate();
      for (const auto &c : gen.candidates) {
        store.upsert(c.x, c.y, c.gain);
        rdict.add(c.x, c.y);
      }
      record_initial(gen.evaluated);
    }
    while (stats_.iterations.size() <= config_.max_iterations) {
      if (rdict.empty() && !store.empty())
        stats_.warnings.push_back("rdict emptied while candidates remain");
      auto best = store.pop();
      if (!best)
        break;
      const auto cores = merge_cores(db_, best->x, best->y);
      const auto before = colocated_pairs(db_, cores);
      IterationStats s;
      auto report = merge(best->x, best->y, s);
      GainObserver observe;
      if (config_.hooks.on_gain)
        observe = [&](LeafId a, LeafId b, const PairGain &pg) {
          config_.hooks.on_gain(db_, a, b, pg);
        };
      auto upd = update_after_merge(store, rdict, report, db_, eval_,
                                    config_.gain, before, observe);
      s.evaluated_pairs = upd.evaluated;
      finish_iteration(report, s);
    }
    stats_.stale_discarded = store.stale_discarded();
  }

  MinerConfig config_;
  std::vector<Coreset> singletons_;
  MappingTable mapping_;
  InvertedDatabase db_;
  Model model_;
  GainEvaluator eval_;
  MinerStats stats_;
  double total_ = 0;
};

} // namespace

MiningResult mine(const AttributedGraph &g, const MinerConfig &config,
                  std::span<const Coreset> coresets) {
  MiningRun run(g, config, coresets);
  return run.run();
}

MiningResult mine_basic(const AttributedGraph &g, MinerConfig config) {
  config.algorithm = Algorithm::Basic;
  return mine(g, config);
}

MiningResult mine_partial(const AttributedGraph &g, MinerConfig config) {
  config.algorithm = Algorithm::Partial;
  return mine(g, config);
}

void write_patterns_jsonl(std::span<const AStar> patterns,
                          const SymbolTable &attributes, std::ostream &out) {
  for (const auto &p : patterns) {
    nlohmann::ordered_json j;
    j["rank"] = p.rank;
    j["core"] = value_names(p.coreset.values(), attributes);
    j["leaves"] = value_names(p.leafset.values(), attributes);
    j["code_bits"] = p.code_bits;
    j["frequency"] = p.frequency;
    out << j.dump() << '\n';
  }
}

std::vector<AStar> read_patterns_jsonl(std::istream &in,
                                       SymbolTable &attributes) {
  std::vector<AStar> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::vector<AttrId> core, leaves;
      for (const auto &v : j.at("core"))
        core.push_back(attributes.intern(v.get<std::string>()));
      for (const auto &v : j.at("leaves"))
        leaves.push_back(attributes.intern(v.get<std::string>()));
      if (core.empty() || leaves.empty())
        throw InputError("empty core or leaves");
      out.push_back(AStar{Coreset(std::move(core)), Leafset(std::move(leaves)),
                          j.at("code_bits").get<double>(),
                          j.at("frequency").get<std::uint64_t>(),
                          j.at("rank").get<std::size_t>()});
    } catch (const nlohmann::json::exception &e) {
      throw InputError("patterns line " + std::to_string(line_no) + ": " +
                       e.what());
    } catch (const InputError &e) {
      throw InputError("patterns line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const AStar &a, const AStar &b) {
    return a.rank < b.rank;
  });
  return out;
}

namespace {

std::string csv_field(const Leafset &s, const SymbolTable &attributes) {
  std::string joined;
  for (const auto &name : value_names(s.values(), attributes)) {
    if (!joined.empty())
      joined += ',';
    joined += name;
  }
  std::string out = "\"";
  for (char ch : joined) {
    if (ch == '"')
      out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

} // namespace

void write_stats_csv(const MinerStats &stats, const SymbolTable &attributes,
                     std::ostream &out) {
  out << "iteration,evaluated_pairs,possible_pairs,update_ratio,accepted_x,"
         "accepted_y,net_gain_bits,total_bits\n";
  std::ostringstream num;
  num << std::setprecision(17);
  for (const auto &s : stats.iterations) {
    out << s.iteration << ',' << s.evaluated_pairs << ',' << s.possible_pairs
        << ',';
    num.str("");
    num << s.update_ratio;
    out << num.str() << ',';
    if (s.accepted)
      out << csv_field(s.accepted->first, attributes) << ','
          << csv_field(s.accepted->second, attributes);
    else
      out << ',';
    num.str("");
    num << s.net_gain_bits << ',' << s.total_bits;
    out << ',' << num.str() << '\n';
  }
}

} // namespace starmine
