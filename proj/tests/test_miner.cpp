#include <doctest.h>

#include <random>
#include <sstream>

#include "starmine/miner.hpp"
#include "support.hpp"

using namespace starmine;
using namespace starmine::testing;

namespace {

struct State {
  AttributedGraph g;
  MappingTable mt;
  InvertedDatabase db;
  Model model;

  explicit State(AttributedGraph graph)
      : g(std::move(graph)), mt(build_mapping_table(g, singleton_coresets(g))),
        db(InvertedDatabase::build(g, mt)), model(Model::build(g, mt, db)) {}

  LeafId leaf(std::initializer_list<const char *> names) const {
    std::vector<AttrId> ids;
    for (auto n : names)
      ids.push_back(*g.attributes().find(n));
    return *db.find_leafset(Leafset(std::move(ids)));
  }

  void merge(LeafId x, LeafId y) {
    auto rep = db.apply_merge(x, y);
    model.ct_l.refresh(db, rep.touched_cores());
  }
};

std::string patterns_text(const MiningResult &r, const SymbolTable &t) {
  std::ostringstream out;
  write_patterns_jsonl(r.patterns, t, out);
  return out.str();
}

std::string stats_text(const MiningResult &r, const SymbolTable &t) {
  std::ostringstream out;
  write_stats_csv(r.stats, t, out);
  return out.str();
}

} // namespace

TEST_CASE("gain terms") {
  CHECK(core_gain_term(4, 2) == doctest::Approx(6.0));
  CHECK(merge_gain_term(2, 2, 2) == doctest::Approx(2.0));
  CHECK(core_gain_term(4, 2) - merge_gain_term(2, 2, 2) == doctest::Approx(4.0));
  CHECK(merge_gain_term(5, 3, 0) == 0.0);
  // Extending an existing line of frequency z: the three lines before and
  // after, summed directly.
  auto direct = [](double x, double y, double xy, double z) {
    auto f = [](double n) { return n > 0 ? n * std::log2(n) : 0.0; };
    return (f(x) + f(y) + f(z)) - (f(x - xy) + f(y - xy) + f(z + xy));
  };
  for (int z = 1; z < 5; ++z)
    CHECK(merge_gain_term(4, 6, 3, z) == doctest::Approx(direct(4, 6, 3, z)));
}

TEST_CASE("unified term matches the three case forms on a small grid") {
  for (int x = 1; x <= 10; ++x)
    for (int y = 1; y <= 10; ++y)
      for (int xy = 1; xy <= std::min(x, y); ++xy) {
        const double u = merge_gain_term(x, y, xy);
        if (xy < x && xy < y)
          CHECK(std::abs(u - partly_merged_form(x, y, xy)) < 1e-12);
        else if (xy == x && xy == y)
          CHECK(std::abs(u - both_totally_merged_form(xy)) < 1e-12);
        else if (xy == x)
          CHECK(std::abs(u - one_totally_merged_form(y, xy)) < 1e-12);
        else
          CHECK(std::abs(u - one_totally_merged_form(x, xy)) < 1e-12);
      }
}

TEST_CASE("two lines totally merged at a single coreset") {
  // Core X at p1 and p2, each seeing one a and one b.
  State s(graph_from_text("p1\tq1\np1\tr1\np2\tq2\np2\tr2\n",
                          "p1\tX\np2\tX\nq1\ta\nq2\ta\nr1\tb\nr2\tb\n"));
  const auto a = s.leaf({"a"}), b = s.leaf({"b"});
  CHECK(data_gain(s.db, a, b) == doctest::Approx(4.0));
  CHECK(oracle_data_gain(s.db, a, b) == doctest::Approx(4.0));
}

TEST_CASE("gains on the running example") {
  State s(running_example());
  const auto a = s.leaf({"a"}), b = s.leaf({"b"}), c = s.leaf({"c"});
  CHECK(data_gain(s.db, b, c) == doctest::Approx(6.75489).epsilon(1e-5));
  CHECK(std::abs(data_gain(s.db, b, c) - oracle_data_gain(s.db, b, c)) < 1e-9);
  CHECK(std::abs(data_gain(s.db, a, b) - oracle_data_gain(s.db, a, b)) < 1e-9);
  CHECK(std::abs(data_gain(s.db, a, c) - oracle_data_gain(s.db, a, c)) < 1e-9);
  CHECK(data_gain(s.db, b, c) == data_gain(s.db, c, b));
  CHECK(net_gain(s.db, s.model, b, c) > data_gain(s.db, b, c));
  CHECK(net_gain(s.db, s.model, b, c) == doctest::Approx(9.16993).epsilon(1e-5));
  CHECK(net_gain(s.db, s.model, a, c) < 0);
  CHECK(data_gain(s.db, s.db.leafsets().get(b), s.db.leafsets().get(c)) ==
        data_gain(s.db, b, c));
}

TEST_CASE("pair without shared coreset has zero data gain and negative net") {
  State s(graph_from_text("p\tq\nr\ts\n", "p\tx\nq\ty\nr\tw\ns\tz\n"));
  const auto y = s.leaf({"y"}), z = s.leaf({"z"});
  CHECK(data_gain(s.db, y, z) == 0.0);
  CHECK(net_gain(s.db, s.model, y, z) <= 0.0);
}

TEST_CASE("data gain equals the from-scratch difference on random graphs") {
  std::mt19937_64 rng(101);
  for (int round = 0; round < 30; ++round) {
    State s(random_graph(rng, {}));
    auto live = s.db.live_leafsets();
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        const double g = data_gain(s.db, live[i], live[j]);
        CHECK(std::abs(g - oracle_data_gain(s.db, live[i], live[j])) < 1e-9);
        CHECK(g == data_gain(s.db, live[j], live[i]));
      }
  }
}

TEST_CASE("total length drops by exactly the net gain") {
  std::mt19937_64 rng(202);
  for (int round = 0; round < 30; ++round) {
    State s(random_graph(rng, {}));
    for (int step = 0; step < 5; ++step) {
      auto live = s.db.live_leafsets();
      if (live.size() < 2)
        break;
      std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
      auto x = live[pick(rng)], y = live[pick(rng)];
      if (x == y || merge_cores(s.db, x, y).empty())
        continue;
      const double before = total_length(s.model, s.db);
      const double net = net_gain(s.db, s.model, x, y);
      s.merge(x, y);
      CHECK(std::abs((before - total_length(s.model, s.db)) - net) < 1e-9);
      CHECK(std::abs(total_length(s.model, s.db) -
                     oracle_total_length(s.g, records_of(s.db, s.g))) < 1e-9);
    }
  }
}

TEST_CASE("candidate generation") {
  State one(graph_from_text("p\tq\n", "p\tx\nq\tx\n"));
  GainEvaluator e1(one.db, one.model);
  CHECK(generate_candidates(one.db, e1, GainMode::Net).candidates.empty());

  State s(running_example());
  GainEvaluator ev(s.db, s.model);
  auto gen = generate_candidates(s.db, ev, GainMode::Net);
  CHECK(gen.evaluated == 3);
  REQUIRE(gen.candidates.size() == 1);
  auto [x, y] = canonical_pair(s.db.leafsets(), s.leaf({"b"}), s.leaf({"c"}));
  CHECK(gen.candidates[0].x == x);
  CHECK(gen.candidates[0].y == y);
  CHECK(gen.candidates[0].gain > 0);
}

TEST_CASE("candidate generation equals exhaustive filtering") {
  std::mt19937_64 rng(303);
  for (int round = 0; round < 30; ++round) {
    State s(random_graph(rng, {}));
    GainEvaluator ev(s.db, s.model);
    for (auto mode : {GainMode::Net, GainMode::DataOnly}) {
      auto gen = generate_candidates(s.db, ev, mode);
      std::vector<Candidate> want;
      auto live = s.db.live_leafsets();
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = 0; j < live.size(); ++j) {
          if (!s.db.leafsets().less(live[i], live[j]))
            continue;
          const double g = mode == GainMode::Net
                               ? net_gain(s.db, s.model, live[i], live[j])
                               : data_gain(s.db, live[i], live[j]);
          if (g > 0)
            want.push_back({live[i], live[j], g, 0});
        }
      std::sort(want.begin(), want.end(), [](const Candidate &a, const Candidate &b) {
        return a.gain > b.gain;
      });
      REQUIRE(gen.candidates.size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(gen.candidates[i].gain == doctest::Approx(want[i].gain).epsilon(1e-12));
        if (i > 0)
          CHECK(candidate_before(s.db.leafsets(), gen.candidates[i - 1],
                                 gen.candidates[i]));
      }
      auto par = generate_candidates(s.db, ev, mode, 4);
      REQUIRE(par.candidates.size() == gen.candidates.size());
      for (std::size_t i = 0; i < par.candidates.size(); ++i) {
        CHECK(par.candidates[i].x == gen.candidates[i].x);
        CHECK(par.candidates[i].y == gen.candidates[i].y);
        CHECK(par.candidates[i].gain == gen.candidates[i].gain);
      }
    }
  }
}

TEST_CASE("candidate store pops in order and skips stale entries") {
  State s(running_example());
  const auto a = s.leaf({"a"}), b = s.leaf({"b"}), c = s.leaf({"c"});
  CandidateStore store(s.db.leafsets());
  store.upsert(a, b, 1.0);
  store.upsert(c, b, 3.0);
  store.upsert(a, c, 3.0);
  store.upsert(a, b, 5.0);
  CHECK(store.size() == 3);
  CHECK(*store.gain(b, a) == 5.0);
  auto first = store.pop();
  REQUIRE(first);
  CHECK(first->gain == 5.0);
  // Equal gains: (a, c) precedes (b, c) because {a} < {b}.
  auto second = store.pop();
  auto cp = canonical_pair(s.db.leafsets(), a, c);
  CHECK(second->x == cp.first);
  CHECK(second->y == cp.second);
  CHECK(store.erase(b, c));
  CHECK_FALSE(store.pop());
  CHECK(store.stale_discarded() >= 1);
}

TEST_CASE("related dict stays symmetric") {
  RelatedDict r;
  r.add(1, 2);
  r.add(1, 3);
  r.add(2, 3);
  CHECK(r.symmetric());
  auto gone = r.remove_all(1);
  CHECK(gone == std::vector<LeafId>{2, 3});
  CHECK(r.related(2) == std::set<LeafId>{3});
  r.remove(3, 2);
  CHECK(r.empty());
}

TEST_CASE("incremental update equals full regeneration") {
  std::mt19937_64 rng(404);
  for (int round = 0; round < 40; ++round) {
    State s(random_graph(rng, {}));
    GainEvaluator ev(s.db, s.model);
    CandidateStore store(s.db.leafsets());
    RelatedDict rdict;
    for (const auto &c : generate_candidates(s.db, ev, GainMode::Net).candidates) {
      store.upsert(c.x, c.y, c.gain);
      rdict.add(c.x, c.y);
    }
    while (auto best = store.pop()) {
      const auto cores = merge_cores(s.db, best->x, best->y);
      const auto before = colocated_pairs(s.db, cores);
      auto rep = s.db.apply_merge(best->x, best->y);
      s.model.ct_l.refresh(s.db, rep.touched_cores());
      ev.refresh(rep.touched_cores());
      update_after_merge(store, rdict, rep, s.db, ev, GainMode::Net, before);

      const auto fresh = generate_candidates(s.db, ev, GainMode::Net).candidates;
      const auto kept = store.snapshot();
      REQUIRE(kept.size() == fresh.size());
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        CHECK(kept[i].x == fresh[i].x);
        CHECK(kept[i].y == fresh[i].y);
        CHECK(kept[i].gain == fresh[i].gain);
        CHECK(rdict.related(fresh[i].x).count(fresh[i].y));
      }
      CHECK(rdict.symmetric());
      // Pairs outside rdict never carry a positive gain.
      auto live = s.db.live_leafsets();
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = i + 1; j < live.size(); ++j)
          if (!rdict.related(live[i]).count(live[j]))
            CHECK(ev.ordering_gain(live[i], live[j], GainMode::Net) <= 0);
      for (auto l : rep.l_total)
        CHECK(rdict.related(l).empty());
    }
  }
}

TEST_CASE("after the first running-example merge no candidate pairs {c}") {
  State s(running_example());
  GainEvaluator ev(s.db, s.model);
  CandidateStore store(s.db.leafsets());
  RelatedDict rdict;
  for (const auto &c : generate_candidates(s.db, ev, GainMode::DataOnly).candidates) {
    store.upsert(c.x, c.y, c.gain);
    rdict.add(c.x, c.y);
  }
  const auto b = s.leaf({"b"}), c = s.leaf({"c"});
  const auto before = colocated_pairs(s.db, merge_cores(s.db, b, c));
  auto rep = s.db.apply_merge(b, c);
  s.model.ct_l.refresh(s.db, rep.touched_cores());
  ev.refresh(rep.touched_cores());
  update_after_merge(store, rdict, rep, s.db, ev, GainMode::DataOnly, before);
  for (const auto &cand : store.snapshot())
    CHECK((cand.x != c && cand.y != c));
  CHECK(rdict.related(c).empty());
}

TEST_CASE("mining the running example") {
  auto g = running_example();
  for (auto algo : {Algorithm::Basic, Algorithm::Partial}) {
    MinerConfig cfg;
    cfg.algorithm = algo;
    auto r = mine(g, cfg);
    REQUIRE(r.stats.iterations.size() >= 2);
    const auto &first = r.stats.iterations[1];
    REQUIRE(first.accepted);
    auto b = Leafset{*g.attributes().find("b")};
    auto c = Leafset{*g.attributes().find("c")};
    CHECK(((first.accepted->first == b && first.accepted->second == c) ||
           (first.accepted->first == c && first.accepted->second == b)));
    r.db.check_invariants();
  }
  CHECK(patterns_text(mine_basic(g), g.attributes()) ==
        patterns_text(mine_partial(g), g.attributes()));
}

TEST_CASE("unique adjacencies give no merges") {
  auto g = graph_from_text("p\tq\n", "p\tx\nq\ty\n");
  auto r = mine_partial(g);
  CHECK(r.stats.merges == 0);
  CHECK(r.stats.iterations.size() == 1);
  CHECK(r.patterns.size() == 2);
}

TEST_CASE("basic and partial agree on random graphs") {
  std::mt19937_64 rng(505);
  for (int round = 0; round < 40; ++round) {
    auto g = random_graph(rng, {});
    for (auto gain : {GainMode::Net, GainMode::DataOnly}) {
      MinerConfig cfg;
      cfg.gain = gain;
      auto basic = mine_basic(g, cfg);
      auto partial = mine_partial(g, cfg);
      CHECK(patterns_text(basic, g.attributes()) ==
            patterns_text(partial, g.attributes()));
      REQUIRE(basic.stats.iterations.size() == partial.stats.iterations.size());
      for (std::size_t i = 1; i < basic.stats.iterations.size(); ++i) {
        CHECK(basic.stats.iterations[i].accepted ==
              partial.stats.iterations[i].accepted);
        CHECK(basic.stats.iterations[i].net_gain_bits ==
              partial.stats.iterations[i].net_gain_bits);
      }
    }
  }
}

TEST_CASE("telescoping total length") {
  std::mt19937_64 rng(606);
  for (int round = 0; round < 30; ++round) {
    auto g = random_graph(rng, {});
    double initial = 0, last = 0, sum = 0;
    bool monotone = true;
    MinerConfig cfg;
    cfg.hooks.before_merge = [&](const InvertedDatabase &db, const Model &m,
                                 LeafId, LeafId) {
      last = total_length(m, db);
    };
    cfg.hooks.after_merge = [&](const InvertedDatabase &db, const Model &m,
                                const MergeReport &, const IterationStats &s) {
      const double now = total_length(m, db);
      monotone = monotone && now < last &&
                 std::abs((last - now) - s.net_gain_bits) < 1e-9;
      sum += s.net_gain_bits;
    };
    auto r = mine_partial(g, cfg);
    initial = r.stats.iterations.front().total_bits;
    CHECK(monotone);
    CHECK(std::abs(total_length(r.model, r.db) - (initial - sum)) < 1e-9);
  }
}

TEST_CASE("update ratio") {
  std::mt19937_64 rng(707);
  for (int round = 0; round < 10; ++round) {
    auto g = random_graph(rng, {.max_vertices = 30, .min_vertices = 20,
                                .max_values = 14, .min_values = 12});
    auto r = mine_partial(g);
    for (const auto &it : r.stats.iterations) {
      CHECK(it.update_ratio >= 0.0);
      CHECK(it.update_ratio <= 1.0);
    }
    CHECK(r.stats.iterations.front().update_ratio ==
          (r.stats.iterations.front().possible_pairs ? 1.0 : 0.0));
  }
}

TEST_CASE("pattern extraction and ranking") {
  auto g = running_example();
  State s(g);
  const auto a = *g.attributes().find("a");
  const auto core_a = *s.db.find_core(Coreset{a});
  const double before_b = s.model.ct_l.bits(core_a, s.leaf({"b"}));
  const double before_c = s.model.ct_l.bits(core_a, s.leaf({"c"}));
  s.merge(s.leaf({"b"}), s.leaf({"c"}));
  const double after = s.model.ct_l.bits(core_a, s.leaf({"b", "c"}));
  CHECK(after < before_b);
  CHECK(after < before_c);

  auto pats = extract_patterns(s.model, s.db);
  CHECK(pats.size() == s.db.record_count());
  auto sorted = pats;
  std::sort(sorted.begin(), sorted.end(), [](const AStar &x, const AStar &y) {
    return std::tie(x.code_bits, y.frequency, x.coreset, x.leafset) <
           std::tie(y.code_bits, x.frequency, y.coreset, y.leafset);
  });
  for (std::size_t i = 0; i < pats.size(); ++i) {
    CHECK(pats[i].rank == i + 1);
    CHECK(pats[i].coreset == sorted[i].coreset);
    CHECK(pats[i].leafset == sorted[i].leafset);
  }
}

TEST_CASE("deterministic record ranks by its coreset code alone") {
  State s(graph_from_text("p\tq\nr\ts\nr\tt\n",
                          "p\trare\nq\tx\nr\tcommon\ns\tx\nt\ty\n"
                          "s\tcommon\nt\tcommon\n"));
  auto pats = extract_patterns(s.model, s.db);
  const auto rare = *s.g.attributes().find("rare");
  bool seen = false;
  for (const auto &p : pats)
    if (p.coreset == Coreset{rare}) {
      seen = true;
      CHECK(p.code_bits == doctest::Approx(s.model.st.bits(rare)));
    }
  CHECK(seen);
}

TEST_CASE("pattern and stats files") {
  auto g = running_example();
  auto r = mine_partial(g);
  const auto text = patterns_text(r, g.attributes());
  CHECK(text.rfind(R"({"rank":1,"core":["a"],"leaves":[)", 0) == 0);
  std::istringstream in(text);
  SymbolTable t = g.attributes();
  auto back = read_patterns_jsonl(in, t);
  REQUIRE(back.size() == r.patterns.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].coreset == r.patterns[i].coreset);
    CHECK(back[i].leafset == r.patterns[i].leafset);
    CHECK(back[i].code_bits == r.patterns[i].code_bits);
    CHECK(back[i].frequency == r.patterns[i].frequency);
  }
  std::istringstream bad("{\"rank\":1}\n");
  CHECK_THROWS_AS(read_patterns_jsonl(bad, t), InputError);

  const auto csv = stats_text(r, g.attributes());
  std::istringstream lines(csv);
  std::string header, row0, row1;
  std::getline(lines, header);
  std::getline(lines, row0);
  std::getline(lines, row1);
  CHECK(header == "iteration,evaluated_pairs,possible_pairs,update_ratio,"
                  "accepted_x,accepted_y,net_gain_bits,total_bits");
  CHECK(row0.rfind("0,3,3,1,,,0,", 0) == 0);
  CHECK((row1.find(R"("b","c")") != std::string::npos ||
         row1.find(R"("c","b")") != std::string::npos));
}

TEST_CASE("multi-value coresets") {
  auto g = running_example();
  SymbolTable attrs = g.attributes();
  std::istringstream in("a\nb\nc\na,b\n");
  auto cores = load_coresets(in, attrs);
  auto r = mine(g, {}, cores);
  r.db.check_invariants();
  bool has_pair_core = false;
  for (const auto &p : r.patterns)
    has_pair_core = has_pair_core || p.coreset.size() == 2;
  CHECK(has_pair_core);
  MinerConfig basic;
  basic.algorithm = Algorithm::Basic;
  auto rb = mine(g, basic, cores);
  CHECK(patterns_text(r, g.attributes()) == patterns_text(rb, g.attributes()));
}

TEST_CASE("data-only gain mode terminates and keeps the cover") {
  std::mt19937_64 rng(808);
  for (int round = 0; round < 10; ++round) {
    auto g = random_graph(rng, {});
    MinerConfig cfg;
    cfg.gain = GainMode::DataOnly;
    auto r = mine_partial(g, cfg);
    auto init = InvertedDatabase::build(g, build_mapping_table(g, singleton_coresets(g)));
    CHECK(cover_violations(records_of(init, g), records_of(r.db, g)) == 0);
    for (std::size_t i = 1; i < r.stats.iterations.size(); ++i)
      CHECK(r.stats.iterations[i].data_gain_bits > 0);
  }
}
