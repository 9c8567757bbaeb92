#include <catch2/catch.hpp>

#include <algorithm>
#include <filesystem>
#include <map>

#include "nfaslim/csv.hpp"
#include "nfaslim/execution.hpp"
#include "nfaslim/generator.hpp"
#include "nfaslim/pipeline.hpp"
#include "nfaslim/pruning.hpp"
#include "helpers.hpp"

using namespace nfaslim;
using testutil::make_nfa;
using testutil::state;
namespace fs = std::filesystem;

namespace {

std::map<std::pair<int, std::string>, double> match_map(const std::vector<MatchRecord>& ms) {
    std::map<std::pair<int, std::string>, double> m;
    for (const auto& r : ms) m[{r.end_offset, r.accept_state}] = r.min_cost;
    return m;
}

template <typename Fn>
void for_each_input(int k, int max_len, Fn&& fn) {
    std::function<void(std::string&, int)> rec = [&](std::string& buf, int remaining) {
        fn(buf);
        if (remaining == 0) return;
        for (int c = 0; c < k; ++c) {
            buf.push_back(static_cast<char>(c));
            rec(buf, remaining - 1);
            buf.pop_back();
        }
    };
    std::string buf;
    rec(buf, max_len);
}

// Cleanup may merge reporting states, so equality is judged per end offset:
// same matched offsets, same minimum accepting cost at each.
void check_semantics_preserved(const ScoredNfa& a, const ScoredNfa& b, int alphabet, int max_len) {
    Simulator sa(a), sb(b);
    for_each_input(alphabet, max_len, [&](const std::string& input) {
        auto ma = matches_by_offset(sa.run(input));
        auto mb = matches_by_offset(sb.run(input));
        REQUIRE(ma.size() == mb.size());
        for (const auto& [offset, m] : ma) {
            REQUIRE(mb.count(offset) == 1);
            CHECK(mb.at(offset).min_cost == m.min_cost);
        }
    });
}

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("nfaslim_prune_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("threshold_estimate counts strict exceedances") {
    auto nfa = make_nfa({state("a", "x", true), state("b", "y", false, true)},
                        {{"a", "b", 0.2}, {"a", "b", 0.5}, {"a", "b", 0.9}});
    EstimateReport r = threshold_estimate(nfa, 0.5);
    CHECK(r.estimated_kept_transitions == 1);
    CHECK(r.estimated_ratio == Approx(1.0 / 3.0));

    r = threshold_estimate(nfa, 0.1);
    CHECK(r.estimated_kept_transitions == 3);
    CHECK(r.estimated_ratio == 1.0);
}

TEST_CASE("threshold_estimate near the binomial expectation on uniform scores") {
    GenConfig cfg;
    cfg.n_nodes = 500;
    cfg.avg_out_degree = 20.0;
    cfg.max_fanout = 64;
    cfg.seed = 10;
    ScoredNfa nfa = generate(cfg); // ~10000 uniform scores
    EstimateReport r = threshold_estimate(nfa, 0.35);
    double kept_fraction = r.estimated_ratio;
    CHECK(kept_fraction >= 0.63);
    CHECK(kept_fraction <= 0.67);
}

TEST_CASE("remove_unreachable drops isolated and dead-end states") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true), state("iso", "c"),
                         state("dead", "d")},
                        {{"s", "t", 0.5}, {"s", "dead", 0.5}});
    CleanupStats stats;
    ScoredNfa out = remove_unreachable(nfa, &stats);
    REQUIRE(out.states.size() == 2);
    CHECK(out.states[0].id == "s");
    CHECK(out.states[1].id == "t");
    CHECK(out.transitions.size() == 1);
    CHECK(stats.removed_states == 2);
    CHECK(stats.removed_transitions == 1);
}

TEST_CASE("remove_unreachable is the identity on fully live automata") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true)}, {{"s", "t", 0.5}});
    ScoredNfa out = remove_unreachable(nfa);
    CHECK(out.states.size() == 2);
    CHECK(out.transitions.size() == 1);
}

TEST_CASE("remove_unreachable errors without a start and empties without accepts") {
    auto no_start = make_nfa({state("t", "b", false, true)}, {});
    CHECK_THROWS_WITH(remove_unreachable(no_start), Catch::Contains("no start state"));

    auto no_accept = make_nfa({state("s", "a", true), state("t", "b")}, {{"s", "t", 0.5}});
    CleanupStats stats;
    ScoredNfa out = remove_unreachable(no_accept, &stats);
    CHECK(out.states.empty());
    CHECK(out.transitions.empty());
    CHECK(stats.warned_no_accept);
}

TEST_CASE("remove_unreachable preserves the language on random automata") {
    Rng rng(991);
    for (int trial = 0; trial < 50; ++trial) {
        ScoredNfa nfa = testutil::random_nfa(rng, 10, 4);
        bool any_accept = false;
        for (const auto& s : nfa.states) any_accept |= s.accept;
        if (!any_accept) nfa.states[0].accept = true;
        ScoredNfa cleaned = remove_unreachable(nfa);
        check_semantics_preserved(nfa, cleaned, 4, 4);
    }
}

TEST_CASE("merge_duplicates collapses twin destinations") {
    // Two identical mid states feeding the same accept with the same score.
    auto nfa = make_nfa({state("s", "a", true), state("m1", "b"), state("m2", "b"),
                         state("acc", "c", false, true)},
                        {{"s", "m1", 0.5}, {"s", "m2", 0.5}, {"m1", "acc", 0.7}, {"m2", "acc", 0.7}});
    CleanupStats stats;
    ScoredNfa out = merge_duplicates(nfa, &stats);
    CHECK(out.states.size() == 3);
    // the duplicate parallel edge s->m1 collapses too
    CHECK(out.transitions.size() == 2);
    CHECK(stats.removed_states == 1);
    check_semantics_preserved(nfa, out, 4, 4);
}

TEST_CASE("merge_duplicates is a single-pass identity when nothing matches") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true)}, {{"s", "t", 0.5}});
    ScoredNfa out = merge_duplicates(nfa);
    CHECK(out.states.size() == 2);
    CHECK(out.transitions.size() == 1);
}

TEST_CASE("merge_duplicates cascades through fixpoint iterations") {
    // m1/m2 only become identical after their successors n1/n2 merge.
    auto nfa = make_nfa(
        {state("s", "a", true), state("m1", "b"), state("m2", "b"), state("n1", "c"), state("n2", "c"),
         state("acc", "d", false, true)},
        {{"s", "m1", 0.3}, {"s", "m2", 0.4}, {"m1", "n1", 0.5}, {"m2", "n2", 0.5},
         {"n1", "acc", 0.6}, {"n2", "acc", 0.6}});
    ScoredNfa out = merge_duplicates(nfa);
    CHECK(out.states.size() == 4); // n1/n2 merge, then m1/m2 merge
    check_semantics_preserved(nfa, out, 4, 5);
}

TEST_CASE("merge_duplicates handles self-loop twins") {
    auto nfa = make_nfa({state("s", "a", true), state("l1", "b"), state("l2", "b"),
                         state("acc", "c", false, true)},
                        {{"s", "l1", 0.5}, {"s", "l2", 0.5}, {"l1", "l1", 0.2}, {"l2", "l2", 0.2},
                         {"l1", "acc", 0.9}, {"l2", "acc", 0.9}});
    ScoredNfa out = merge_duplicates(nfa);
    CHECK(out.states.size() == 3);
    check_semantics_preserved(nfa, out, 4, 5);
}

TEST_CASE("merge_duplicates preserves language and costs with injected clones") {
    Rng rng(992);
    for (int trial = 0; trial < 40; ++trial) {
        ScoredNfa nfa = testutil::random_nfa(rng, 6, 4);
        // Clone up to two states: same symbols/flags/outgoing, fresh incoming.
        std::size_t base_states = nfa.states.size();
        for (int c = 0; c < 2 && base_states > 0; ++c) {
            std::size_t donor = rng.next_below(base_states);
            State clone = nfa.states[donor];
            clone.id = "clone" + std::to_string(c);
            nfa.states.push_back(clone);
            std::vector<Transition> extra;
            for (const auto& t : nfa.transitions)
                if (t.from == nfa.states[donor].id) extra.push_back({clone.id, t.to, t.score});
            for (const auto& t : extra) nfa.transitions.push_back(t);
            // incoming edge so the clone is live
            std::size_t src = rng.next_below(base_states);
            nfa.transitions.push_back({nfa.states[src].id, clone.id, 0.123456});
        }
        if (!validate(nfa).ok()) continue; // clone collided with an existing parallel edge
        ScoredNfa merged = merge_duplicates(nfa);
        CHECK(merged.states.size() <= nfa.states.size());
        check_semantics_preserved(nfa, merged, 4, 4);
    }
}

TEST_CASE("prune with a constant-1 model and no cleanup is the identity") {
    Rng rng(993);
    ScoredNfa nfa = testutil::random_nfa(rng, 8, 4);
    ForestModel keep_all;
    keep_all.degenerate = true;
    keep_all.constant_label = 1;
    PruneConfig cfg;
    cfg.enable_merge = false;
    cfg.enable_reachability = false;
    PruneOutcome out = prune(nfa, keep_all, cfg, 1.0);
    CHECK(out.nfa.states.size() == nfa.states.size());
    CHECK(out.nfa.transitions.size() == nfa.transitions.size());
    CHECK(out.report.prune_ratio == 0.0);
    CHECK(out.report.classifier_kept == nfa.transitions.size());
    CHECK(out.report.accept_states_preserved);
    CHECK(out.report.edge_coverage == Approx(1.0));
}

TEST_CASE("prune with a constant-0 model empties the automaton") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true)}, {{"s", "t", 0.5}});
    ForestModel drop_all;
    drop_all.degenerate = true;
    drop_all.constant_label = 0;
    PruneConfig cfg;
    PruneOutcome out = prune(nfa, drop_all, cfg, 1.0);
    CHECK(out.nfa.transitions.empty());
    CHECK(out.nfa.states.empty()); // reachability removes everything
    CHECK_FALSE(out.report.accept_states_preserved);
    CHECK(out.report.prune_ratio == 1.0);
    CHECK(out.report.edge_coverage == 0.0);
}

TEST_CASE("oracle pruning of a uniform 8K graph lands in the expected band") {
    GenConfig gen;
    gen.n_nodes = 8000;
    DensityPoint d = paper2025_density(8000);
    gen.avg_out_degree = d.avg_out_degree;
    gen.max_fanout = d.max_fanout;
    gen.seed = 81;
    ScoredNfa nfa = generate(gen);

    PruneConfig cfg;
    cfg.theta = 0.35;
    PruneOutcome out = prune(nfa, make_threshold_oracle(0.35), cfg, 1.0);
    CHECK(out.report.prune_ratio >= 0.30);
    CHECK(out.report.prune_ratio <= 0.40);
    CHECK(out.report.nodes_after <= out.report.nodes_before);
    CHECK(avg_transitions_per_node(out.nfa) < avg_transitions_per_node(nfa));
}

TEST_CASE("prune rejects a model whose mask differs from the config") {
    Rng rng(994);
    ScoredNfa nfa = testutil::random_nfa(rng, 6, 4);
    ForestModel oracle = make_threshold_oracle(0.5, FeatureMask::parse("score,degrees"));
    PruneConfig cfg; // score-only mask
    CHECK_THROWS_WITH(prune(nfa, oracle, cfg), Catch::Contains("mask"));
}

TEST_CASE("oracle prune ratio is monotone in theta") {
    GenConfig gen;
    gen.n_nodes = 400;
    gen.avg_out_degree = 6.0;
    gen.max_fanout = 24;
    gen.seed = 17;
    ScoredNfa nfa = generate(gen);
    PruneConfig cfg;
    cfg.enable_merge = false; // count monotonicity is a pre-cleanup claim
    cfg.enable_reachability = false;
    double prev = -1.0;
    for (double theta : {0.1, 0.25, 0.4, 0.55, 0.7, 0.85}) {
        cfg.theta = theta;
        PruneOutcome out = prune(nfa, make_threshold_oracle(theta), cfg, 1.0);
        CHECK(out.report.prune_ratio >= prev);
        prev = out.report.prune_ratio;
    }
}

TEST_CASE("pruning its own output changes nothing further") {
    GenConfig gen;
    gen.n_nodes = 300;
    gen.avg_out_degree = 5.0;
    gen.max_fanout = 20;
    gen.seed = 23;
    ScoredNfa nfa = generate(gen);
    PruneConfig cfg;
    cfg.theta = 0.4;
    ForestModel oracle = make_threshold_oracle(0.4);
    PruneOutcome first = prune(nfa, oracle, cfg, 1.0);
    PruneOutcome second = prune(first.nfa, oracle, cfg, 1.0);
    CHECK(second.nfa.states.size() == first.nfa.states.size());
    CHECK(second.nfa.transitions.size() == first.nfa.transitions.size());
    CHECK(emit_anml(second.nfa) == emit_anml(first.nfa));
}

TEST_CASE("avg transitions per node does not grow when nodes survive") {
    GenConfig gen;
    gen.n_nodes = 500;
    gen.avg_out_degree = 8.0;
    gen.max_fanout = 32;
    gen.seed = 29;
    ScoredNfa nfa = generate(gen);
    PruneConfig cfg;
    cfg.theta = 0.35;
    cfg.enable_merge = false;
    cfg.enable_reachability = false; // node count fixed; only edges drop
    PruneOutcome out = prune(nfa, make_threshold_oracle(0.35), cfg, 1.0);
    REQUIRE(out.report.nodes_after == out.report.nodes_before);
    CHECK(avg_transitions_per_node(out.nfa) <= avg_transitions_per_node(nfa));
}

TEST_CASE("run_pipeline on an empty folder succeeds with an empty summary") {
    fs::path in = temp_dir("empty_in");
    fs::path out = temp_dir("empty_out");
    PipelineConfig cfg;
    PipelineResult result = run_pipeline(in.string(), out.string(), cfg);
    CHECK(result.files.empty());
    CHECK(result.ok());
    CHECK(fs::exists(out / "summary.json"));
    CHECK(fs::exists(out / "summary.csv"));
    fs::remove_all(in);
    fs::remove_all(out);
}

TEST_CASE("run_pipeline isolates per-file failures") {
    fs::path in = temp_dir("mixed_in");
    fs::path out = temp_dir("mixed_out");
    GenConfig gen;
    gen.n_nodes = 60;
    gen.avg_out_degree = 4.0;
    gen.max_fanout = 16;
    gen.seed = 3;
    gen.name = "good";
    write_anml_file((in / "good.anml").string(), generate(gen));
    write_file((in / "broken.anml").string(), "<automata-network id=\"x\">\n  <garbage\n");

    PipelineConfig cfg;
    cfg.prune.theta = 0.35;
    PipelineResult result = run_pipeline(in.string(), out.string(), cfg);
    REQUIRE(result.files.size() == 2);
    CHECK_FALSE(result.ok());
    const FileReport* broken = &result.files[0];
    const FileReport* good = &result.files[1];
    if (broken->file != "broken.anml") std::swap(broken, good);
    CHECK(broken->file == "broken.anml");
    CHECK_FALSE(broken->error.empty());
    CHECK(good->error.empty());
    CHECK(fs::exists(out / "good.pruned.anml"));
    CHECK(fs::exists(out / "good.report.json"));
    CHECK(fs::exists(out / "broken.report.json")); // reports written even on failure
    CHECK(fs::exists(out / "summary.csv"));
    fs::remove_all(in);
    fs::remove_all(out);
}

TEST_CASE("run_pipeline consumes csv pairs and reruns deterministically") {
    fs::path in = temp_dir("csv_in");
    fs::path out1 = temp_dir("csv_out1");
    fs::path out2 = temp_dir("csv_out2");
    GenConfig gen;
    gen.n_nodes = 80;
    gen.avg_out_degree = 5.0;
    gen.max_fanout = 20;
    gen.seed = 11;
    ScoredNfa nfa = generate(gen);
    CsvPair pair = to_csv(nfa);
    write_file((in / "g80.transitions.csv").string(), pair.transitions);
    write_file((in / "g80.nodes.csv").string(), pair.nodes);

    PipelineConfig cfg;
    cfg.prune.theta = 0.35;
    PipelineResult r1 = run_pipeline(in.string(), out1.string(), cfg);
    PipelineResult r2 = run_pipeline(in.string(), out2.string(), cfg);
    REQUIRE(r1.files.size() == 1);
    CHECK(r1.ok());
    CHECK(r1.files[0].report.transitions_before == nfa.transitions.size());
    CHECK(read_file((out1 / "g80.pruned.anml").string()) == read_file((out2 / "g80.pruned.anml").string()));
    CHECK(read_file((out1 / "g80.model.json").string()) == read_file((out2 / "g80.model.json").string()));
    fs::remove_all(in);
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("oracle-only pipeline matches the raw threshold estimate") {
    fs::path in = temp_dir("oracle_in");
    fs::path out = temp_dir("oracle_out");
    GenConfig gen;
    gen.n_nodes = 120;
    gen.avg_out_degree = 6.0;
    gen.max_fanout = 24;
    gen.seed = 13;
    gen.name = "g";
    write_anml_file((in / "g.anml").string(), generate(gen));

    PipelineConfig cfg;
    cfg.prune.theta = 0.5;
    cfg.oracle_only = true;
    PipelineResult result = run_pipeline(in.string(), out.string(), cfg);
    REQUIRE(result.files.size() == 1);
    const FileReport& f = result.files[0];
    CHECK(f.report.classifier_kept == f.estimate.estimated_kept_transitions);
    CHECK(f.report.model_accuracy == 1.0);
    fs::remove_all(in);
    fs::remove_all(out);
}
