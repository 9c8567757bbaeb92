#include <catch2/catch.hpp>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "nfaslim/anml.hpp"
#include "nfaslim/config_vector.hpp"
#include "nfaslim/csv.hpp"
#include "nfaslim/generator.hpp"
#include "helpers.hpp"

using namespace nfaslim;
using testutil::make_nfa;
using testutil::state;

namespace {

// Equality over what serialization must preserve: state ids/flags/symbols and
// the transition multiset.
void check_same_structure(const ScoredNfa& a, const ScoredNfa& b, bool compare_symbols = true) {
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(a.states[i].id == b.states[i].id);
        CHECK(a.states[i].start == b.states[i].start);
        CHECK(a.states[i].accept == b.states[i].accept);
        if (compare_symbols) CHECK(a.states[i].symbols == b.states[i].symbols);
    }
    auto key = [](const Transition& t) { return std::make_tuple(t.from, t.to, t.score); };
    std::vector<std::tuple<std::string, std::string, double>> ta, tb;
    for (const auto& t : a.transitions) ta.push_back(key(t));
    for (const auto& t : b.transitions) tb.push_back(key(t));
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    CHECK(ta == tb);
}

} // namespace

TEST_CASE("parse a single reporting start element") {
    const char* doc = R"(<?xml version="1.0"?>
<automata-network id="one">
  <state-transition-element id="ste_0" symbol-set="a" start-of-data="true">
    <report-on-match/>
  </state-transition-element>
</automata-network>)";
    ScoredNfa nfa = parse_anml(doc);
    CHECK(nfa.id == "one");
    REQUIRE(nfa.states.size() == 1);
    CHECK(nfa.states[0].id == "ste_0");
    CHECK(nfa.states[0].start);
    CHECK(nfa.states[0].accept);
    CHECK(nfa.transitions.empty());
    CHECK(validate(nfa).ok());
}

TEST_CASE("parse an activation with a score attribute") {
    const char* doc = R"(<automata-network id="two">
  <state-transition-element id="ste_0" symbol-set="a" start-of-data="true">
    <activate-on-match element="ste_1" score="0.83"/>
  </state-transition-element>
  <state-transition-element id="ste_1" symbol-set="b">
    <report-on-match/>
  </state-transition-element>
</automata-network>)";
    ScoredNfa nfa = parse_anml(doc);
    REQUIRE(nfa.transitions.size() == 1);
    CHECK(nfa.transitions[0].from == "ste_0");
    CHECK(nfa.transitions[0].to == "ste_1");
    CHECK(nfa.transitions[0].score == 0.83);
}

TEST_CASE("missing score attribute defaults to 1.0") {
    const char* doc = R"(<automata-network>
  <state-transition-element id="a" symbol-set="x" start-of-data="true">
    <activate-on-match element="a"/>
  </state-transition-element>
</automata-network>)";
    ScoredNfa nfa = parse_anml(doc);
    REQUIRE(nfa.transitions.size() == 1);
    CHECK(nfa.transitions[0].score == 1.0);
}

TEST_CASE("malformed documents report the offending line") {
    const char* doc = "<automata-network id=\"x\">\n"
                      "  <state-transition-element id=\"a\" symbol-set=\"a\">\n"
                      "  <oops\n";
    try {
        parse_anml(doc);
        FAIL("expected parse error");
    } catch (const AnmlParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("unknown activation target is a reference error") {
    const char* doc = R"(<automata-network id="x">
  <state-transition-element id="a" symbol-set="a" start-of-data="true">
    <activate-on-match element="ghost" score="0.5"/>
  </state-transition-element>
</automata-network>)";
    CHECK_THROWS_WITH(parse_anml(doc), Catch::Contains("ghost"));
}

TEST_CASE("forward references between elements are resolved") {
    const char* doc = R"(<automata-network id="x">
  <state-transition-element id="a" symbol-set="a" start-of-data="true">
    <activate-on-match element="b" score="0.25"/>
  </state-transition-element>
  <state-transition-element id="b" symbol-set="b">
    <report-on-match/>
  </state-transition-element>
</automata-network>)";
    ScoredNfa nfa = parse_anml(doc);
    CHECK(nfa.transitions.size() == 1);
    CHECK(validate(nfa).ok());
}

TEST_CASE("emit then parse is the identity on generated automata") {
    Rng seeds(11);
    for (int trial = 0; trial < 500; ++trial) {
        GenConfig cfg;
        cfg.n_nodes = 2 + static_cast<int>(seeds.next_below(40));
        cfg.avg_out_degree = 0.5 + 3.0 * seeds.next_double();
        cfg.max_fanout = 16;
        cfg.seed = seeds.next_u64();
        cfg.distribution = trial % 3 == 0   ? ScoreDistribution::uniform01
                           : trial % 3 == 1 ? ScoreDistribution::exponential
                                            : ScoreDistribution::bimodal;
        ScoredNfa nfa = generate(cfg);
        ScoredNfa back = parse_anml(emit_anml(nfa));
        check_same_structure(nfa, back);
        CHECK(back.id == nfa.id);
    }
}

TEST_CASE("emit then parse on a 1000-node generated file") {
    GenConfig cfg;
    cfg.n_nodes = 1000;
    cfg.avg_out_degree = 20.0;
    cfg.max_fanout = 64;
    cfg.seed = 99;
    ScoredNfa nfa = generate(cfg);
    ScoredNfa back = parse_anml(emit_anml(nfa));
    check_same_structure(nfa, back);
}

TEST_CASE("to_csv emits headers only for the empty automaton") {
    CsvPair pair = to_csv(ScoredNfa{});
    CHECK(pair.transitions == "from,to,symbol,score\n");
    CHECK(pair.nodes == "id,in_degree,out_degree,total_score,start,accept\n");
}

TEST_CASE("to_csv writes one row per transition with the destination symbol") {
    auto nfa = make_nfa({state("a", "x", true), state("b", "y", false, true)}, {{"a", "b", 0.4}});
    CsvPair pair = to_csv(nfa);
    CHECK(pair.transitions == "from,to,symbol,score\na,b,y,0.4\n");
    CHECK(pair.nodes == "id,in_degree,out_degree,total_score,start,accept\n"
                        "a,0,1,0.4,1,0\n"
                        "b,1,0,0.4,0,1\n");
}

TEST_CASE("to_csv node rows match node_stats on a complete digraph") {
    std::vector<State> states = {state("a", "x", true), state("b", "y"), state("c", "z", false, true)};
    std::vector<Transition> edges;
    for (const auto& u : states)
        for (const auto& v : states)
            if (u.id != v.id) edges.push_back({u.id, v.id, 0.5});
    auto nfa = make_nfa(states, edges);
    auto stats = node_stats(nfa);
    CsvPair pair = to_csv(nfa);
    std::vector<std::string> lines;
    std::istringstream in(pair.nodes);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        std::string expect = stats[i].id + "," + std::to_string(stats[i].in_degree) + "," +
                             std::to_string(stats[i].out_degree) + ",2,";
        CHECK(lines[i + 1].rfind(expect, 0) == 0);
    }
}

TEST_CASE("from_csv inverts to_csv on generated automata") {
    Rng seeds(12);
    for (int trial = 0; trial < 500; ++trial) {
        GenConfig cfg;
        cfg.n_nodes = 2 + static_cast<int>(seeds.next_below(40));
        cfg.avg_out_degree = 0.5 + 3.0 * seeds.next_double();
        cfg.max_fanout = 16;
        cfg.seed = seeds.next_u64();
        ScoredNfa nfa = generate(cfg);
        CsvPair pair = to_csv(nfa);
        ScoredNfa back = from_csv(pair.transitions, pair.nodes, nfa.id);
        // CSV carries ids, flags and scores exactly; symbol classes only
        // through incoming transitions.
        check_same_structure(nfa, back, /*compare_symbols=*/false);
        CHECK(validate(back).ok());
        // Re-emitting the recovered automaton reproduces the same tables.
        CsvPair again = to_csv(back);
        CHECK(again.transitions == pair.transitions);
        CHECK(again.nodes == pair.nodes);
    }
}

TEST_CASE("from_csv rejects malformed tables") {
    CHECK_THROWS_WITH(from_csv("a,b,c\n", "id,in_degree,out_degree,total_score,start,accept\n"),
                      Catch::Contains("bad header"));
    CHECK_THROWS_WITH(from_csv("from,to,symbol,score\n", "id,x\n"), Catch::Contains("bad header"));
    const char* nodes = "id,in_degree,out_degree,total_score,start,accept\na,0,1,0.5,1,0\nb,1,0,0.5,0,1\n";
    CHECK_THROWS_WITH(from_csv("from,to,symbol,score\na,b,y,zebra\n", nodes), Catch::Contains("non-numeric"));
    CHECK_THROWS_WITH(from_csv("from,to,symbol,score\na,ghost,y,0.5\n", nodes),
                      Catch::Contains("unknown destination"));
}

TEST_CASE("config vector layout arithmetic") {
    // Record size: 32 bitmap + 1 flags + 1 reserved + 2 count + 6 per slot.
    CHECK(config_record_bytes(0) == 36);
    CHECK(config_record_bytes(1) == 42);
    CHECK(config_record_bytes(8) == 84);
    CHECK(config_record_bits(700) == 8 * (36 + 6 * 700));

    auto nfa = make_nfa({state("a", "a", true, true)}, {});
    auto bytes = export_config_vectors(nfa, 0);
    CHECK(bytes.size() == 36);
    bytes = export_config_vectors(nfa, 1);
    CHECK(bytes.size() == 42);
}

TEST_CASE("config vector slots, padding and flags") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true), state("u", "c")},
                        {{"s", "t", 0.5}, {"s", "u", 0.25}, {"s", "t", 0.75}});
    auto bytes = export_config_vectors(nfa, 8);
    const std::size_t record = config_record_bytes(8);
    REQUIRE(bytes.size() == 3 * record);

    // state "s": flags bit0 only, fanout count 3, slots (1, 2, 1), then Q0.16
    // scores 0x8000, 0x4000, 0xC000 and zero padding.
    CHECK(bytes[32] == 1);
    CHECK(bytes[33] == 0);
    CHECK(bytes[34] == 3);
    CHECK(bytes[35] == 0);
    auto u32_at = [&](std::size_t off) {
        return static_cast<uint32_t>(bytes[off]) | (static_cast<uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<uint32_t>(bytes[off + 2]) << 16) | (static_cast<uint32_t>(bytes[off + 3]) << 24);
    };
    auto u16_at = [&](std::size_t off) {
        return static_cast<uint16_t>(static_cast<uint16_t>(bytes[off]) |
                                     (static_cast<uint16_t>(bytes[off + 1]) << 8));
    };
    CHECK(u32_at(36) == 1);
    CHECK(u32_at(40) == 2);
    CHECK(u32_at(44) == 1);
    for (std::size_t k = 3; k < 8; ++k) CHECK(u32_at(36 + 4 * k) == 0);
    const std::size_t scores_off = 36 + 32;
    CHECK(u16_at(scores_off) == 0x8000);
    CHECK(u16_at(scores_off + 2) == 0x4000);
    CHECK(u16_at(scores_off + 4) == 0xC000);
    for (std::size_t k = 3; k < 8; ++k) CHECK(u16_at(scores_off + 2 * k) == 0);

    // state "t": accept flag, no fanout
    CHECK(bytes[record + 32] == 2);
    CHECK(bytes[record + 34] == 0);
}

TEST_CASE("config vector export rejects fanout overflow naming the state") {
    auto nfa = make_nfa({state("hub", "a", true), state("x", "b"), state("y", "c")},
                        {{"hub", "x", 0.1}, {"hub", "y", 0.2}});
    CHECK_THROWS_WITH(export_config_vectors(nfa, 1), Catch::Contains("hub"));
}

TEST_CASE("config vector export is deterministic") {
    GenConfig cfg;
    cfg.n_nodes = 60;
    cfg.avg_out_degree = 3.0;
    cfg.max_fanout = 12;
    cfg.seed = 5;
    ScoredNfa nfa = generate(cfg);
    auto a = export_config_vectors(nfa, 12);
    auto b = export_config_vectors(generate(cfg), 12);
    CHECK(a == b);
}

TEST_CASE("q016 quantization") {
    CHECK(score_to_q016(0.0) == 0);
    CHECK(score_to_q016(0.5) == 0x8000);
    CHECK(score_to_q016(1.0) == 0xFFFF); // clamped to the largest code
    CHECK(score_to_q016(7.5) == 0xFFFF);
    CHECK(score_to_q016(0.25) == 0x4000);
}
