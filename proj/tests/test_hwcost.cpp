#include <catch2/catch.hpp>

#include "nfaslim/generator.hpp"
#include "nfaslim/hwcost.hpp"
#include "nfaslim/pruning.hpp"
#include "helpers.hpp"

using namespace nfaslim;
using testutil::make_nfa;
using testutil::state;

TEST_CASE("empty automaton costs nothing") {
    ResourceEstimate est = estimate_resources(ScoredNfa{}, 8, paper2025_hw());
    CHECK(est.luts == 0);
    CHECK(est.registers == 0);
    CHECK(est.uram_blocks == 0);
    CHECK(est.min_latency_cycles == 0);
    CHECK(est.max_latency_cycles == 0);
}

TEST_CASE("wider fanout costs strictly more logic on a fixed graph") {
    GenConfig gen;
    gen.n_nodes = 2000;
    gen.avg_out_degree = 10.0;
    gen.max_fanout = 40;
    gen.seed = 4;
    ScoredNfa nfa = generate(gen);
    CostParams p = paper2025_hw();
    ResourceEstimate at375 = estimate_resources(nfa, 375, p);
    ResourceEstimate at700 = estimate_resources(nfa, 700, p);
    CHECK(at700.luts > at375.luts);
    CHECK(at700.registers > at375.registers);
    CHECK(at700.uram_blocks > at375.uram_blocks);
}

TEST_CASE("latency bounds are exactly linear in input length") {
    auto nfa = make_nfa({state("s", "a", true), state("t", "b", false, true)}, {{"s", "t", 0.5}});
    CostParams p = paper2025_hw();
    auto [min0, max0] = latency_bounds(nfa, 8, 0, p);
    CHECK(min0 == 0);
    CHECK(max0 == 0);
    auto [min1, max1] = latency_bounds(nfa, 8, 100, p);
    auto [min2, max2] = latency_bounds(nfa, 8, 200, p);
    CHECK(min2 == 2 * min1);
    CHECK(max2 == 2 * max1);
    CHECK(min1 <= max1);
}

TEST_CASE("fanout sweep trends: min latency never rises, max never falls") {
    GenConfig gen;
    gen.n_nodes = 500;
    gen.avg_out_degree = 4.0;
    gen.max_fanout = 8;
    gen.seed = 6;
    ScoredNfa nfa = generate(gen);
    CostParams p = paper2025_hw();
    std::vector<int> fanouts = {8, 16, 32, 64, 94, 187, 375, 700};
    auto rows = fanout_sweep(nfa, fanouts, p);
    REQUIRE(rows.size() == fanouts.size());
    int64_t prev_min = std::numeric_limits<int64_t>::max();
    int64_t prev_max = -1;
    int64_t prev_luts = -1;
    for (const auto& row : rows) {
        REQUIRE(row.estimate.has_value());
        CHECK(row.estimate->min_latency_cycles <= prev_min);
        CHECK(row.estimate->max_latency_cycles >= prev_max);
        CHECK(row.estimate->luts > prev_luts);
        prev_min = row.estimate->min_latency_cycles;
        prev_max = row.estimate->max_latency_cycles;
        prev_luts = row.estimate->luts;
    }
}

TEST_CASE("sweep rows match single estimates and empty sweeps are empty") {
    auto nfa = make_nfa({state("s", "a", true, true)}, {});
    CostParams p = paper2025_hw();
    auto rows = fanout_sweep(nfa, {16}, p);
    REQUIRE(rows.size() == 1);
    ResourceEstimate direct = estimate_resources(nfa, 16, p);
    CHECK(rows[0].estimate->luts == direct.luts);
    CHECK(rows[0].estimate->registers == direct.registers);
    CHECK(rows[0].estimate->uram_blocks == direct.uram_blocks);
    CHECK(fanout_sweep(nfa, {}, p).empty());
}

TEST_CASE("fanout below the graph requirement is a violation") {
    auto nfa = make_nfa({state("hub", "a", true), state("x", "b"), state("y", "c", false, true)},
                        {{"hub", "x", 0.1}, {"hub", "y", 0.2}, {"x", "y", 0.3}});
    CostParams p = paper2025_hw();
    CHECK_THROWS_AS(estimate_resources(nfa, 1, p), FanoutViolation);
    auto rows = fanout_sweep(nfa, {1, 8}, p);
    CHECK_FALSE(rows[0].estimate.has_value());
    CHECK(rows[0].error.find("fanout violation") != std::string::npos);
    CHECK(rows[1].estimate.has_value());
}

TEST_CASE("uram blocks halve when the record width halves") {
    GenConfig gen;
    gen.n_nodes = 3000;
    gen.avg_out_degree = 5.0;
    gen.max_fanout = 20;
    gen.seed = 8;
    ScoredNfa nfa = generate(gen);
    CostParams p = paper2025_hw();
    // Even fanouts only: 288 + 48*f_half == (288 + 48*fanout) / 2 needs
    // fanout - 6 divisible by 2.
    for (int fanout : {94, 186, 374, 700}) {
        int f_half = (fanout - 6) / 2;
        REQUIRE(config_record_bits(f_half) * 2 == config_record_bits(fanout));
        ResourceEstimate full = estimate_resources(nfa, fanout, p);
        ResourceEstimate half = estimate_resources(nfa, f_half, p);
        double expected = static_cast<double>(full.uram_blocks) / 2.0;
        CHECK(std::abs(static_cast<double>(half.uram_blocks) - expected) <= 1.0);
    }
}

TEST_CASE("pruned graphs never cost more at equal fanout") {
    Rng seeds(2025);
    for (int trial = 0; trial < 10; ++trial) {
        GenConfig gen;
        gen.n_nodes = 300 + static_cast<int>(seeds.next_below(300));
        gen.avg_out_degree = 4.0 + 4.0 * seeds.next_double();
        gen.max_fanout = 32;
        gen.seed = seeds.next_u64();
        ScoredNfa nfa = generate(gen);
        PruneConfig cfg;
        cfg.theta = 0.35;
        PruneOutcome out = prune(nfa, make_threshold_oracle(0.35), cfg, 1.0);
        CostParams p = paper2025_hw();
        ResourceEstimate before = estimate_resources(nfa, 32, p);
        ResourceEstimate after = estimate_resources(out.nfa, 32, p);
        CHECK(after.luts <= before.luts);
        CHECK(after.registers <= before.registers);
        CHECK(after.uram_blocks <= before.uram_blocks);
        CHECK(after.min_latency_cycles <= before.min_latency_cycles);
        CHECK(after.max_latency_cycles <= before.max_latency_cycles);
    }
}

TEST_CASE("resources grow with state count") {
    CostParams p = paper2025_hw();
    GenConfig gen;
    gen.avg_out_degree = 4.0;
    gen.max_fanout = 16;
    gen.seed = 12;
    gen.n_nodes = 200;
    ResourceEstimate small = estimate_resources(generate(gen), 16, p);
    gen.n_nodes = 400;
    ResourceEstimate large = estimate_resources(generate(gen), 16, p);
    CHECK(large.luts >= small.luts);
    CHECK(large.registers >= small.registers);
    CHECK(large.uram_blocks >= small.uram_blocks);
}

TEST_CASE("sweep csv layout") {
    auto nfa = make_nfa({state("s", "a", true, true)}, {});
    auto rows = fanout_sweep(nfa, {94, 187}, paper2025_hw());
    std::string csv = sweep_to_csv(rows);
    CHECK(csv.rfind("fanout,luts,registers,uram_blocks,min_latency,max_latency\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("negative parameters are rejected") {
    CostParams p = paper2025_hw();
    p.lut_per_state = -1.0;
    CHECK_THROWS_AS(estimate_resources(ScoredNfa{}, 8, p), std::invalid_argument);
    p = paper2025_hw();
    p.uram_bits_per_block = 0;
    CHECK_THROWS_AS(estimate_resources(ScoredNfa{}, 8, p), std::invalid_argument);
}
