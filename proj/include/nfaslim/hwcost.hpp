#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nfaslim/config_vector.hpp"
#include "nfaslim/nfa.hpp"

namespace nfaslim {

/// Analytical overlay cost model. Logic scales with states and with the
/// interconnect slots each state carries (states x fanout); memory scales
/// with the config-vector record footprint; latency bounds come from a
/// per-symbol cycle count where a wider fanout shortens activation
/// serialization but lengthens routing.
struct CostParams {
    double lut_per_state = 0.0;
    double lut_per_fanout_slot = 0.0;
    double reg_per_state = 0.0;
    double reg_per_fanout_slot = 0.0;
    int64_t uram_bits_per_block = 294912; // one 288-kilobit block
    int bits_per_transition = 48;         // one fanout slot: u32 destination + u16 score
    int base_cycles_per_symbol = 1;
    double serialization_penalty = 4.0;
    double routing_penalty_per_fanout = 0.25;
};

inline void validate_params(const CostParams& p) {
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!nonneg(p.lut_per_state) || !nonneg(p.lut_per_fanout_slot) || !nonneg(p.reg_per_state) ||
        !nonneg(p.reg_per_fanout_slot) || !nonneg(p.serialization_penalty) ||
        !nonneg(p.routing_penalty_per_fanout) || p.base_cycles_per_symbol < 0)
        throw std::invalid_argument("cost parameters must be non-negative");
    if (p.uram_bits_per_block <= 0) throw std::invalid_argument("uram_bits_per_block must be positive");
    if (p.bits_per_transition <= 0) throw std::invalid_argument("bits_per_transition must be positive");
}

/// Fitted default profile. The logic coefficients reproduce the bundled 64K
/// reference pair at the profile's two deployment fanouts (below); they are a
/// calibration of this model, not a synthesis claim.
inline CostParams paper2025_hw() {
    CostParams p;
    p.lut_per_state = 0.009875;
    p.lut_per_fanout_slot = 0.001035;
    p.reg_per_state = 0.00255;
    p.reg_per_fanout_slot = 0.000666;
    return p;
}

// Deployment fanouts the paper2025-hw anchors are fitted at: a dense corpus
// overlay and a right-sized overlay for pruned graphs.
inline constexpr int kPaper2025HwDenseFanout = 700;
inline constexpr int kPaper2025HwPrunedFanout = 44;

struct ResourceEstimate {
    int64_t luts = 0;
    int64_t registers = 0;
    int64_t uram_blocks = 0;
    // Per-symbol cycle bounds; latency_bounds() scales them by input length.
    int64_t min_latency_cycles = 0;
    int64_t max_latency_cycles = 0;
};

namespace detail {

inline int64_t record_bits_at(const CostParams& p, int max_fanout) {
    // 288 fixed bits (symbol bitmap + flags + count) plus one slot per fanout.
    return 288 + static_cast<int64_t>(p.bits_per_transition) * max_fanout;
}

inline int64_t per_symbol_min_cycles(const CostParams& p, uint32_t max_out_degree, int max_fanout) {
    int64_t serialization =
        max_out_degree == 0
            ? 0
            : static_cast<int64_t>(std::ceil(p.serialization_penalty * static_cast<double>(max_out_degree) /
                                             static_cast<double>(max_fanout)));
    return p.base_cycles_per_symbol + serialization;
}

inline int64_t per_symbol_max_cycles(const CostParams& p, uint32_t max_out_degree, int max_fanout) {
    int64_t routing = static_cast<int64_t>(std::ceil(p.routing_penalty_per_fanout * max_fanout));
    return per_symbol_min_cycles(p, max_out_degree, max_fanout) + routing;
}

} // namespace detail

inline ResourceEstimate estimate_resources(const ScoredNfa& nfa, int max_fanout, const CostParams& p) {
    validate_params(p);
    ValidationReport val = validate(nfa);
    if (!val.ok())
        throw std::invalid_argument("estimate_resources: invalid automaton: " + val.violations.front().message);

    ResourceEstimate est;
    if (nfa.states.empty()) return est;
    if (max_fanout < 1) throw std::invalid_argument("max_fanout must be >= 1");

    NfaIndex index(nfa);
    uint32_t max_out = index.max_out_degree();
    if (max_out > static_cast<uint32_t>(max_fanout)) {
        uint32_t worst = 0;
        for (uint32_t i = 0; i < index.out.size(); ++i)
            if (index.out[i].size() > index.out[worst].size()) worst = i;
        throw FanoutViolation(nfa.states[worst].id, index.out[worst].size(), max_fanout);
    }

    const double n_states = static_cast<double>(nfa.states.size());
    est.luts = static_cast<int64_t>(
        std::ceil(p.lut_per_state * n_states + p.lut_per_fanout_slot * n_states * max_fanout));
    est.registers = static_cast<int64_t>(
        std::ceil(p.reg_per_state * n_states + p.reg_per_fanout_slot * n_states * max_fanout));
    const int64_t record_bits = detail::record_bits_at(p, max_fanout);
    est.uram_blocks = (static_cast<int64_t>(nfa.states.size()) * record_bits + p.uram_bits_per_block - 1) /
                      p.uram_bits_per_block;
    est.min_latency_cycles = detail::per_symbol_min_cycles(p, max_out, max_fanout);
    est.max_latency_cycles = detail::per_symbol_max_cycles(p, max_out, max_fanout);
    return est;
}

/// Cycle bounds for processing input_len symbols: exactly input_len times the
/// per-symbol bounds, so doubling the input doubles both.
inline std::pair<int64_t, int64_t> latency_bounds(const ScoredNfa& nfa, int max_fanout, int64_t input_len,
                                                  const CostParams& p) {
    if (input_len < 0) throw std::invalid_argument("input_len must be non-negative");
    ResourceEstimate est = estimate_resources(nfa, max_fanout, p);
    if (input_len == 0) return {0, 0};
    return {input_len * est.min_latency_cycles, input_len * est.max_latency_cycles};
}

struct SweepRow {
    int fanout = 0;
    std::optional<ResourceEstimate> estimate;
    std::string error; // set when this fanout is infeasible for the graph
};

inline std::vector<SweepRow> fanout_sweep(const ScoredNfa& nfa, const std::vector<int>& fanouts,
                                          const CostParams& p) {
    std::vector<SweepRow> rows;
    rows.reserve(fanouts.size());
    for (int f : fanouts) {
        SweepRow row;
        row.fanout = f;
        try {
            row.estimate = estimate_resources(nfa, f, p);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string csv = "fanout,luts,registers,uram_blocks,min_latency,max_latency\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.fanout);
        if (r.estimate) {
            csv += ',' + std::to_string(r.estimate->luts) + ',' + std::to_string(r.estimate->registers) +
                   ',' + std::to_string(r.estimate->uram_blocks) + ',' +
                   std::to_string(r.estimate->min_latency_cycles) + ',' +
                   std::to_string(r.estimate->max_latency_cycles);
        } else {
            csv += ",error,,,,";
        }
        csv += '\n';
    }
    return csv;
}

} // namespace nfaslim
