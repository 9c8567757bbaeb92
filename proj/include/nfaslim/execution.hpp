#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nfaslim/nfa.hpp"
#include "nfaslim/rng.hpp"

#include "json.hpp"

namespace nfaslim {

/// One acceptance event: an accept state active after consuming the symbol
/// at end_offset, with the minimum additive score over all activating paths.
struct MatchRecord {
    int end_offset = 0;
    std::string accept_state;
    double min_cost = 0.0;

    bool operator==(const MatchRecord& o) const {
        return end_offset == o.end_offset && accept_state == o.accept_state && min_cost == o.min_cost;
    }
};

struct SimOptions {
    // When set, start states re-arm at every input offset (streaming search).
    // Off by default: start states fire at offset 0 only.
    bool all_start_offsets = false;
};

/// Frontier dynamic program over a scored NFA. Symbols match on the
/// destination state (homogeneous convention); start states match their own
/// symbol set at offset 0. Per-(state, offset) costs are exact minima over
/// activating paths, with costs accumulated left to right.
class Simulator {
public:
    explicit Simulator(const ScoredNfa& nfa, SimOptions options = {})
        : nfa_(&nfa), options_(options), index_(nfa) {
        ValidationReport v = validate(nfa);
        if (!v.ok())
            throw std::invalid_argument("simulate: invalid automaton: " + v.violations.front().message);
        for (uint32_t i = 0; i < nfa.states.size(); ++i)
            if (nfa.states[i].start) starts_.push_back(i);
    }

    std::vector<MatchRecord> run(std::string_view input) const {
        const std::size_t n_states = nfa_->states.size();
        std::vector<MatchRecord> matches;
        if (n_states == 0 || input.empty()) return matches;

        constexpr double kInactive = std::numeric_limits<double>::infinity();
        std::vector<double> cur(n_states, kInactive), nxt;

        for (std::size_t t = 0; t < input.size(); ++t) {
            uint8_t symbol = static_cast<uint8_t>(input[t]);
            if (static_cast<int>(symbol) >= nfa_->alphabet_size)
                throw std::invalid_argument("simulate: symbol " + std::to_string(symbol) +
                                            " outside alphabet of size " + std::to_string(nfa_->alphabet_size));
            if (t == 0) {
                for (uint32_t s : starts_)
                    if (nfa_->states[s].symbols.contains(symbol)) cur[s] = 0.0;
            } else {
                nxt.assign(n_states, kInactive);
                for (uint32_t u = 0; u < n_states; ++u) {
                    if (cur[u] == kInactive) continue;
                    for (const auto& [v, score] : index_.out[u]) {
                        if (!nfa_->states[v].symbols.contains(symbol)) continue;
                        double c = cur[u] + score;
                        if (c < nxt[v]) nxt[v] = c;
                    }
                }
                if (options_.all_start_offsets) {
                    for (uint32_t s : starts_)
                        if (nfa_->states[s].symbols.contains(symbol) && 0.0 < nxt[s]) nxt[s] = 0.0;
                }
                cur.swap(nxt);
            }
            for (uint32_t v = 0; v < n_states; ++v)
                if (cur[v] != kInactive && nfa_->states[v].accept)
                    matches.push_back({static_cast<int>(t), nfa_->states[v].id, cur[v]});
        }
        return matches;
    }

private:
    const ScoredNfa* nfa_;
    SimOptions options_;
    NfaIndex index_;
    std::vector<uint32_t> starts_;
};

inline std::vector<MatchRecord> simulate(const ScoredNfa& nfa, std::string_view input, SimOptions options = {}) {
    return Simulator(nfa, options).run(input);
}

/// Independent oracle: enumerates every activation path explicitly and keeps
/// the per-(offset, accept state) minimum. Exponential; guarded to small
/// automata and short inputs.
inline std::vector<MatchRecord> brute_force_matches(const ScoredNfa& nfa, std::string_view input,
                                                    SimOptions options = {}) {
    if (nfa.states.size() > 12)
        throw std::invalid_argument("brute_force_matches: more than 12 states");
    if (input.size() > 6) throw std::invalid_argument("brute_force_matches: input longer than 6");
    ValidationReport val = validate(nfa);
    if (!val.ok())
        throw std::invalid_argument("brute_force_matches: invalid automaton: " + val.violations.front().message);

    NfaIndex index(nfa);
    std::map<std::pair<int, uint32_t>, double> best; // (offset, state) -> min cost

    for (std::size_t t = 0; t < input.size(); ++t) {
        uint8_t symbol = static_cast<uint8_t>(input[t]);
        if (static_cast<int>(symbol) >= nfa.alphabet_size)
            throw std::invalid_argument("brute_force_matches: symbol outside alphabet");
    }

    // Walk every path from (start state, start offset); costs accumulate left
    // to right exactly like the dynamic program does.
    struct Walker {
        const ScoredNfa& nfa;
        const NfaIndex& index;
        std::string_view input;
        std::map<std::pair<int, uint32_t>, double>& best;

        void walk(uint32_t state, std::size_t offset, double cost) {
            if (nfa.states[state].accept) {
                auto key = std::make_pair(static_cast<int>(offset), state);
                auto it = best.find(key);
                if (it == best.end() || cost < it->second) best[key] = cost;
            }
            if (offset + 1 >= input.size()) return;
            uint8_t symbol = static_cast<uint8_t>(input[offset + 1]);
            for (const auto& [v, score] : index.out[state])
                if (nfa.states[v].symbols.contains(symbol)) walk(v, offset + 1, cost + score);
        }
    } walker{nfa, index, input, best};

    for (std::size_t t0 = 0; t0 < input.size(); ++t0) {
        if (t0 > 0 && !options.all_start_offsets) break;
        uint8_t symbol = static_cast<uint8_t>(input[t0]);
        for (uint32_t s = 0; s < nfa.states.size(); ++s)
            if (nfa.states[s].start && nfa.states[s].symbols.contains(symbol)) walker.walk(s, t0, 0.0);
    }

    std::vector<MatchRecord> matches;
    matches.reserve(best.size());
    for (const auto& [key, cost] : best)
        matches.push_back({key.first, nfa.states[key.second].id, cost});
    return matches;
}

// ---------------------------------------------------------------------------
// Equivalence checking

struct TrialConfig {
    int alphabet = 4;          // inputs drawn from symbols {0 .. alphabet-1}
    int max_len = 4;           // inputs of length 0..max_len
    bool exhaustive = true;    // otherwise `samples` random inputs
    int samples = 1000;
    uint64_t seed = 1;
    SimOptions sim;
};

struct Counterexample {
    std::string input;   // hex-encoded symbols
    std::string kind;    // subset | completeness | cost
    int end_offset = 0;
    std::string accept_state;
    double expected_cost = 0.0;
    double got_cost = 0.0;
    bool missing = false;
};

struct EquivalenceReport {
    std::size_t inputs_checked = 0;
    std::size_t subset_violations = 0;
    std::size_t completeness_violations = 0;
    std::size_t cost_mismatches = 0;
    std::vector<Counterexample> counterexamples; // capped

    bool ok() const { return subset_violations == 0 && completeness_violations == 0 && cost_mismatches == 0; }
};

namespace detail {

inline std::string hex_input(std::string_view input) {
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(input.size() * 2);
    for (char c : input) {
        s += hex[(static_cast<uint8_t>(c)) >> 4];
        s += hex[static_cast<uint8_t>(c) & 0xf];
    }
    return s;
}

inline ScoredNfa restrict_above_theta(const ScoredNfa& nfa, double theta) {
    ScoredNfa out;
    out.id = nfa.id;
    out.alphabet_size = nfa.alphabet_size;
    out.states = nfa.states;
    for (const auto& t : nfa.transitions)
        if (t.score > theta) out.transitions.push_back(t);
    return out;
}

} // namespace detail

/// Folds per-state match records down to per-offset minima. This is the
/// granularity equivalence is judged at: structural cleanup may merge or
/// rename reporting states, but the set of matched end offsets and the
/// minimum accepting cost at each offset are what ranked matching observes.
inline std::map<int, MatchRecord> matches_by_offset(const std::vector<MatchRecord>& matches) {
    std::map<int, MatchRecord> best;
    for (const auto& m : matches) {
        auto it = best.find(m.end_offset);
        if (it == best.end() || m.min_cost < it->second.min_cost) best[m.end_offset] = m;
    }
    return best;
}

/// Checks that `pruned` is a sound, theta-complete reduction of `original`:
/// (a) every pruned match offset exists in the original at no lower cost
/// (subset), and (b) every original match whose min-cost activating path uses
/// only scores above theta survives in the pruned automaton at equal cost.
/// Violations are data, not errors; the first few carry counterexamples.
inline EquivalenceReport check_equivalence(const ScoredNfa& original, const ScoredNfa& pruned, double theta,
                                           const TrialConfig& cfg = {}) {
    Simulator sim_orig(original, cfg.sim);
    Simulator sim_pruned(pruned, cfg.sim);
    ScoredNfa filtered = detail::restrict_above_theta(original, theta);
    Simulator sim_filtered(filtered, cfg.sim);

    EquivalenceReport report;
    constexpr std::size_t kMaxCounterexamples = 16;

    auto record = [&](std::string_view input, const char* kind, const MatchRecord& m, double got, bool missing) {
        if (report.counterexamples.size() >= kMaxCounterexamples) return;
        Counterexample ce;
        ce.input = detail::hex_input(input);
        ce.kind = kind;
        ce.end_offset = m.end_offset;
        ce.accept_state = m.accept_state;
        ce.expected_cost = m.min_cost;
        ce.got_cost = got;
        ce.missing = missing;
        report.counterexamples.push_back(std::move(ce));
    };

    auto check_input = [&](std::string_view input) {
        report.inputs_checked += 1;
        auto orig_map = matches_by_offset(sim_orig.run(input));
        auto pruned_map = matches_by_offset(sim_pruned.run(input));
        auto filtered_map = matches_by_offset(sim_filtered.run(input));

        for (const auto& [offset, m] : pruned_map) {
            auto it = orig_map.find(offset);
            if (it == orig_map.end() || m.min_cost < it->second.min_cost) {
                // A pruned automaton cannot match where the original does not,
                // nor more cheaply than the original it was cut from.
                report.subset_violations += 1;
                record(input, "subset", m, m.min_cost, it == orig_map.end());
            }
        }

        for (const auto& [offset, m] : filtered_map) {
            auto io = orig_map.find(offset);
            if (io == orig_map.end() || io->second.min_cost != m.min_cost)
                continue; // the original's min-cost path dips below theta
            auto ip = pruned_map.find(offset);
            if (ip == pruned_map.end()) {
                report.completeness_violations += 1;
                record(input, "completeness", io->second, 0.0, true);
            } else if (ip->second.min_cost != io->second.min_cost) {
                report.cost_mismatches += 1;
                record(input, "cost", io->second, ip->second.min_cost, false);
            }
        }
    };

    const uint8_t k = static_cast<uint8_t>(cfg.alphabet);
    if (cfg.exhaustive) {
        std::string input;
        // All strings of length 0..max_len over the first k symbols.
        std::function<void(std::string&, int)> enumerate = [&](std::string& buf, int remaining) {
            check_input(buf);
            if (remaining == 0) return;
            for (uint8_t c = 0; c < k; ++c) {
                buf.push_back(static_cast<char>(c));
                enumerate(buf, remaining - 1);
                buf.pop_back();
            }
        };
        enumerate(input, cfg.max_len);
    } else {
        Rng rng(cfg.seed);
        for (int i = 0; i < cfg.samples; ++i) {
            std::size_t len = static_cast<std::size_t>(rng.next_below(static_cast<uint64_t>(cfg.max_len) + 1));
            std::string input(len, '\0');
            for (auto& c : input) c = static_cast<char>(rng.next_below(k));
            check_input(input);
        }
    }
    return report;
}

inline nlohmann::json equivalence_report_to_json(const EquivalenceReport& r) {
    nlohmann::json ces = nlohmann::json::array();
    for (const auto& ce : r.counterexamples) {
        ces.push_back({{"input", ce.input},
                       {"kind", ce.kind},
                       {"end_offset", ce.end_offset},
                       {"accept_state", ce.accept_state},
                       {"expected_cost", ce.expected_cost},
                       {"got_cost", ce.got_cost},
                       {"missing", ce.missing}});
    }
    return nlohmann::json{{"inputs_checked", r.inputs_checked},
                          {"subset_violations", r.subset_violations},
                          {"completeness_violations", r.completeness_violations},
                          {"cost_mismatches", r.cost_mismatches},
                          {"ok", r.ok()},
                          {"counterexamples", std::move(ces)}};
}

/// JSON-lines rendering of a match list: one object per line with input_id,
/// end_offset, accept_state and min_cost.
inline std::string match_records_jsonl(const std::string& input_id, const std::vector<MatchRecord>& matches) {
    std::string out;
    for (const auto& m : matches) {
        nlohmann::json row = {{"input_id", input_id},
                              {"end_offset", m.end_offset},
                              {"accept_state", m.accept_state},
                              {"min_cost", m.min_cost}};
        out += row.dump();
        out += '\n';
    }
    return out;
}

} // namespace nfaslim
