#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nfaslim/symbol_set.hpp"

namespace nfaslim {

/// One state of a homogeneous scored NFA. The symbol set is matched on
/// incoming activation: a transition into this state fires only when the
/// current input symbol is in `symbols`. Start states additionally match
/// their own symbol set against the first input symbol.
struct State {
    std::string id;
    SymbolSet symbols;
    bool start = false;
    bool accept = false;

    bool operator==(const State& o) const {
        return id == o.id && symbols == o.symbols && start == o.start && accept == o.accept;
    }
};

/// Directed scored transition. Parallel edges between the same pair are
/// allowed as long as their scores differ.
struct Transition {
    std::string from;
    std::string to;
    double score = 1.0;

    bool operator==(const Transition& o) const {
        return from == o.from && to == o.to && score == o.score;
    }
};

/// In-memory scored NFA. Treated as immutable once built; all operations in
/// this toolkit take it by const reference and return new automata.
struct ScoredNfa {
    std::string id;
    std::vector<State> states;
    std::vector<Transition> transitions;
    int alphabet_size = 256;
};

struct Violation {
    std::string locus;   // state id, "transition#<n>", or "nfa"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

struct NodeStats {
    std::string id;
    int in_degree = 0;
    int out_degree = 0;
    double total_score = 0.0;  // sum over all incident transitions, self-loops counted twice
};

namespace detail {

inline std::unordered_map<std::string, uint32_t> index_states(const ScoredNfa& nfa) {
    std::unordered_map<std::string, uint32_t> m;
    m.reserve(nfa.states.size() * 2);
    for (uint32_t i = 0; i < nfa.states.size(); ++i) m.emplace(nfa.states[i].id, i);
    return m;
}

} // namespace detail

/// Resolved index view over a structurally valid automaton: state ids mapped
/// to positions plus forward/backward adjacency. Built once per operation so
/// the hot loops never touch string keys.
struct NfaIndex {
    std::unordered_map<std::string, uint32_t> pos;
    // (neighbor state, score) per edge; `out[i]` lists edges leaving state i,
    // `in[i]` edges entering it. Edge order follows nfa.transitions.
    std::vector<std::vector<std::pair<uint32_t, double>>> out;
    std::vector<std::vector<std::pair<uint32_t, double>>> in;

    explicit NfaIndex(const ScoredNfa& nfa) : pos(detail::index_states(nfa)) {
        out.resize(nfa.states.size());
        in.resize(nfa.states.size());
        for (const auto& t : nfa.transitions) {
            auto f = pos.find(t.from);
            auto d = pos.find(t.to);
            if (f == pos.end() || d == pos.end())
                throw std::invalid_argument("transition references unknown state: " + t.from + " -> " + t.to);
            out[f->second].emplace_back(d->second, t.score);
            in[d->second].emplace_back(f->second, t.score);
        }
    }

    uint32_t max_out_degree() const {
        std::size_t m = 0;
        for (const auto& v : out) m = std::max(m, v.size());
        return static_cast<uint32_t>(m);
    }
};

/// Checks every structural invariant and reports each violation with its
/// locus. Never throws; an invalid automaton is data, not a failure.
inline ValidationReport validate(const ScoredNfa& nfa) {
    ValidationReport report;
    auto add = [&](std::string locus, std::string msg) {
        report.violations.push_back({std::move(locus), std::move(msg)});
    };

    if (nfa.alphabet_size < 1 || nfa.alphabet_size > 256)
        add("nfa", "alphabet_size must be in [1, 256]");

    std::unordered_map<std::string, uint32_t> pos;
    pos.reserve(nfa.states.size() * 2);
    std::vector<bool> has_incoming(nfa.states.size(), false);
    for (uint32_t i = 0; i < nfa.states.size(); ++i) {
        const State& s = nfa.states[i];
        if (s.id.empty()) add("state#" + std::to_string(i), "empty state id");
        if (!pos.emplace(s.id, i).second) add(s.id, "duplicate state id");
        if (!s.symbols.empty() && s.symbols.max_symbol_exclusive() > nfa.alphabet_size)
            add(s.id, "symbol set exceeds alphabet_size");
    }

    // Exact-duplicate edges (same endpoints, same score) are disallowed;
    // parallel edges with distinct scores are fine.
    std::unordered_map<std::string, std::vector<double>> edge_scores;
    for (std::size_t i = 0; i < nfa.transitions.size(); ++i) {
        const Transition& t = nfa.transitions[i];
        const std::string locus = "transition#" + std::to_string(i);
        auto f = pos.find(t.from);
        auto d = pos.find(t.to);
        if (f == pos.end()) add(locus, "unknown source state '" + t.from + "'");
        if (d == pos.end()) add(locus, "unknown destination state '" + t.to + "'");
        if (!std::isfinite(t.score)) {
            add(locus, "score is not finite");
        } else if (t.score < 0.0) {
            add(locus, "negative score");
        }
        if (f != pos.end() && d != pos.end()) {
            has_incoming[d->second] = true;
            auto& scores = edge_scores[t.from + '\x1f' + t.to];
            for (double s : scores)
                if (s == t.score) {
                    add(locus, "duplicate (from, to) pair with identical score");
                    break;
                }
            scores.push_back(t.score);
        }
    }

    for (uint32_t i = 0; i < nfa.states.size(); ++i) {
        const State& s = nfa.states[i];
        if (s.symbols.empty() && (s.start || has_incoming[i]))
            add(s.id, "empty symbol set on a state with incoming activation");
    }
    return report;
}

/// Per-state degree and incident-score totals. Requires a valid automaton.
inline std::vector<NodeStats> node_stats(const ScoredNfa& nfa) {
    ValidationReport v = validate(nfa);
    if (!v.ok())
        throw std::invalid_argument("node_stats: invalid automaton: " + v.violations.front().message +
                                    " (" + v.violations.front().locus + ")");
    auto pos = detail::index_states(nfa);
    std::vector<NodeStats> stats(nfa.states.size());
    for (std::size_t i = 0; i < nfa.states.size(); ++i) stats[i].id = nfa.states[i].id;
    for (const auto& t : nfa.transitions) {
        NodeStats& src = stats[pos.at(t.from)];
        NodeStats& dst = stats[pos.at(t.to)];
        src.out_degree += 1;
        src.total_score += t.score;
        dst.in_degree += 1;
        dst.total_score += t.score;
    }
    return stats;
}

inline double avg_transitions_per_node(const ScoredNfa& nfa) {
    if (nfa.states.empty()) throw std::domain_error("avg_transitions_per_node: automaton has no states");
    return static_cast<double>(nfa.transitions.size()) / static_cast<double>(nfa.states.size());
}

} // namespace nfaslim
