#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "nfaslim/nfa.hpp"
#include "nfaslim/rng.hpp"

namespace testutil {

using nfaslim::Rng;
using nfaslim::ScoredNfa;
using nfaslim::State;
using nfaslim::SymbolSet;
using nfaslim::Transition;

inline State state(std::string id, std::string symbols, bool start = false, bool accept = false) {
    State s;
    s.id = std::move(id);
    s.symbols = SymbolSet::parse(symbols);
    s.start = start;
    s.accept = accept;
    return s;
}

inline ScoredNfa make_nfa(std::vector<State> states, std::vector<Transition> transitions,
                          int alphabet = 256, std::string id = "t") {
    ScoredNfa nfa;
    nfa.id = std::move(id);
    nfa.states = std::move(states);
    nfa.transitions = std::move(transitions);
    nfa.alphabet_size = alphabet;
    return nfa;
}

// Small random automata for property suites. Independent of the corpus
// generator on purpose: states/edges are drawn directly so oracle checks do
// not share code with the implementation under test. Alphabet symbols are the
// bytes 0..alphabet-1; every automaton has at least one start state.
inline ScoredNfa random_nfa(Rng& rng, int max_states = 10, int alphabet = 4, double accept_p = 0.35,
                            double edge_factor = 2.0) {
    int n = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_states)));
    ScoredNfa nfa;
    nfa.id = "rand";
    nfa.alphabet_size = alphabet;
    for (int i = 0; i < n; ++i) {
        State s;
        s.id = "q" + std::to_string(i);
        int n_syms = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(alphabet)));
        for (int k = 0; k < n_syms; ++k) s.symbols.add(static_cast<uint8_t>(rng.next_below(alphabet)));
        s.start = rng.next_bool(0.35);
        s.accept = rng.next_bool(accept_p);
        nfa.states.push_back(std::move(s));
    }
    nfa.states[static_cast<std::size_t>(rng.next_below(n))].start = true;

    int n_edges = static_cast<int>(rng.next_below(static_cast<uint64_t>(
                      std::max(1.0, edge_factor * n)) + 1));
    std::set<std::tuple<int, int, long long>> seen;
    for (int e = 0; e < n_edges; ++e) {
        int from = static_cast<int>(rng.next_below(n));
        int to = static_cast<int>(rng.next_below(n));
        double score = std::llround(rng.next_double() * 1e6) / 1e6;
        auto key = std::make_tuple(from, to, std::llround(score * 1e6));
        if (!seen.insert(key).second) continue;
        nfa.transitions.push_back({nfa.states[from].id, nfa.states[to].id, score});
    }
    return nfa;
}

} // namespace testutil
