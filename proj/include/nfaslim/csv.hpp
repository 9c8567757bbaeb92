#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nfaslim/anml.hpp"
#include "nfaslim/nfa.hpp"

namespace nfaslim {

// Intermediate tabular form of an automaton: one transition table and one
// node table. Headers are fixed; lines end with LF; ids never need quoting.
inline constexpr const char* kTransitionCsvHeader = "from,to,symbol,score";
inline constexpr const char* kNodeCsvHeader = "id,in_degree,out_degree,total_score,start,accept";

struct CsvPair {
    std::string transitions; // transitions.csv content
    std::string nodes;       // nodes.csv content
};

/// Emits the two tables. The symbol column carries the destination state's
/// symbol class; node rows carry the node_stats fields plus flags.
inline CsvPair to_csv(const ScoredNfa& nfa) {
    ValidationReport v = validate(nfa);
    if (!v.ok())
        throw std::invalid_argument("to_csv: invalid automaton: " + v.violations.front().message);

    auto pos = detail::index_states(nfa);
    CsvPair out;
    out.transitions.reserve(24 + nfa.transitions.size() * 32);
    out.transitions += kTransitionCsvHeader;
    out.transitions += '\n';
    for (const auto& t : nfa.transitions) {
        const State& dst = nfa.states[pos.at(t.to)];
        out.transitions += t.from;
        out.transitions += ',';
        out.transitions += t.to;
        out.transitions += ',';
        out.transitions += dst.symbols.to_string();
        out.transitions += ',';
        out.transitions += detail::format_score(t.score);
        out.transitions += '\n';
    }

    std::vector<NodeStats> stats = node_stats(nfa);
    out.nodes.reserve(48 + nfa.states.size() * 32);
    out.nodes += kNodeCsvHeader;
    out.nodes += '\n';
    for (std::size_t i = 0; i < nfa.states.size(); ++i) {
        const State& s = nfa.states[i];
        out.nodes += s.id;
        out.nodes += ',';
        out.nodes += std::to_string(stats[i].in_degree);
        out.nodes += ',';
        out.nodes += std::to_string(stats[i].out_degree);
        out.nodes += ',';
        out.nodes += detail::format_score(stats[i].total_score);
        out.nodes += ',';
        out.nodes += s.start ? '1' : '0';
        out.nodes += ',';
        out.nodes += s.accept ? '1' : '0';
        out.nodes += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::vector<std::string_view> csv_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = (nl == std::string_view::npos) ? text.substr(start) : text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

} // namespace detail

/// Rebuilds an automaton from the two tables. Degree and total_score columns
/// are not trusted; they are recomputed from the transition rows. Symbol
/// classes are recovered from the `symbol` column of incoming transitions;
/// a start state that never appears as a destination falls back to the full
/// alphabet (the node table does not carry symbol classes).
inline ScoredNfa from_csv(std::string_view transitions_csv, std::string_view nodes_csv,
                          const std::string& nfa_id = "csv") {
    ScoredNfa nfa;
    nfa.id = nfa_id;

    auto node_lines = detail::csv_lines(nodes_csv);
    if (node_lines.empty() || node_lines.front() != kNodeCsvHeader)
        throw std::invalid_argument("nodes csv: bad header (expected '" + std::string(kNodeCsvHeader) + "')");
    for (std::size_t i = 1; i < node_lines.size(); ++i) {
        auto f = detail::split_fields(node_lines[i]);
        if (f.size() != 6)
            throw std::invalid_argument("nodes csv: row " + std::to_string(i + 1) + ": expected 6 fields");
        State s;
        s.id = std::string(f[0]);
        if (!detail::valid_id(s.id))
            throw std::invalid_argument("nodes csv: row " + std::to_string(i + 1) + ": invalid id '" + s.id + "'");
        if (f[4] != "0" && f[4] != "1")
            throw std::invalid_argument("nodes csv: row " + std::to_string(i + 1) + ": start flag must be 0/1");
        if (f[5] != "0" && f[5] != "1")
            throw std::invalid_argument("nodes csv: row " + std::to_string(i + 1) + ": accept flag must be 0/1");
        s.start = f[4] == "1";
        s.accept = f[5] == "1";
        nfa.states.push_back(std::move(s));
    }

    auto pos = detail::index_states(nfa);
    std::vector<bool> has_symbols(nfa.states.size(), false);

    auto tr_lines = detail::csv_lines(transitions_csv);
    if (tr_lines.empty() || tr_lines.front() != kTransitionCsvHeader)
        throw std::invalid_argument("transitions csv: bad header (expected '" + std::string(kTransitionCsvHeader) + "')");
    nfa.transitions.reserve(tr_lines.size() - 1);
    for (std::size_t i = 1; i < tr_lines.size(); ++i) {
        auto f = detail::split_fields(tr_lines[i]);
        if (f.size() != 4)
            throw std::invalid_argument("transitions csv: row " + std::to_string(i + 1) + ": expected 4 fields");
        Transition t;
        t.from = std::string(f[0]);
        t.to = std::string(f[1]);
        auto src = pos.find(t.from);
        auto dst = pos.find(t.to);
        if (src == pos.end())
            throw std::invalid_argument("transitions csv: row " + std::to_string(i + 1) + ": unknown source '" + t.from + "'");
        if (dst == pos.end())
            throw std::invalid_argument("transitions csv: row " + std::to_string(i + 1) + ": unknown destination '" + t.to + "'");
        bool ok = false;
        t.score = detail::parse_double(f[3], ok);
        if (!ok)
            throw std::invalid_argument("transitions csv: row " + std::to_string(i + 1) + ": non-numeric score '" +
                                        std::string(f[3]) + "'");
        SymbolSet symbols = SymbolSet::parse(std::string(f[2]));
        if (has_symbols[dst->second]) {
            if (nfa.states[dst->second].symbols != symbols)
                throw std::invalid_argument("transitions csv: row " + std::to_string(i + 1) +
                                            ": conflicting symbol class for state '" + t.to + "'");
        } else {
            nfa.states[dst->second].symbols = symbols;
            has_symbols[dst->second] = true;
        }
        nfa.transitions.push_back(std::move(t));
    }

    for (std::size_t i = 0; i < nfa.states.size(); ++i) {
        if (!has_symbols[i] && nfa.states[i].start) nfa.states[i].symbols = SymbolSet::all();
    }
    return nfa;
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace nfaslim
