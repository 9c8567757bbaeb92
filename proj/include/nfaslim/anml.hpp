#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nfaslim/nfa.hpp"

namespace nfaslim {

/// Thrown on malformed documents; carries the 1-based source line.
class AnmlParseError : public std::runtime_error {
public:
    AnmlParseError(int line, const std::string& msg)
        : std::runtime_error("anml parse error at line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

// Decimal text with at most six fractional digits, trailing zeros trimmed.
// The toolkit quantizes generated scores to the same grid, so emit/parse is
// lossless on its own output.
inline std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s(buf);
    std::size_t dot = s.find('.');
    if (dot != std::string::npos) {
        std::size_t last = s.find_last_not_of('0');
        if (last == dot) last -= 1;
        s.erase(last + 1);
    }
    return s;
}

inline double parse_double(std::string_view text, bool& ok) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    ok = (ec == std::errc()) && p == text.data() + text.size();
    return v;
}

inline bool valid_id(std::string_view id) {
    if (id.empty()) return false;
    for (char c : id) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

// Minimal pull scanner for the element subset this schema uses. Tracks lines
// for error reporting; supports comments, processing instructions, both quote
// styles and the five predefined entities.
class XmlScanner {
public:
    explicit XmlScanner(std::string_view text) : text_(text) {}

    struct Attr {
        std::string name;
        std::string value;
    };
    struct Tag {
        std::string name;
        std::vector<Attr> attrs;
        bool closing = false;      // </name>
        bool self_closing = false; // <name/>
        int line = 1;
    };

    // Returns false at end of input.
    bool next_tag(Tag& tag) {
        skip_until_tag();
        if (pos_ >= text_.size()) return false;
        tag = Tag{};
        tag.line = line_;
        expect('<');
        if (peek() == '/') {
            ++pos_;
            tag.closing = true;
        }
        tag.name = read_name();
        if (tag.name.empty()) fail("expected element name");
        while (true) {
            skip_ws();
            char c = peek();
            if (c == '>') {
                ++pos_;
                return true;
            }
            if (c == '/') {
                ++pos_;
                if (peek() != '>') fail("expected '>' after '/'");
                ++pos_;
                tag.self_closing = true;
                return true;
            }
            if (c == '\0') throw AnmlParseError(tag.line, "unterminated tag '" + tag.name + "'");
            if (tag.closing) fail("attributes not allowed in closing tag");
            Attr a;
            a.name = read_name();
            if (a.name.empty()) throw AnmlParseError(tag.line, "expected attribute name in <" + tag.name + ">");
            skip_ws();
            expect('=');
            skip_ws();
            char quote = peek();
            if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
            ++pos_;
            a.value = read_attr_value(quote);
            tag.attrs.push_back(std::move(a));
        }
    }

    int line() const { return line_; }
    [[noreturn]] void fail(const std::string& msg) const { throw AnmlParseError(line_, msg); }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void advance() {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
                advance();
            else
                break;
        }
    }

    // Skips text content, comments and processing instructions up to the
    // next element tag.
    void skip_until_tag() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c != '<') {
                advance();
                continue;
            }
            if (text_.compare(pos_, 4, "<!--") == 0) {
                std::size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                while (pos_ < end + 3) advance();
                continue;
            }
            if (text_.compare(pos_, 2, "<?") == 0) {
                std::size_t end = text_.find("?>", pos_ + 2);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                while (pos_ < end + 2) advance();
                continue;
            }
            return;
        }
    }

    std::string read_name() {
        std::string name;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == ':' || c == '.';
            if (!ok) break;
            name += c;
            ++pos_;
        }
        return name;
    }

    std::string read_attr_value(char quote) {
        std::string value;
        while (true) {
            if (pos_ >= text_.size()) fail("unterminated attribute value");
            char c = text_[pos_];
            if (c == quote) {
                ++pos_;
                return value;
            }
            if (c == '&') {
                value += read_entity();
                continue;
            }
            if (c == '<') fail("'<' in attribute value");
            value += c;
            advance();
        }
    }

    char read_entity() {
        std::size_t semi = text_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 6) fail("malformed entity");
        std::string_view ent = text_.substr(pos_ + 1, semi - pos_ - 1);
        pos_ = semi + 1;
        if (ent == "amp") return '&';
        if (ent == "lt") return '<';
        if (ent == "gt") return '>';
        if (ent == "quot") return '"';
        if (ent == "apos") return '\'';
        fail("unknown entity '&" + std::string(ent) + ";'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

} // namespace detail

/// Parses a score-annotated automata network document.
///
/// Schema: `<automata-network id>` contains `<state-transition-element id
/// symbol-set start-of-data?>` elements whose children are
/// `<activate-on-match element score?/>` and `<report-on-match/>`. A missing
/// score attribute means score 1.0. Activations may reference elements
/// declared later in the document; references are resolved at the end.
inline ScoredNfa parse_anml(std::string_view text) {
    detail::XmlScanner scanner(text);
    detail::XmlScanner::Tag tag;

    if (!scanner.next_tag(tag)) throw AnmlParseError(1, "empty document");
    if (tag.name != "automata-network" || tag.closing)
        throw AnmlParseError(tag.line, "expected <automata-network> root, got <" + tag.name + ">");

    ScoredNfa nfa;
    for (const auto& a : tag.attrs) {
        if (a.name == "id") nfa.id = a.value;
    }
    if (tag.self_closing) return nfa;

    struct PendingActivation {
        std::string from;
        std::string to;
        double score;
        int line;
    };
    std::vector<PendingActivation> pending;

    auto parse_bool = [&](const std::string& v, int line) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw AnmlParseError(line, "expected boolean attribute value, got '" + v + "'");
    };

    bool in_ste = false;
    while (scanner.next_tag(tag)) {
        if (tag.closing) {
            if (tag.name == "state-transition-element") {
                if (!in_ste) scanner.fail("unmatched </state-transition-element>");
                in_ste = false;
                continue;
            }
            if (tag.name == "automata-network") {
                if (in_ste) scanner.fail("unclosed <state-transition-element>");
                break;
            }
            scanner.fail("unexpected closing tag </" + tag.name + ">");
        }

        if (tag.name == "state-transition-element") {
            if (in_ste) scanner.fail("nested <state-transition-element>");
            State s;
            for (const auto& a : tag.attrs) {
                if (a.name == "id") {
                    if (!detail::valid_id(a.value))
                        throw AnmlParseError(tag.line, "invalid state id '" + a.value + "'");
                    s.id = a.value;
                } else if (a.name == "symbol-set") {
                    try {
                        s.symbols = SymbolSet::parse(a.value);
                    } catch (const std::invalid_argument& e) {
                        throw AnmlParseError(tag.line, e.what());
                    }
                } else if (a.name == "start-of-data") {
                    s.start = parse_bool(a.value, tag.line);
                }
            }
            if (s.id.empty()) throw AnmlParseError(tag.line, "state-transition-element without id");
            nfa.states.push_back(std::move(s));
            in_ste = !tag.self_closing;
            continue;
        }

        if (tag.name == "activate-on-match") {
            if (!in_ste) scanner.fail("<activate-on-match> outside state-transition-element");
            std::string target;
            double score = 1.0;
            for (const auto& a : tag.attrs) {
                if (a.name == "element") {
                    target = a.value;
                } else if (a.name == "score") {
                    bool ok = false;
                    score = detail::parse_double(a.value, ok);
                    if (!ok) throw AnmlParseError(tag.line, "malformed score '" + a.value + "'");
                }
            }
            if (target.empty()) throw AnmlParseError(tag.line, "activate-on-match without element attribute");
            if (!tag.self_closing) scanner.fail("<activate-on-match> must be self-closing");
            pending.push_back({nfa.states.back().id, std::move(target), score, tag.line});
            continue;
        }

        if (tag.name == "report-on-match") {
            if (!in_ste) scanner.fail("<report-on-match> outside state-transition-element");
            if (!tag.self_closing) scanner.fail("<report-on-match> must be self-closing");
            nfa.states.back().accept = true;
            continue;
        }

        scanner.fail("unknown element <" + tag.name + ">");
    }

    auto pos = detail::index_states(nfa);
    nfa.transitions.reserve(pending.size());
    for (auto& p : pending) {
        if (pos.find(p.to) == pos.end())
            throw AnmlParseError(p.line, "activate-on-match references unknown element '" + p.to + "'");
        nfa.transitions.push_back({std::move(p.from), std::move(p.to), p.score});
    }
    return nfa;
}

/// Serializes an automaton to the document form parse_anml accepts.
/// Activations are grouped under their source state in transition order, so
/// output is deterministic for a given automaton.
inline std::string emit_anml(const ScoredNfa& nfa) {
    ValidationReport v = validate(nfa);
    if (!v.ok())
        throw std::invalid_argument("emit_anml: invalid automaton: " + v.violations.front().message +
                                    " (" + v.violations.front().locus + ")");

    auto pos = detail::index_states(nfa);
    std::vector<std::vector<const Transition*>> outgoing(nfa.states.size());
    for (const auto& t : nfa.transitions) outgoing[pos.at(t.from)].push_back(&t);

    auto escape = [](const std::string& s) {
        std::string e;
        e.reserve(s.size());
        for (char c : s) {
            switch (c) {
                case '&': e += "&amp;"; break;
                case '<': e += "&lt;"; break;
                case '>': e += "&gt;"; break;
                case '"': e += "&quot;"; break;
                case '\'': e += "&apos;"; break;
                default: e += c;
            }
        }
        return e;
    };

    std::string out;
    out.reserve(128 + nfa.states.size() * 96 + nfa.transitions.size() * 56);
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<automata-network id=\"" + escape(nfa.id) + "\">\n";
    for (std::size_t i = 0; i < nfa.states.size(); ++i) {
        const State& s = nfa.states[i];
        out += "  <state-transition-element id=\"" + s.id + "\" symbol-set=\"" + s.symbols.to_string() + "\"";
        if (s.start) out += " start-of-data=\"true\"";
        if (outgoing[i].empty() && !s.accept) {
            out += "/>\n";
            continue;
        }
        out += ">\n";
        for (const Transition* t : outgoing[i]) {
            out += "    <activate-on-match element=\"" + t->to + "\" score=\"" +
                   detail::format_score(t->score) + "\"/>\n";
        }
        if (s.accept) out += "    <report-on-match/>\n";
        out += "  </state-transition-element>\n";
    }
    out += "</automata-network>\n";
    return out;
}

inline ScoredNfa read_anml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_anml(ss.str());
}

inline void write_anml_file(const std::string& path, const ScoredNfa& nfa) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << emit_anml(nfa);
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace nfaslim
