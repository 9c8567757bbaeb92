#pragma once

#include <bitset>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nfaslim {

/// Set of input symbols over a byte alphabet, with a character-class text
/// form used by both the XML and CSV codecs: `*` (all symbols), a single
/// literal, or `[...]` with ascending members and `a-z` range compression.
/// Symbols outside the safe literal range are written as `\xNN` so the text
/// never contains XML/CSV metacharacters.
class SymbolSet {
public:
    SymbolSet() = default;

    static SymbolSet all() {
        SymbolSet s;
        s.bits_.set();
        return s;
    }

    static SymbolSet single(uint8_t c) {
        SymbolSet s;
        s.bits_.set(c);
        return s;
    }

    void add(uint8_t c) { bits_.set(c); }
    bool contains(uint8_t c) const { return bits_.test(c); }
    std::size_t size() const { return bits_.count(); }
    bool empty() const { return bits_.none(); }
    bool is_all() const { return bits_.all(); }

    // Highest set symbol + 1; 0 when empty. Used to check alphabet bounds.
    int max_symbol_exclusive() const {
        for (int c = 255; c >= 0; --c)
            if (bits_.test(static_cast<std::size_t>(c))) return c + 1;
        return 0;
    }

    bool operator==(const SymbolSet& o) const { return bits_ == o.bits_; }
    bool operator!=(const SymbolSet& o) const { return !(*this == o); }

    // Stable key for hashing/grouping.
    std::string key() const {
        std::string k(32, '\0');
        for (int i = 0; i < 256; ++i)
            if (bits_.test(static_cast<std::size_t>(i)))
                k[static_cast<std::size_t>(i >> 3)] |= static_cast<char>(1 << (i & 7));
        return k;
    }

    std::string to_string() const {
        if (is_all()) return "*";
        if (empty()) return "[]";
        if (size() == 1) {
            for (int i = 0; i < 256; ++i)
                if (bits_.test(static_cast<std::size_t>(i)))
                    return encode(static_cast<uint8_t>(i));
        }
        std::string out = "[";
        int i = 0;
        while (i < 256) {
            if (!bits_.test(static_cast<std::size_t>(i))) {
                ++i;
                continue;
            }
            int j = i;
            while (j + 1 < 256 && bits_.test(static_cast<std::size_t>(j + 1))) ++j;
            if (j - i >= 2) {
                out += encode(static_cast<uint8_t>(i));
                out += '-';
                out += encode(static_cast<uint8_t>(j));
            } else {
                for (int c = i; c <= j; ++c) out += encode(static_cast<uint8_t>(c));
            }
            i = j + 1;
        }
        out += ']';
        return out;
    }

    /// Parses the text form produced by to_string(). Throws
    /// std::invalid_argument on malformed classes.
    static SymbolSet parse(const std::string& text) {
        SymbolSet s;
        if (text == "*") return all();
        if (text.empty()) throw std::invalid_argument("empty symbol class");
        if (text.front() != '[') {
            std::size_t pos = 0;
            uint8_t c = decode(text, pos);
            if (pos != text.size()) throw std::invalid_argument("trailing characters in symbol class: " + text);
            s.add(c);
            return s;
        }
        if (text.back() != ']') throw std::invalid_argument("unterminated symbol class: " + text);
        std::size_t pos = 1;
        const std::size_t end = text.size() - 1;
        bool first = true;
        int prev = -1;
        while (pos < end) {
            if (!first && text[pos] == '-' && pos + 1 < end) {
                ++pos;
                uint8_t hi = decode(text, pos);
                if (prev < 0 || hi < prev) throw std::invalid_argument("bad range in symbol class: " + text);
                for (int c = prev; c <= hi; ++c) s.add(static_cast<uint8_t>(c));
                prev = -1;
                continue;
            }
            uint8_t c = decode(text, pos);
            s.add(c);
            prev = c;
            first = false;
        }
        return s;
    }

private:
    // Literals are restricted to characters that are inert in XML attributes
    // and unquoted CSV fields; everything else goes through \xNN.
    static bool safe_literal(uint8_t c) {
        if (c >= 'a' && c <= 'z') return true;
        if (c >= 'A' && c <= 'Z') return true;
        if (c >= '0' && c <= '9') return true;
        switch (c) {
            case '_': case '.': case ':': case ';': case '!': case '?':
            case '@': case '#': case '$': case '%': case '(': case ')':
            case '{': case '}': case '+': case '=': case '~': case '/':
                return true;
            default:
                return false;
        }
    }

    static std::string encode(uint8_t c) {
        if (safe_literal(c)) return std::string(1, static_cast<char>(c));
        static const char* hex = "0123456789abcdef";
        std::string out = "\\x";
        out += hex[c >> 4];
        out += hex[c & 0xf];
        return out;
    }

    static uint8_t decode(const std::string& text, std::size_t& pos) {
        uint8_t c = static_cast<uint8_t>(text[pos]);
        if (c != '\\') {
            ++pos;
            return c;
        }
        if (pos + 1 >= text.size())
            throw std::invalid_argument("truncated escape in symbol class: " + text);
        if (text[pos + 1] == 'x') {
            if (pos + 3 >= text.size())
                throw std::invalid_argument("truncated escape in symbol class: " + text);
            int hi = hex_val(text[pos + 2]);
            int lo = hex_val(text[pos + 3]);
            if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex escape in symbol class: " + text);
            pos += 4;
            return static_cast<uint8_t>((hi << 4) | lo);
        }
        // \\ \] \[ \- \* pass the next char through verbatim
        uint8_t lit = static_cast<uint8_t>(text[pos + 1]);
        pos += 2;
        return lit;
    }

    static int hex_val(char c) {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    }

    std::bitset<256> bits_;
};

} // namespace nfaslim
