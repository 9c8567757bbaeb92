#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nfaslim/nfa.hpp"

namespace nfaslim {

/// Thrown when a state's out-degree exceeds the configured fanout.
class FanoutViolation : public std::runtime_error {
public:
    FanoutViolation(const std::string& state_id, std::size_t degree, int max_fanout)
        : std::runtime_error("fanout violation: state '" + state_id + "' has out-degree " +
                             std::to_string(degree) + " > max_fanout " + std::to_string(max_fanout)),
          state_id_(state_id) {}
    const std::string& state_id() const { return state_id_; }

private:
    std::string state_id_;
};

// Per-state record layout, little-endian:
//   32 bytes  symbol bitmap, bit i = symbol i accepted (byte i/8, bit i%8)
//    1 byte   flags: bit0 start, bit1 accept
//    1 byte   reserved (zero)
//    2 bytes  u16 fanout count
//   4F bytes  u32 destination state indices, unused slots zero
//   2F bytes  u16 Q0.16 scores per slot, unused slots zero
// where F = max_fanout. Slot order follows the transition order of the
// automaton, so the stream is deterministic for a given state order.
inline constexpr std::size_t config_record_bytes(int max_fanout) {
    return 36 + 6 * static_cast<std::size_t>(max_fanout);
}

inline constexpr std::size_t config_record_bits(int max_fanout) {
    return 8 * config_record_bytes(max_fanout);
}

inline uint16_t score_to_q016(double score) {
    if (score <= 0.0) return 0;
    double scaled = std::round(score * 65536.0);
    if (scaled >= 65535.0) return 65535;
    return static_cast<uint16_t>(scaled);
}

inline std::vector<uint8_t> export_config_vectors(const ScoredNfa& nfa, int max_fanout) {
    if (max_fanout < 0) throw std::invalid_argument("max_fanout must be non-negative");
    ValidationReport v = validate(nfa);
    if (!v.ok())
        throw std::invalid_argument("export_config_vectors: invalid automaton: " + v.violations.front().message);

    auto pos = detail::index_states(nfa);
    std::vector<std::vector<std::pair<uint32_t, double>>> slots(nfa.states.size());
    for (const auto& t : nfa.transitions) slots[pos.at(t.from)].emplace_back(pos.at(t.to), t.score);

    for (std::size_t i = 0; i < nfa.states.size(); ++i)
        if (slots[i].size() > static_cast<std::size_t>(max_fanout))
            throw FanoutViolation(nfa.states[i].id, slots[i].size(), max_fanout);

    const std::size_t record = config_record_bytes(max_fanout);
    std::vector<uint8_t> out;
    out.reserve(record * nfa.states.size());

    auto push_u16 = [&](uint16_t v) {
        out.push_back(static_cast<uint8_t>(v & 0xff));
        out.push_back(static_cast<uint8_t>(v >> 8));
    };
    auto push_u32 = [&](uint32_t v) {
        out.push_back(static_cast<uint8_t>(v & 0xff));
        out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
        out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
        out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
    };

    for (std::size_t i = 0; i < nfa.states.size(); ++i) {
        const State& s = nfa.states[i];
        uint8_t bitmap[32] = {0};
        for (int c = 0; c < 256; ++c)
            if (s.symbols.contains(static_cast<uint8_t>(c))) bitmap[c >> 3] |= static_cast<uint8_t>(1u << (c & 7));
        out.insert(out.end(), bitmap, bitmap + 32);
        uint8_t flags = 0;
        if (s.start) flags |= 1u;
        if (s.accept) flags |= 2u;
        out.push_back(flags);
        out.push_back(0); // reserved
        push_u16(static_cast<uint16_t>(slots[i].size()));
        for (int k = 0; k < max_fanout; ++k)
            push_u32(k < static_cast<int>(slots[i].size()) ? slots[i][static_cast<std::size_t>(k)].first : 0u);
        for (int k = 0; k < max_fanout; ++k)
            push_u16(k < static_cast<int>(slots[i].size())
                         ? score_to_q016(slots[i][static_cast<std::size_t>(k)].second)
                         : static_cast<uint16_t>(0));
    }
    return out;
}

} // namespace nfaslim
