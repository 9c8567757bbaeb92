#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "nfaslim/anml.hpp"
#include "nfaslim/nfa.hpp"
#include "nfaslim/rng.hpp"

#include "json.hpp"

namespace nfaslim {

enum class ScoreDistribution { uniform01, exponential, bimodal };

struct GenConfig {
    std::string name = "gen";
    int n_nodes = 1;
    double avg_out_degree = 1.0;
    int max_fanout = 8;
    ScoreDistribution distribution = ScoreDistribution::uniform01;
    double exp_lambda = 4.0;       // exponential rate
    double bimodal_low_p = 0.5;    // probability of the low mode
    double bimodal_lo = 0.1;
    double bimodal_hi = 0.9;
    double start_fraction = 0.01;
    double accept_fraction = 0.05;
    double duplicate_fraction = 0.02; // states cloned from a donor to exercise merging
    uint64_t seed = 1;
};

inline void validate_config(const GenConfig& cfg) {
    if (cfg.n_nodes < 1) throw std::invalid_argument("n_nodes must be >= 1");
    if (!(cfg.avg_out_degree > 0.0)) throw std::invalid_argument("avg_out_degree must be > 0");
    if (cfg.max_fanout < 1) throw std::invalid_argument("max_fanout must be >= 1");
    if (cfg.avg_out_degree > static_cast<double>(cfg.max_fanout))
        throw std::invalid_argument("unsatisfiable density: avg_out_degree exceeds max_fanout");
    auto frac = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!frac(cfg.start_fraction)) throw std::invalid_argument("start_fraction must be in (0, 1]");
    if (!frac(cfg.accept_fraction)) throw std::invalid_argument("accept_fraction must be in (0, 1]");
    if (cfg.duplicate_fraction < 0.0 || cfg.duplicate_fraction > 0.5)
        throw std::invalid_argument("duplicate_fraction must be in [0, 0.5]");
    if (cfg.distribution == ScoreDistribution::exponential && !(cfg.exp_lambda > 0.0))
        throw std::invalid_argument("exp_lambda must be > 0");
    if (cfg.distribution == ScoreDistribution::bimodal) {
        if (cfg.bimodal_low_p < 0.0 || cfg.bimodal_low_p > 1.0)
            throw std::invalid_argument("bimodal_low_p must be in [0, 1]");
        if (cfg.bimodal_lo < 0.0 || cfg.bimodal_hi < 0.0)
            throw std::invalid_argument("bimodal modes must be non-negative");
    }
}

/// Density schedule of the bundled `paper2025` corpus profile: average
/// out-degree decays by a power law from 180 at 1K nodes to 8 at 64K, and
/// the fanout cap tracks roughly 2.5x the average. Sizes off the power-of-two
/// grid are interpolated on the same law.
struct DensityPoint {
    double avg_out_degree;
    int max_fanout;
};

inline DensityPoint paper2025_density(int n_nodes) {
    struct Row {
        int size;
        double avg;
        int cap;
    };
    // 8K pinned at cap 94, the smallest overlay configuration that corpus
    // member has to fit.
    static constexpr Row table[] = {
        {1000, 180.0, 446}, {2000, 107.1, 266}, {4000, 63.8, 158}, {8000, 37.9, 94},
        {16000, 22.6, 56},  {32000, 13.4, 33},  {64000, 8.0, 20},
    };
    for (const Row& r : table)
        if (r.size == n_nodes) return {r.avg, r.cap};
    const double avg = 180.0 * std::pow(static_cast<double>(n_nodes) / 1000.0, -0.7487);
    int cap = std::max(4, static_cast<int>(std::llround(avg * 2.48)));
    return {avg, cap};
}

namespace detail {

inline double quantize_score(double v) {
    if (v < 0.0) v = 0.0;
    return std::llround(v * 1e6) / 1e6;
}

inline double sample_score(const GenConfig& cfg, Rng& rng) {
    switch (cfg.distribution) {
        case ScoreDistribution::uniform01:
            return quantize_score(rng.next_double());
        case ScoreDistribution::exponential:
            return quantize_score(std::min(rng.next_exponential() / cfg.exp_lambda, 1e6));
        case ScoreDistribution::bimodal: {
            double mode = rng.next_bool(cfg.bimodal_low_p) ? cfg.bimodal_lo : cfg.bimodal_hi;
            return quantize_score(mode + (rng.next_double() - 0.5) * 0.1);
        }
    }
    return 0.0;
}

// k distinct indices out of [0, n), by partial Fisher-Yates.
inline std::vector<uint32_t> sample_indices(uint32_t n, uint32_t k, Rng& rng) {
    std::vector<uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (uint32_t i = 0; i < k && i + 1 < n; ++i) {
        uint32_t j = i + static_cast<uint32_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, n));
    return idx;
}

// Integer quotas summing to `total`, proportional to `weights`, each clamped
// to [0, cap]. Largest-remainder rounding, then spill of clamped mass.
inline std::vector<int> allocate_quotas(const std::vector<double>& weights, long long total, int cap) {
    const std::size_t n = weights.size();
    std::vector<int> quota(n, 0);
    if (n == 0 || total <= 0) return quota;
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (wsum <= 0.0) wsum = 1.0;

    std::vector<std::pair<double, uint32_t>> frac;
    frac.reserve(n);
    long long assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double share = static_cast<double>(total) * weights[i] / wsum;
        double clamped = std::min(share, static_cast<double>(cap));
        quota[i] = static_cast<int>(clamped);
        assigned += quota[i];
        frac.emplace_back(clamped - quota[i], static_cast<uint32_t>(i));
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    long long remaining = total - assigned;
    // First pass hands out the fractional units, further passes spill the
    // mass lost to cap clamping to whoever still has headroom.
    while (remaining > 0) {
        bool progress = false;
        for (const auto& [f, i] : frac) {
            if (remaining == 0) break;
            if (quota[i] < cap) {
                quota[i] += 1;
                remaining -= 1;
                progress = true;
            }
        }
        if (!progress) break; // everyone at cap
    }
    return quota;
}

} // namespace detail

/// Generates a synthetic scored automaton. Deterministic for a fixed config;
/// state count is exact and the transition count hits n_nodes *
/// avg_out_degree exactly whenever the fanout cap leaves room (always within
/// the documented 2% otherwise). Destinations are sampled with a locality
/// bias (within a window around the source index with probability 0.8) and a
/// small fraction of states are exact clones of a donor state so structural
/// cleanup has real work to do.
inline ScoredNfa generate(const GenConfig& cfg) {
    validate_config(cfg);
    Rng rng(cfg.seed);
    const uint32_t n = static_cast<uint32_t>(cfg.n_nodes);
    const int cap = cfg.max_fanout;
    const long long m_total = std::llround(static_cast<double>(n) * cfg.avg_out_degree);

    ScoredNfa nfa;
    nfa.id = cfg.name;
    nfa.alphabet_size = 256;
    nfa.states.resize(n);

    for (uint32_t i = 0; i < n; ++i) {
        State& s = nfa.states[i];
        s.id = "ste_" + std::to_string(i);
        double r = rng.next_double();
        int n_syms = r < 0.05 ? -1 : r < 0.65 ? 1 : r < 0.85 ? 2 : 4;
        if (n_syms < 0) {
            s.symbols = SymbolSet::all();
        } else {
            for (int k = 0; k < n_syms; ++k) s.symbols.add(static_cast<uint8_t>(rng.next_below(256)));
        }
    }

    const uint32_t n_start = std::max<uint32_t>(1, static_cast<uint32_t>(std::llround(cfg.start_fraction * n)));
    const uint32_t n_accept = std::max<uint32_t>(1, static_cast<uint32_t>(std::llround(cfg.accept_fraction * n)));
    for (uint32_t i : detail::sample_indices(n, n_start, rng)) nfa.states[i].start = true;
    for (uint32_t i : detail::sample_indices(n, n_accept, rng)) nfa.states[i].accept = true;

    // Duplicate designation: dup states clone a donor's symbol set, flags and
    // outgoing edges. Donors are disjoint from dups.
    uint32_t k_dup = static_cast<uint32_t>(std::llround(cfg.duplicate_fraction * n));
    if (k_dup * 2 > n) k_dup = n / 2;
    std::vector<uint32_t> shuffled = detail::sample_indices(n, n, rng);
    std::vector<int32_t> donor_of(n, -1);
    std::vector<bool> is_dup(n, false), is_donor(n, false);
    for (uint32_t d = 0; d < k_dup; ++d) {
        uint32_t dup = shuffled[d];
        uint32_t donor = shuffled[k_dup + rng.next_below(n - k_dup)];
        donor_of[dup] = static_cast<int32_t>(donor);
        is_dup[dup] = true;
        is_donor[donor] = true;
        nfa.states[dup].symbols = nfa.states[donor].symbols;
        nfa.states[dup].start = nfa.states[donor].start;
        nfa.states[dup].accept = nfa.states[donor].accept;
    }

    // Out-degree quotas for non-dup states; dups inherit the donor's edges.
    std::vector<uint32_t> nondup;
    nondup.reserve(n - k_dup);
    for (uint32_t i = 0; i < n; ++i)
        if (!is_dup[i]) nondup.push_back(i);
    std::vector<double> weights(nondup.size(), 1.0);
    for (std::size_t j = 0; j < nondup.size(); ++j) {
        bool hub = rng.next_bool(0.025);
        weights[j] = hub ? (0.55 + 0.45 * rng.next_double()) * cap
                         : (0.3 + 1.4 * rng.next_double()) * cfg.avg_out_degree;
    }
    long long m_nondup = m_total - std::llround(static_cast<double>(k_dup) * cfg.avg_out_degree);
    std::vector<int> quotas = detail::allocate_quotas(weights, std::max(0LL, m_nondup), cap);

    const int64_t window = std::max<int64_t>(8, n / 32);
    std::vector<std::vector<std::pair<uint32_t, double>>> out_edges(n);
    std::unordered_set<uint64_t> seen; // per-source (dest, quantized score) guard

    auto draw_edge = [&](uint32_t src) {
        uint32_t dst;
        if (rng.next_bool(0.8)) {
            int64_t delta = rng.next_range(-window, window);
            int64_t j = (static_cast<int64_t>(src) + delta) % static_cast<int64_t>(n);
            if (j < 0) j += n;
            dst = static_cast<uint32_t>(j);
        } else {
            dst = static_cast<uint32_t>(rng.next_below(n));
        }
        double score = detail::sample_score(cfg, rng);
        auto key = [&](double s) {
            return (static_cast<uint64_t>(dst) << 34) ^ static_cast<uint64_t>(std::llround(s * 1e6));
        };
        for (int tries = 0; tries < 16 && !seen.insert(key(score)).second; ++tries)
            score = detail::sample_score(cfg, rng);
        while (seen.count(key(score))) score = detail::quantize_score(score + 1e-6);
        seen.insert(key(score));
        out_edges[src].emplace_back(dst, score);
    };

    for (std::size_t j = 0; j < nondup.size(); ++j) {
        uint32_t src = nondup[j];
        seen.clear();
        for (int e = 0; e < quotas[j]; ++e) draw_edge(src);
    }
    for (uint32_t i = 0; i < n; ++i)
        if (is_dup[i]) out_edges[i] = out_edges[static_cast<uint32_t>(donor_of[i])];

    // Exact-total correction on states that are neither donors nor dups, so
    // clone pairs stay structurally identical.
    long long actual = 0;
    for (const auto& v : out_edges) actual += static_cast<long long>(v.size());
    std::vector<uint32_t> adjustable;
    for (uint32_t i : nondup)
        if (!is_donor[i]) adjustable.push_back(i);
    std::size_t cursor = 0;
    int guard = 0;
    while (actual != m_total && !adjustable.empty() && guard++ < 4 * cfg.n_nodes + 1000) {
        uint32_t src = adjustable[cursor % adjustable.size()];
        ++cursor;
        if (actual < m_total) {
            if (static_cast<int>(out_edges[src].size()) < cap) {
                seen.clear();
                for (const auto& [d, s] : out_edges[src])
                    seen.insert((static_cast<uint64_t>(d) << 34) ^ static_cast<uint64_t>(std::llround(s * 1e6)));
                draw_edge(src);
                ++actual;
            }
        } else {
            if (!out_edges[src].empty()) {
                out_edges[src].pop_back();
                --actual;
            }
        }
    }

    nfa.transitions.reserve(static_cast<std::size_t>(actual));
    for (uint32_t i = 0; i < n; ++i)
        for (const auto& [dst, score] : out_edges[i])
            nfa.transitions.push_back({nfa.states[i].id, nfa.states[dst].id, score});
    return nfa;
}

// ---------------------------------------------------------------------------
// Corpus generation

struct ManifestEntry {
    std::string path;
    int size = 0;
    uint64_t seed = 0;
    std::size_t n_states = 0;
    std::size_t n_transitions = 0;
    std::string error; // empty on success
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    bool ok() const {
        for (const auto& e : entries)
            if (!e.error.empty()) return false;
        return true;
    }
};

inline uint64_t corpus_file_seed(uint64_t base, int size, int index) {
    uint64_t x = base;
    auto mix = [&x](uint64_t v) {
        x ^= v + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        x = z ^ (z >> 31);
    };
    mix(static_cast<uint64_t>(size));
    mix(static_cast<uint64_t>(index) + 0x51ed270b0a5ef391ULL);
    return x;
}

inline nlohmann::json manifest_to_json(const CorpusManifest& manifest) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::json row = {
            {"path", e.path},
            {"size", e.size},
            {"seed", e.seed},
            {"n_states", e.n_states},
            {"n_transitions", e.n_transitions},
        };
        if (!e.error.empty()) row["error"] = e.error;
        arr.push_back(std::move(row));
    }
    return arr;
}

/// Writes files_per_size automata per requested size under out_dir, named
/// `g{size}_{index}.anml`. With use_density_profile, avg_out_degree and
/// max_fanout follow the paper2025 schedule per size; otherwise the template
/// values apply to every size. Per-file seeds derive from the template seed,
/// so reruns are byte-identical. I/O or generation failures are recorded per
/// entry and do not stop the run.
inline CorpusManifest generate_corpus(const GenConfig& tmpl, const std::vector<int>& sizes,
                                      int files_per_size, const std::string& out_dir,
                                      bool use_density_profile = true) {
    namespace fs = std::filesystem;
    CorpusManifest manifest;
    fs::create_directories(out_dir);
    for (int size : sizes) {
        for (int index = 0; index < files_per_size; ++index) {
            GenConfig cfg = tmpl;
            cfg.n_nodes = size;
            if (use_density_profile) {
                DensityPoint d = paper2025_density(size);
                cfg.avg_out_degree = d.avg_out_degree;
                cfg.max_fanout = d.max_fanout;
            }
            cfg.name = "g" + std::to_string(size) + "_" + std::to_string(index);
            cfg.seed = corpus_file_seed(tmpl.seed, size, index);

            ManifestEntry entry;
            entry.path = cfg.name + ".anml";
            entry.size = size;
            entry.seed = cfg.seed;
            try {
                ScoredNfa nfa = generate(cfg);
                entry.n_states = nfa.states.size();
                entry.n_transitions = nfa.transitions.size();
                write_anml_file((fs::path(out_dir) / entry.path).string(), nfa);
            } catch (const std::exception& e) {
                entry.error = e.what();
            }
            manifest.entries.push_back(std::move(entry));
        }
    }
    std::ofstream mf(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write manifest.json under " + out_dir);
    mf << manifest_to_json(manifest).dump(2) << '\n';
    return manifest;
}

} // namespace nfaslim
