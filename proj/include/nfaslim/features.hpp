#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nfaslim/nfa.hpp"

namespace nfaslim {

// Global feature order; tree nodes store these indices.
enum Feature : int {
    kFeatureScore = 0,
    kFeatureSrcOutDegree = 1,
    kFeatureDstInDegree = 2,
    kFeatureSrcTotalScore = 3,
    kFeatureDstTotalScore = 4,
    kFeatureCount = 5,
};

inline const char* feature_name(int f) {
    static const char* names[kFeatureCount] = {"score", "src_out_degree", "dst_in_degree",
                                               "src_total_score", "dst_total_score"};
    if (f < 0 || f >= kFeatureCount) throw std::invalid_argument("bad feature index");
    return names[f];
}

/// Which transition features participate in training/classification. The
/// default is the edge score alone.
class FeatureMask {
public:
    static FeatureMask score_only() { return FeatureMask(1u << kFeatureScore); }
    static FeatureMask all() { return FeatureMask((1u << kFeatureCount) - 1); }

    FeatureMask() : bits_(1u << kFeatureScore) {}
    explicit FeatureMask(uint8_t bits) : bits_(bits) {}

    bool enabled(int f) const { return (bits_ >> f) & 1u; }
    void enable(int f) { bits_ |= static_cast<uint8_t>(1u << f); }
    int count() const {
        int c = 0;
        for (int f = 0; f < kFeatureCount; ++f) c += enabled(f);
        return c;
    }
    std::vector<int> enabled_features() const {
        std::vector<int> v;
        for (int f = 0; f < kFeatureCount; ++f)
            if (enabled(f)) v.push_back(f);
        return v;
    }
    uint8_t bits() const { return bits_; }
    bool operator==(const FeatureMask& o) const { return bits_ == o.bits_; }
    bool operator!=(const FeatureMask& o) const { return bits_ != o.bits_; }

    std::string to_string() const {
        std::string s;
        for (int f = 0; f < kFeatureCount; ++f) {
            if (!enabled(f)) continue;
            if (!s.empty()) s += ',';
            s += feature_name(f);
        }
        return s.empty() ? "none" : s;
    }

    /// Accepts a comma list of feature names plus the shorthands `degrees`,
    /// `totals` and `all`.
    static FeatureMask parse(const std::string& text) {
        FeatureMask m(0);
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t comma = text.find(',', start);
            std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (tok == "score") {
                m.enable(kFeatureScore);
            } else if (tok == "degrees") {
                m.enable(kFeatureSrcOutDegree);
                m.enable(kFeatureDstInDegree);
            } else if (tok == "totals") {
                m.enable(kFeatureSrcTotalScore);
                m.enable(kFeatureDstTotalScore);
            } else if (tok == "all") {
                m = all();
            } else {
                bool found = false;
                for (int f = 0; f < kFeatureCount; ++f)
                    if (tok == feature_name(f)) {
                        m.enable(f);
                        found = true;
                    }
                if (!found) throw std::invalid_argument("unknown feature '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (m.count() == 0) throw std::invalid_argument("feature mask is empty");
        return m;
    }

private:
    uint8_t bits_;
};

/// Per-transition feature vector, index-aligned with nfa.transitions. All
/// fields are always populated; the mask decides which ones a model sees.
struct FeatureVector {
    double score = 0.0;
    int src_out_degree = 0;
    int dst_in_degree = 0;
    double src_total_score = 0.0;
    double dst_total_score = 0.0;

    double get(int f) const {
        switch (f) {
            case kFeatureScore: return score;
            case kFeatureSrcOutDegree: return src_out_degree;
            case kFeatureDstInDegree: return dst_in_degree;
            case kFeatureSrcTotalScore: return src_total_score;
            case kFeatureDstTotalScore: return dst_total_score;
        }
        throw std::invalid_argument("bad feature index");
    }
};

struct LabeledSample {
    FeatureVector features;
    int label = 0; // 1 = keep
};

struct TrainingSet {
    std::vector<LabeledSample> samples;
    double theta = 0.0;
    FeatureMask mask;
};

inline std::vector<FeatureVector> extract_features(const ScoredNfa& nfa) {
    auto pos = detail::index_states(nfa);
    std::vector<NodeStats> stats = node_stats(nfa);
    std::vector<FeatureVector> out;
    out.reserve(nfa.transitions.size());
    for (const auto& t : nfa.transitions) {
        const NodeStats& src = stats[pos.at(t.from)];
        const NodeStats& dst = stats[pos.at(t.to)];
        out.push_back({t.score, src.out_degree, dst.in_degree, src.total_score, dst.total_score});
    }
    return out;
}

inline std::vector<FeatureVector> extract_features(const ScoredNfa& nfa, const FeatureMask&) {
    // The mask is recorded by the caller in the TrainingSet; vectors always
    // carry every field.
    return extract_features(nfa);
}

/// Label y = 1 iff score > theta, strictly.
inline TrainingSet label_dataset(const std::vector<FeatureVector>& features, double theta,
                                 FeatureMask mask = FeatureMask::score_only()) {
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    TrainingSet set;
    set.theta = theta;
    set.mask = mask;
    set.samples.reserve(features.size());
    for (const auto& f : features) set.samples.push_back({f, f.score > theta ? 1 : 0});
    return set;
}

} // namespace nfaslim
