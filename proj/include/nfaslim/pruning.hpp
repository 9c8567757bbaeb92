#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nfaslim/features.hpp"
#include "nfaslim/forest.hpp"
#include "nfaslim/nfa.hpp"

namespace nfaslim {

struct PruneConfig {
    double theta = 0.35;
    FeatureMask mask;   // features the classifier sees
    RfConfig rf;
    bool enable_merge = true;
    bool enable_reachability = true;
    double train_fraction = 0.7;
};

inline void validate_config(const PruneConfig& cfg) {
    if (!std::isfinite(cfg.theta)) throw std::invalid_argument("theta must be finite");
    if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    validate_config(cfg.rf);
}

/// Raw strict-threshold count: what survives if the oracle 1[score > theta]
/// prunes directly.
struct EstimateReport {
    std::size_t estimated_kept_transitions = 0;
    double estimated_ratio = 1.0; // kept fraction
};

inline EstimateReport threshold_estimate(const ScoredNfa& nfa, double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    EstimateReport r;
    for (const auto& t : nfa.transitions)
        if (t.score > theta) r.estimated_kept_transitions += 1;
    r.estimated_ratio = nfa.transitions.empty()
                            ? 1.0
                            : static_cast<double>(r.estimated_kept_transitions) /
                                  static_cast<double>(nfa.transitions.size());
    return r;
}

struct CleanupStats {
    std::size_t removed_states = 0;
    std::size_t removed_transitions = 0;
    bool warned_no_accept = false;
};

/// Keeps exactly the states that are forward-reachable from some start state
/// and backward-reachable from some accept state, restricting transitions
/// accordingly. Every accepting path survives intact, so the accepted
/// language and per-input minimum costs are unchanged. With no accept state
/// the result is the empty automaton (flagged in stats).
inline ScoredNfa remove_unreachable(const ScoredNfa& nfa, CleanupStats* stats = nullptr) {
    ValidationReport val = validate(nfa);
    if (!val.ok())
        throw std::invalid_argument("remove_unreachable: invalid automaton: " + val.violations.front().message);

    ScoredNfa out;
    out.id = nfa.id;
    out.alphabet_size = nfa.alphabet_size;
    if (nfa.states.empty()) return out;

    bool any_start = false, any_accept = false;
    for (const auto& s : nfa.states) {
        any_start = any_start || s.start;
        any_accept = any_accept || s.accept;
    }
    if (!any_start) throw std::runtime_error("remove_unreachable: automaton has no start state");
    if (!any_accept) {
        if (stats) {
            stats->warned_no_accept = true;
            stats->removed_states = nfa.states.size();
            stats->removed_transitions = nfa.transitions.size();
        }
        return out;
    }

    NfaIndex index(nfa);
    const std::size_t n = nfa.states.size();
    std::vector<bool> fwd(n, false), bwd(n, false);
    std::deque<uint32_t> queue;

    for (uint32_t i = 0; i < n; ++i)
        if (nfa.states[i].start) {
            fwd[i] = true;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        uint32_t u = queue.front();
        queue.pop_front();
        for (const auto& [v, score] : index.out[u])
            if (!fwd[v]) {
                fwd[v] = true;
                queue.push_back(v);
            }
    }
    for (uint32_t i = 0; i < n; ++i)
        if (nfa.states[i].accept) {
            bwd[i] = true;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        uint32_t u = queue.front();
        queue.pop_front();
        for (const auto& [v, score] : index.in[u])
            if (!bwd[v]) {
                bwd[v] = true;
                queue.push_back(v);
            }
    }

    std::vector<bool> keep(n);
    for (uint32_t i = 0; i < n; ++i) keep[i] = fwd[i] && bwd[i];

    std::unordered_set<std::string> kept_ids;
    for (uint32_t i = 0; i < n; ++i)
        if (keep[i]) {
            out.states.push_back(nfa.states[i]);
            kept_ids.insert(nfa.states[i].id);
        }
    for (const auto& t : nfa.transitions)
        if (kept_ids.count(t.from) && kept_ids.count(t.to)) out.transitions.push_back(t);

    if (stats) {
        stats->removed_states += nfa.states.size() - out.states.size();
        stats->removed_transitions += nfa.transitions.size() - out.transitions.size();
    }
    return out;
}

namespace detail {

// Grouping key for merge candidates: symbol set, flags and the canonical
// outgoing multiset with self-loops mapped to a sentinel so structurally
// identical self-looping states compare equal.
inline std::string merge_key(const ScoredNfa& nfa, const NfaIndex& index, uint32_t state) {
    const State& s = nfa.states[state];
    std::string key = s.symbols.key();
    key += s.start ? '\x01' : '\x00';
    key += s.accept ? '\x01' : '\x00';
    std::vector<std::pair<uint32_t, double>> edges = index.out[state];
    constexpr uint32_t kSelf = 0xffffffffu;
    for (auto& [dst, score] : edges)
        if (dst == state) dst = kSelf;
    std::sort(edges.begin(), edges.end());
    key.reserve(key.size() + edges.size() * 12);
    for (const auto& [dst, score] : edges) {
        key.append(reinterpret_cast<const char*>(&dst), sizeof(dst));
        key.append(reinterpret_cast<const char*>(&score), sizeof(score));
    }
    return key;
}

} // namespace detail

/// Iterates to fixpoint: states with identical symbol set, flags and
/// outgoing (destination, score) multiset are merged into the earliest such
/// state; incoming edges are redirected and parallel edges that become exact
/// duplicates collapse. Accepted language and per-input min costs are
/// preserved, since any path through a merged state maps edge-for-edge onto
/// the representative.
inline ScoredNfa merge_duplicates(const ScoredNfa& nfa, CleanupStats* stats = nullptr) {
    ValidationReport val = validate(nfa);
    if (!val.ok())
        throw std::invalid_argument("merge_duplicates: invalid automaton: " + val.violations.front().message);

    ScoredNfa cur = nfa;
    while (true) {
        NfaIndex index(cur);
        std::unordered_map<std::string, uint32_t> rep_by_key;
        std::vector<uint32_t> rep(cur.states.size());
        bool merged_any = false;
        for (uint32_t i = 0; i < cur.states.size(); ++i) {
            std::string key = detail::merge_key(cur, index, i);
            auto [it, inserted] = rep_by_key.emplace(std::move(key), i);
            rep[i] = it->second;
            merged_any = merged_any || !inserted;
        }
        if (!merged_any) break;

        ScoredNfa next;
        next.id = cur.id;
        next.alphabet_size = cur.alphabet_size;
        std::unordered_map<std::string, std::string> id_remap;
        for (uint32_t i = 0; i < cur.states.size(); ++i) {
            id_remap[cur.states[i].id] = cur.states[rep[i]].id;
            if (rep[i] == i) next.states.push_back(cur.states[i]);
        }

        auto pos = detail::index_states(cur);
        std::unordered_set<std::string> seen_edges;
        for (const auto& t : cur.transitions) {
            if (rep[pos.at(t.from)] != pos.at(t.from)) continue; // source merged away, its copy survives at the rep
            const std::string& to = id_remap.at(t.to);
            std::string edge_key = t.from + '\x1f' + to + '\x1f';
            edge_key.append(reinterpret_cast<const char*>(&t.score), sizeof(t.score));
            if (!seen_edges.insert(std::move(edge_key)).second) continue;
            next.transitions.push_back({t.from, to, t.score});
        }

        if (stats) {
            stats->removed_states += cur.states.size() - next.states.size();
            stats->removed_transitions += cur.transitions.size() - next.transitions.size();
        }
        cur = std::move(next);
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Classification pruning

struct PruneReport {
    std::size_t nodes_before = 0;
    std::size_t nodes_after = 0;
    std::size_t transitions_before = 0;
    std::size_t transitions_after = 0;
    std::size_t classifier_kept = 0; // transitions the model kept, before structural cleanup
    double prune_ratio = 0.0;        // 1 - transitions_after / transitions_before
    double model_accuracy = 1.0;     // cross-validation mean
    bool model_degenerate = false;
    std::size_t accept_states_before = 0;
    std::size_t accept_states_after = 0;
    bool accept_states_preserved = true;
    double edge_coverage = 1.0; // retained score mass / original score mass
    int64_t wall_time_ms = 0;
    bool cleanup_warned_no_accept = false;
};

/// The exact threshold rule as a forest: one stump splitting the score at
/// theta, so predictions are 1[score > theta] with no boundary band. Used by
/// oracle-only pruning runs and as the reference classifier in tests.
inline ForestModel make_threshold_oracle(double theta, FeatureMask mask = FeatureMask::score_only()) {
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    ForestModel model;
    model.mask = mask;
    model.theta = theta;
    model.config.n_trees = 1;
    DecisionTree tree;
    TreeNode root;
    root.feature = kFeatureScore;
    root.threshold = theta;
    root.left = 1;
    root.right = 2;
    tree.nodes.push_back(root);
    TreeNode left;  // score <= theta: drop
    left.n0 = 1;
    TreeNode right; // score > theta: keep
    right.n1 = 1;
    tree.nodes.push_back(left);
    tree.nodes.push_back(right);
    model.trees.push_back(std::move(tree));
    return model;
}

struct PruneOutcome {
    ScoredNfa nfa;
    PruneReport report;
};

/// Classifies every transition, drops the label-0 ones, then merges
/// duplicates and removes unreachable states, in that order: pruning is what
/// opens up the unreachable pockets. The input automaton is untouched.
/// When model_accuracy is not supplied it is measured by stratified
/// cross-validation of cfg.rf against the theta labels.
inline PruneOutcome prune(const ScoredNfa& nfa, const ForestModel& model, const PruneConfig& cfg,
                          std::optional<double> model_accuracy = std::nullopt) {
    validate_config(cfg);
    if (model.mask != cfg.mask)
        throw std::invalid_argument("prune: model feature mask (" + model.mask.to_string() +
                                    ") does not match config mask (" + cfg.mask.to_string() + ")");
    const auto t_begin = std::chrono::steady_clock::now();

    PruneOutcome out;
    PruneReport& rep = out.report;
    rep.nodes_before = nfa.states.size();
    rep.transitions_before = nfa.transitions.size();
    for (const auto& s : nfa.states) rep.accept_states_before += s.accept ? 1 : 0;
    rep.model_degenerate = model.degenerate;

    std::vector<FeatureVector> features = extract_features(nfa);

    ScoredNfa kept;
    kept.id = nfa.id;
    kept.alphabet_size = nfa.alphabet_size;
    kept.states = nfa.states;
    double mass_before = 0.0;
    for (std::size_t i = 0; i < nfa.transitions.size(); ++i) {
        mass_before += nfa.transitions[i].score;
        if (predict(model, features[i]) == 1) kept.transitions.push_back(nfa.transitions[i]);
    }
    rep.classifier_kept = kept.transitions.size();

    CleanupStats cleanup;
    if (cfg.enable_merge) kept = merge_duplicates(kept, &cleanup);
    if (cfg.enable_reachability) kept = remove_unreachable(kept, &cleanup);
    rep.cleanup_warned_no_accept = cleanup.warned_no_accept;

    rep.nodes_after = kept.states.size();
    rep.transitions_after = kept.transitions.size();
    rep.prune_ratio = rep.transitions_before == 0
                          ? 0.0
                          : 1.0 - static_cast<double>(rep.transitions_after) /
                                      static_cast<double>(rep.transitions_before);
    for (const auto& s : kept.states) rep.accept_states_after += s.accept ? 1 : 0;
    rep.accept_states_preserved = rep.accept_states_after == rep.accept_states_before;
    double mass_after = 0.0;
    for (const auto& t : kept.transitions) mass_after += t.score;
    rep.edge_coverage = mass_before > 0.0 ? mass_after / mass_before : 1.0;

    if (model_accuracy.has_value()) {
        rep.model_accuracy = *model_accuracy;
    } else {
        TrainingSet labeled = label_dataset(features, cfg.theta, cfg.mask);
        int k = static_cast<int>(std::min<std::size_t>(5, labeled.samples.size()));
        if (k >= 2) {
            rep.model_accuracy = cross_validate(labeled, k, cfg.rf).mean_accuracy;
        } else {
            rep.model_accuracy = 1.0; // too few samples to hold anything out
        }
    }

    rep.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t_begin)
                           .count();
    out.nfa = std::move(kept);
    return out;
}

} // namespace nfaslim
