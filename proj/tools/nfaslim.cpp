// Command-line front end: batch generation, pruning, verification, cost
// modeling and config-vector export for scored automata. All outputs are
// files and reports; exit status 0 means the emitted report contains no
// errors or violations.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "nfaslim/nfaslim.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Optional defaults file: NFASLIM_CONFIG points at a JSON object that may
// carry {"seed": .., "theta": .., "jobs": .., "hw": {cost params}}.
json load_env_config() {
    const char* path = std::getenv("NFASLIM_CONFIG");
    if (!path || !*path) return json::object();
    try {
        return json::parse(nfaslim::read_file(path));
    } catch (const std::exception& e) {
        std::cerr << "warning: ignoring NFASLIM_CONFIG (" << e.what() << ")\n";
        return json::object();
    }
}

std::vector<int> parse_sizes(const std::string& text) {
    std::vector<int> sizes;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) {
            int mult = 1;
            if (tok.back() == 'k' || tok.back() == 'K') {
                mult = 1000;
                tok.pop_back();
            }
            sizes.push_back(std::stoi(tok) * mult);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (sizes.empty()) throw CLI::ValidationError("--sizes", "no sizes given");
    return sizes;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) values.push_back(std::stoi(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

nfaslim::CostParams cost_params_from_json(nfaslim::CostParams base, const json& j) {
    if (j.contains("lut_per_state")) base.lut_per_state = j["lut_per_state"].get<double>();
    if (j.contains("lut_per_fanout_slot")) base.lut_per_fanout_slot = j["lut_per_fanout_slot"].get<double>();
    if (j.contains("reg_per_state")) base.reg_per_state = j["reg_per_state"].get<double>();
    if (j.contains("reg_per_fanout_slot")) base.reg_per_fanout_slot = j["reg_per_fanout_slot"].get<double>();
    if (j.contains("uram_bits_per_block")) base.uram_bits_per_block = j["uram_bits_per_block"].get<int64_t>();
    if (j.contains("bits_per_transition")) base.bits_per_transition = j["bits_per_transition"].get<int>();
    if (j.contains("base_cycles_per_symbol"))
        base.base_cycles_per_symbol = j["base_cycles_per_symbol"].get<int>();
    if (j.contains("serialization_penalty"))
        base.serialization_penalty = j["serialization_penalty"].get<double>();
    if (j.contains("routing_penalty_per_fanout"))
        base.routing_penalty_per_fanout = j["routing_penalty_per_fanout"].get<double>();
    return base;
}

struct VerifyPair {
    std::string name;
    fs::path original;
    fs::path pruned;
};

std::vector<VerifyPair> collect_verify_pairs(const std::string& original, const std::string& pruned) {
    std::vector<VerifyPair> pairs;
    if (fs::is_directory(original)) {
        if (!fs::is_directory(pruned))
            throw std::runtime_error("--pruned must be a directory when --original is one");
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(original)) {
            std::string name = e.path().filename().string();
            if (e.is_regular_file() && name.ends_with(".anml") && !name.ends_with(".pruned.anml"))
                files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::string stem = f.filename().string();
            stem = stem.substr(0, stem.size() - 5);
            for (const std::string& candidate : {stem + ".pruned.anml", stem + ".anml"}) {
                fs::path p = fs::path(pruned) / candidate;
                if (fs::exists(p)) {
                    pairs.push_back({stem, f, p});
                    break;
                }
            }
        }
        if (pairs.empty()) throw std::runtime_error("no original/pruned pairs found");
        return pairs;
    }
    pairs.push_back({fs::path(original).filename().string(), original, pruned});
    return pairs;
}

int cmd_generate(const std::string& out_dir, const std::string& sizes_text, int count,
                 const std::string& profile, double avg_degree, int max_fanout,
                 const std::string& dist, double start_frac, double accept_frac, double dup_frac,
                 uint64_t seed) {
    nfaslim::GenConfig tmpl;
    tmpl.seed = seed;
    tmpl.start_fraction = start_frac;
    tmpl.accept_fraction = accept_frac;
    tmpl.duplicate_fraction = dup_frac;
    bool use_profile = profile == "paper2025";
    if (!profile.empty() && !use_profile) {
        std::cerr << "error: unknown generator profile '" << profile << "'\n";
        return kExitUsage;
    }
    if (!use_profile) {
        if (avg_degree <= 0.0 || max_fanout <= 0) {
            std::cerr << "error: either --profile paper2025 or both --avg-degree and --max-fanout are required\n";
            return kExitUsage;
        }
        tmpl.avg_out_degree = avg_degree;
        tmpl.max_fanout = max_fanout;
    }
    if (dist == "uniform01") {
        tmpl.distribution = nfaslim::ScoreDistribution::uniform01;
    } else if (dist == "exponential") {
        tmpl.distribution = nfaslim::ScoreDistribution::exponential;
    } else if (dist == "bimodal") {
        tmpl.distribution = nfaslim::ScoreDistribution::bimodal;
    } else {
        std::cerr << "error: unknown score distribution '" << dist << "'\n";
        return kExitUsage;
    }

    std::vector<int> sizes = parse_sizes(sizes_text);
    nfaslim::CorpusManifest manifest =
        nfaslim::generate_corpus(tmpl, sizes, count, out_dir, use_profile);
    std::size_t failures = 0;
    for (const auto& e : manifest.entries)
        if (!e.error.empty()) {
            ++failures;
            std::cerr << "error: " << e.path << ": " << e.error << "\n";
        }
    std::cout << "wrote " << (manifest.entries.size() - failures) << " files + manifest.json under "
              << out_dir << "\n";
    return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_prune(const std::string& in_dir, const std::string& out_dir, const nfaslim::PipelineConfig& cfg) {
    nfaslim::PipelineResult result = nfaslim::run_pipeline(in_dir, out_dir, cfg);
    std::size_t failures = 0;
    for (const auto& f : result.files) {
        if (!f.ok()) {
            ++failures;
            std::cerr << "error: " << f.file << ": " << f.error << "\n";
            continue;
        }
        std::printf("%s: %zu -> %zu transitions (ratio %.4f, accuracy %.4f)\n", f.file.c_str(),
                    f.report.transitions_before, f.report.transitions_after, f.report.prune_ratio,
                    f.report.model_accuracy);
    }
    std::cout << "summary: " << result.summary_csv_path << "\n";
    return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_verify(const std::string& original, const std::string& pruned, double theta,
               const nfaslim::TrialConfig& trial, const std::string& report_path) {
    auto pairs = collect_verify_pairs(original, pruned);
    json reports = json::array();
    std::size_t total_violations = 0;
    for (const auto& pair : pairs) {
        nfaslim::ScoredNfa orig = nfaslim::read_anml_file(pair.original.string());
        nfaslim::ScoredNfa prun = nfaslim::read_anml_file(pair.pruned.string());
        nfaslim::EquivalenceReport rep = nfaslim::check_equivalence(orig, prun, theta, trial);
        total_violations += rep.subset_violations + rep.completeness_violations + rep.cost_mismatches;
        json entry = nfaslim::equivalence_report_to_json(rep);
        entry["pair"] = pair.name;
        reports.push_back(std::move(entry));
        std::printf("%s: %zu inputs, %zu subset, %zu completeness, %zu cost\n", pair.name.c_str(),
                    rep.inputs_checked, rep.subset_violations, rep.completeness_violations,
                    rep.cost_mismatches);
    }
    if (!report_path.empty()) {
        nfaslim::write_file(report_path, json{{"theta", theta}, {"pairs", std::move(reports)}}.dump(2) + "\n");
        std::cout << "report: " << report_path << "\n";
    }
    return total_violations == 0 ? kExitOk : kExitFailure;
}

int cmd_cost(const std::string& in_path, int max_fanout, const std::string& sweep_text,
             const nfaslim::CostParams& params, int64_t input_len, const std::string& out_path) {
    nfaslim::ScoredNfa nfa = nfaslim::read_anml_file(in_path);
    std::vector<int> fanouts;
    if (!sweep_text.empty()) {
        fanouts = parse_int_list(sweep_text);
    } else {
        if (max_fanout <= 0) {
            nfaslim::NfaIndex index(nfa);
            max_fanout = static_cast<int>(std::max(1u, index.max_out_degree()));
        }
        fanouts.push_back(max_fanout);
    }
    auto rows = nfaslim::fanout_sweep(nfa, fanouts, params);
    bool failed = false;
    for (auto& row : rows) {
        if (row.estimate && input_len != 1) {
            auto [lo, hi] = nfaslim::latency_bounds(nfa, row.fanout, input_len, params);
            row.estimate->min_latency_cycles = lo;
            row.estimate->max_latency_cycles = hi;
        }
        if (!row.estimate) {
            failed = true;
            std::cerr << "error: fanout " << row.fanout << ": " << row.error << "\n";
        }
    }
    std::string csv = nfaslim::sweep_to_csv(rows);
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        nfaslim::write_file(out_path, csv);
        std::cout << "wrote " << out_path << "\n";
    }
    return failed ? kExitFailure : kExitOk;
}

int cmd_export(const std::string& in_path, int max_fanout, const std::string& out_path) {
    nfaslim::ScoredNfa nfa = nfaslim::read_anml_file(in_path);
    std::vector<uint8_t> bytes = nfaslim::export_config_vectors(nfa, max_fanout);
    nfaslim::write_file(out_path,
                        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    std::cout << "wrote " << bytes.size() << " bytes (" << nfa.states.size() << " records of "
              << nfaslim::config_record_bytes(max_fanout) << " bytes) to " << out_path << "\n";
    return kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in_dir)) {
        if (e.is_regular_file() && e.path().filename().string().ends_with(".report.json"))
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<nfaslim::FileReport> reports;
    for (const auto& f : files)
        reports.push_back(nfaslim::file_report_from_json(json::parse(nfaslim::read_file(f.string()))));
    fs::create_directories(out_dir);
    nfaslim::write_summary(reports, out_dir);
    std::cout << "aggregated " << reports.size() << " reports into " << out_dir << "/summary.{json,csv}\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scored-NFA toolkit: generate, prune, verify, cost-model and export automata"};
    app.require_subcommand(1);

    json env = load_env_config();
    uint64_t default_seed = env.value("seed", 1ULL);
    int default_jobs = env.value("jobs", 0);

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic scored-automata corpus");
    std::string gen_out, gen_sizes = "1k", gen_profile, gen_dist = "uniform01";
    int gen_count = 10, gen_max_fanout = 0;
    double gen_avg = 0.0, gen_start = 0.01, gen_accept = 0.05, gen_dup = 0.02;
    uint64_t gen_seed = default_seed;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--sizes", gen_sizes, "comma list of node counts (k suffix allowed), default 1k");
    gen->add_option("--count", gen_count, "files per size (default 10)");
    gen->add_option("--profile", gen_profile, "density profile: paper2025");
    gen->add_option("--avg-degree", gen_avg, "average out-degree (without --profile)");
    gen->add_option("--max-fanout", gen_max_fanout, "out-degree cap (without --profile)");
    gen->add_option("--dist", gen_dist, "score distribution: uniform01|exponential|bimodal");
    gen->add_option("--start-frac", gen_start, "fraction of start states (default 0.01)");
    gen->add_option("--accept-frac", gen_accept, "fraction of accepting states (default 0.05)");
    gen->add_option("--dup-frac", gen_dup, "fraction of duplicated states (default 0.02)");
    gen->add_option("--seed", gen_seed, "base seed");

    // prune
    auto* prune = app.add_subcommand("prune", "run the pruning pipeline over a directory");
    std::string prune_in, prune_out, prune_mask = "score";
    nfaslim::PipelineConfig pipeline;
    pipeline.jobs = default_jobs;
    double theta = env.value("theta", 0.0);
    bool no_merge = false, no_reach = false;
    uint64_t prune_seed = default_seed;
    prune->add_option("--in", prune_in, "input directory (.anml and/or csv pairs)")->required();
    prune->add_option("--out", prune_out, "output directory")->required();
    auto* theta_opt = prune->add_option("--theta", theta, "score threshold for labeling");
    if (!env.contains("theta")) theta_opt->required();
    prune->add_option("--mask", prune_mask, "feature mask (score|degrees|totals|all, comma list)");
    prune->add_option("--trees", pipeline.prune.rf.n_trees, "forest size (default 32)");
    prune->add_option("--depth", pipeline.prune.rf.max_depth, "max tree depth (default 8)");
    prune->add_option("--min-leaf", pipeline.prune.rf.min_leaf, "min samples per leaf (default 5)");
    prune->add_option("--train-frac", pipeline.prune.train_fraction,
                      "fraction of transitions used for training (default 0.7)");
    prune->add_option("--cv-folds", pipeline.cv_folds, "cross-validation folds (default 5)");
    prune->add_option("--seed", prune_seed, "training seed");
    prune->add_option("--jobs", pipeline.jobs, "parallel file tasks (default: hardware)");
    prune->add_flag("--no-merge", no_merge, "skip duplicate-state merging");
    prune->add_flag("--no-reachability", no_reach, "skip unreachable-state removal");
    prune->add_flag("--shared-model", pipeline.shared_model, "train one model on the union of files");
    prune->add_flag("--oracle-only", pipeline.oracle_only,
                    "classify with the exact threshold rule instead of the forest");

    // verify
    auto* verify = app.add_subcommand("verify", "check pruned automata against their originals");
    std::string ver_original, ver_pruned, ver_report;
    double ver_theta = 0.0;
    nfaslim::TrialConfig trial;
    bool ver_exhaustive = false, ver_all_offsets = false;
    int ver_samples = 0;
    verify->add_option("--original", ver_original, "original .anml file or directory")->required();
    verify->add_option("--pruned", ver_pruned, "pruned .anml file or directory")->required();
    verify->add_option("--theta", ver_theta, "threshold used for pruning")->required();
    verify->add_option("--alphabet", trial.alphabet, "input alphabet size (default 4)");
    verify->add_option("--max-len", trial.max_len, "maximum input length (default 4)");
    verify->add_flag("--exhaustive", ver_exhaustive, "enumerate every input up to max-len (default)");
    verify->add_option("--samples", ver_samples, "random inputs instead of exhaustive enumeration");
    verify->add_option("--seed", trial.seed, "sampling seed");
    verify->add_flag("--all-offsets", ver_all_offsets, "re-arm start states at every offset");
    verify->add_option("--report", ver_report, "write a JSON report here");

    // cost
    auto* cost = app.add_subcommand("cost", "model overlay resources and latency");
    std::string cost_in, cost_sweep, cost_out, cost_profile = "paper2025-hw";
    int cost_fanout = 0;
    int64_t cost_len = 1;
    cost->add_option("--in", cost_in, "input .anml file")->required();
    cost->add_option("--max-fanout", cost_fanout, "single fanout (default: graph requirement)");
    cost->add_option("--fanout-sweep", cost_sweep, "comma list of fanouts");
    cost->add_option("--profile", cost_profile, "cost profile: paper2025-hw");
    cost->add_option("--input-len", cost_len, "symbols for the latency columns (default 1)");
    cost->add_option("--out", cost_out, "write csv here instead of stdout");

    // export
    auto* exp = app.add_subcommand("export", "compile an automaton into config vectors");
    std::string exp_in, exp_out;
    int exp_fanout = 0;
    exp->add_option("--in", exp_in, "input .anml file")->required();
    exp->add_option("--max-fanout", exp_fanout, "slots per record")->required();
    exp->add_option("--out", exp_out, "output binary path")->required();

    // report
    auto* rep = app.add_subcommand("report", "aggregate per-file reports into a corpus summary");
    std::string rep_in, rep_out;
    rep->add_option("--in", rep_in, "directory containing *.report.json")->required();
    rep->add_option("--out", rep_out, "directory for summary.{json,csv}")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_generate(gen_out, gen_sizes, gen_count, gen_profile, gen_avg, gen_max_fanout,
                                gen_dist, gen_start, gen_accept, gen_dup, gen_seed);
        if (prune->parsed()) {
            pipeline.prune.theta = theta;
            pipeline.prune.mask = nfaslim::FeatureMask::parse(prune_mask);
            pipeline.prune.rf.seed = prune_seed;
            pipeline.prune.enable_merge = !no_merge;
            pipeline.prune.enable_reachability = !no_reach;
            return cmd_prune(prune_in, prune_out, pipeline);
        }
        if (verify->parsed()) {
            trial.exhaustive = ver_samples <= 0;
            if (ver_samples > 0) trial.samples = ver_samples;
            trial.sim.all_start_offsets = ver_all_offsets;
            (void)ver_exhaustive;
            return cmd_verify(ver_original, ver_pruned, ver_theta, trial, ver_report);
        }
        if (cost->parsed()) {
            if (cost_profile != "paper2025-hw") {
                std::cerr << "error: unknown cost profile '" << cost_profile << "'\n";
                return kExitUsage;
            }
            nfaslim::CostParams params =
                cost_params_from_json(nfaslim::paper2025_hw(), env.value("hw", json::object()));
            return cmd_cost(cost_in, cost_fanout, cost_sweep, params, cost_len, cost_out);
        }
        if (exp->parsed()) return cmd_export(exp_in, exp_fanout, exp_out);
        if (rep->parsed()) return cmd_report(rep_in, rep_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
