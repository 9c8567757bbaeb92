#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nfaslim/anml.hpp"
#include "nfaslim/csv.hpp"
#include "nfaslim/generator.hpp"
#include "nfaslim/pruning.hpp"

#include "json.hpp"

namespace nfaslim {

struct PipelineConfig {
    PruneConfig prune;
    bool shared_model = false; // train once on the union of all files
    bool oracle_only = false;  // substitute the exact threshold rule for the forest
    int jobs = 0;              // parallel file tasks; 0 = hardware concurrency
    int cv_folds = 5;
};

struct FileReport {
    std::string file;  // input filename (relative to the input dir)
    std::string error; // empty on success
    EstimateReport estimate;
    PruneReport report;
    double avg_tpn_before = 0.0;
    double avg_tpn_after = 0.0;

    bool ok() const { return error.empty(); }
};

struct PipelineResult {
    std::vector<FileReport> files;
    std::string summary_json_path;
    std::string summary_csv_path;

    bool ok() const {
        for (const auto& f : files)
            if (!f.ok()) return false;
        return true;
    }
};

namespace detail {

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

struct PipelineInput {
    std::string display_name; // e.g. "g1000_0.anml" or "g1000_0" for csv pairs
    std::string stem;
    std::filesystem::path anml;            // set for xml inputs
    std::filesystem::path transitions_csv; // set for csv inputs
    std::filesystem::path nodes_csv;
};

inline std::vector<PipelineInput> scan_input_dir(const std::string& input_dir) {
    namespace fs = std::filesystem;
    std::vector<PipelineInput> inputs;
    if (!fs::exists(input_dir)) throw std::runtime_error("input directory does not exist: " + input_dir);
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(input_dir))
        if (e.is_regular_file()) paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());

    for (const auto& p : paths) {
        std::string name = p.filename().string();
        if (name.size() > 5 && name.ends_with(".anml")) {
            PipelineInput in;
            in.display_name = name;
            in.stem = name.substr(0, name.size() - 5);
            in.anml = p;
            inputs.push_back(std::move(in));
        } else if (name.ends_with(".transitions.csv")) {
            std::string stem = name.substr(0, name.size() - std::string(".transitions.csv").size());
            fs::path nodes = p.parent_path() / (stem + ".nodes.csv");
            if (!fs::exists(nodes)) continue; // unpaired table, skip
            PipelineInput in;
            in.display_name = stem;
            in.stem = stem;
            in.transitions_csv = p;
            in.nodes_csv = nodes;
            inputs.push_back(std::move(in));
        }
    }
    return inputs;
}

inline ScoredNfa load_pipeline_input(const PipelineInput& in) {
    if (!in.anml.empty()) return read_anml_file(in.anml.string());
    return from_csv(read_file(in.transitions_csv.string()), read_file(in.nodes_csv.string()), in.stem);
}

} // namespace detail

inline nlohmann::json prune_report_to_json(const FileReport& f) {
    return nlohmann::json{
        {"file", f.file},
        {"error", f.error},
        {"nodes_before", f.report.nodes_before},
        {"nodes_after", f.report.nodes_after},
        {"transitions_before", f.report.transitions_before},
        {"transitions_after", f.report.transitions_after},
        {"classifier_kept", f.report.classifier_kept},
        {"prune_ratio", f.report.prune_ratio},
        {"model_accuracy", f.report.model_accuracy},
        {"model_degenerate", f.report.model_degenerate},
        {"accept_states_before", f.report.accept_states_before},
        {"accept_states_after", f.report.accept_states_after},
        {"accept_states_preserved", f.report.accept_states_preserved},
        {"edge_coverage", f.report.edge_coverage},
        {"estimated_kept", f.estimate.estimated_kept_transitions},
        {"estimated_ratio", f.estimate.estimated_ratio},
        {"avg_transitions_per_node_before", f.avg_tpn_before},
        {"avg_transitions_per_node_after", f.avg_tpn_after},
        {"wall_time_ms", f.report.wall_time_ms},
    };
}

inline FileReport file_report_from_json(const nlohmann::json& j) {
    FileReport f;
    f.file = j.at("file").get<std::string>();
    f.error = j.value("error", std::string{});
    f.report.nodes_before = j.at("nodes_before").get<std::size_t>();
    f.report.nodes_after = j.at("nodes_after").get<std::size_t>();
    f.report.transitions_before = j.at("transitions_before").get<std::size_t>();
    f.report.transitions_after = j.at("transitions_after").get<std::size_t>();
    f.report.classifier_kept = j.at("classifier_kept").get<std::size_t>();
    f.report.prune_ratio = j.at("prune_ratio").get<double>();
    f.report.model_accuracy = j.at("model_accuracy").get<double>();
    f.report.model_degenerate = j.at("model_degenerate").get<bool>();
    f.report.accept_states_before = j.at("accept_states_before").get<std::size_t>();
    f.report.accept_states_after = j.at("accept_states_after").get<std::size_t>();
    f.report.accept_states_preserved = j.at("accept_states_preserved").get<bool>();
    f.report.edge_coverage = j.at("edge_coverage").get<double>();
    f.report.wall_time_ms = j.at("wall_time_ms").get<int64_t>();
    f.estimate.estimated_kept_transitions = j.at("estimated_kept").get<std::size_t>();
    f.estimate.estimated_ratio = j.at("estimated_ratio").get<double>();
    f.avg_tpn_before = j.at("avg_transitions_per_node_before").get<double>();
    f.avg_tpn_after = j.at("avg_transitions_per_node_after").get<double>();
    return f;
}

/// Writes summary.json and summary.csv: one row per file plus per-size
/// aggregates (the corpus series: total transitions, estimated vs. actual,
/// average transitions per node, wall time).
inline void write_summary(const std::vector<FileReport>& files, const std::string& output_dir,
                          nlohmann::json meta = nlohmann::json::object()) {
    namespace fs = std::filesystem;
    nlohmann::json summary = std::move(meta);
    nlohmann::json files_json = nlohmann::json::array();
    std::map<std::size_t, std::vector<const FileReport*>> by_size;
    for (const auto& f : files) {
        files_json.push_back(prune_report_to_json(f));
        if (f.ok()) by_size[f.report.nodes_before].push_back(&f);
    }
    summary["files"] = std::move(files_json);
    nlohmann::json sizes_json = nlohmann::json::array();
    for (const auto& [size, reports] : by_size) {
        double est = 0, actual = 0, before = 0, after = 0, tpn_b = 0, tpn_a = 0, wall = 0;
        for (const FileReport* f : reports) {
            est += static_cast<double>(f->estimate.estimated_kept_transitions);
            actual += static_cast<double>(f->report.classifier_kept);
            before += static_cast<double>(f->report.transitions_before);
            after += static_cast<double>(f->report.transitions_after);
            tpn_b += f->avg_tpn_before;
            tpn_a += f->avg_tpn_after;
            wall += static_cast<double>(f->report.wall_time_ms);
        }
        double n = static_cast<double>(reports.size());
        sizes_json.push_back({{"size", size},
                              {"files", reports.size()},
                              {"mean_estimated_kept", est / n},
                              {"mean_classifier_kept", actual / n},
                              {"mean_transitions_before", before / n},
                              {"mean_transitions_after", after / n},
                              {"mean_avg_tpn_before", tpn_b / n},
                              {"mean_avg_tpn_after", tpn_a / n},
                              {"mean_wall_time_ms", wall / n}});
    }
    summary["by_size"] = std::move(sizes_json);

    std::string csv = "file,size,transitions_before,estimated_kept,classifier_kept,transitions_after,"
                      "estimated_ratio,prune_ratio,avg_tpn_before,avg_tpn_after,model_accuracy,wall_time_ms\n";
    for (const auto& f : files) {
        if (!f.ok()) {
            csv += f.file + ",error,,,,,,,,,,\n";
            continue;
        }
        csv += f.file + ',' + std::to_string(f.report.nodes_before) + ',' +
               std::to_string(f.report.transitions_before) + ',' +
               std::to_string(f.estimate.estimated_kept_transitions) + ',' +
               std::to_string(f.report.classifier_kept) + ',' + std::to_string(f.report.transitions_after) +
               ',' + detail::format_score(f.estimate.estimated_ratio) + ',' +
               detail::format_score(f.report.prune_ratio) + ',' + detail::format_score(f.avg_tpn_before) +
               ',' + detail::format_score(f.avg_tpn_after) + ',' +
               detail::format_score(f.report.model_accuracy) + ',' +
               std::to_string(f.report.wall_time_ms) + '\n';
    }

    write_file((fs::path(output_dir) / "summary.json").string(), summary.dump(2) + "\n");
    write_file((fs::path(output_dir) / "summary.csv").string(), csv);
}

/// Runs the full per-file flow over a directory: parse, export CSV tables,
/// label at theta, train, cross-validate, classify, structurally clean, and
/// write the pruned automaton plus reports. Files are independent tasks; a
/// failing file is recorded in the summary and does not stop the run.
///
/// Outputs per input `X`: `X.transitions.csv`, `X.nodes.csv` (the parsed
/// input), `X.pruned.anml`, `X.pruned.transitions.csv`, `X.pruned.nodes.csv`,
/// `X.report.json`, `X.model.json`; plus `summary.json` and `summary.csv`.
inline PipelineResult run_pipeline(const std::string& input_dir, const std::string& output_dir,
                                   const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    validate_config(cfg.prune);
    fs::create_directories(output_dir);

    std::vector<detail::PipelineInput> inputs = detail::scan_input_dir(input_dir);
    PipelineResult result;
    result.files.resize(inputs.size());

    // Shared-model mode trains one forest on the union of every file's
    // labeled transitions; files are then classified with that model.
    ForestModel shared_model;
    double shared_accuracy = 1.0;
    if (cfg.shared_model && !cfg.oracle_only && !inputs.empty()) {
        TrainingSet union_set;
        union_set.theta = cfg.prune.theta;
        union_set.mask = cfg.prune.mask;
        for (const auto& in : inputs) {
            try {
                ScoredNfa nfa = detail::load_pipeline_input(in);
                TrainingSet file_set = label_dataset(extract_features(nfa), cfg.prune.theta, cfg.prune.mask);
                union_set.samples.insert(union_set.samples.end(), file_set.samples.begin(),
                                         file_set.samples.end());
            } catch (const std::exception&) {
                // the per-file pass will report it
            }
        }
        if (!union_set.samples.empty()) {
            shared_model = train_forest(union_set, cfg.prune.rf);
            int k = static_cast<int>(std::min<std::size_t>(
                static_cast<std::size_t>(cfg.cv_folds), union_set.samples.size()));
            if (k >= 2) shared_accuracy = cross_validate(union_set, k, cfg.prune.rf).mean_accuracy;
        } else {
            shared_model = make_threshold_oracle(cfg.prune.theta, cfg.prune.mask);
        }
    }

    auto process_file = [&](std::size_t idx) {
        const detail::PipelineInput& in = inputs[idx];
        FileReport& fr = result.files[idx];
        fr.file = in.display_name;
        try {
            ScoredNfa nfa = detail::load_pipeline_input(in);
            ValidationReport val = validate(nfa);
            if (!val.ok())
                throw std::runtime_error("invalid automaton: " + val.violations.front().message + " (" +
                                         val.violations.front().locus + ")");

            CsvPair tables = to_csv(nfa);
            write_file((fs::path(output_dir) / (in.stem + ".transitions.csv")).string(), tables.transitions);
            write_file((fs::path(output_dir) / (in.stem + ".nodes.csv")).string(), tables.nodes);

            fr.estimate = threshold_estimate(nfa, cfg.prune.theta);
            if (!nfa.states.empty()) fr.avg_tpn_before = avg_transitions_per_node(nfa);

            PruneConfig file_cfg = cfg.prune;
            file_cfg.rf.seed = Rng::derive(cfg.prune.rf.seed, detail::fnv1a(in.stem)).next_u64();

            ForestModel model;
            double accuracy = 1.0;
            if (cfg.oracle_only) {
                model = make_threshold_oracle(file_cfg.theta, file_cfg.mask);
            } else if (cfg.shared_model) {
                model = shared_model;
                accuracy = shared_accuracy;
            } else {
                std::vector<FeatureVector> features = extract_features(nfa);
                TrainingSet full = label_dataset(features, file_cfg.theta, file_cfg.mask);
                if (full.samples.empty()) {
                    model = make_threshold_oracle(file_cfg.theta, file_cfg.mask);
                } else {
                    // Deployed model trains on a deterministic train_fraction
                    // split; accuracy is measured by stratified k-fold CV over
                    // the whole labeled set.
                    Rng split_rng = Rng::derive(file_cfg.rf.seed, 0x5b1a7ULL);
                    std::vector<uint32_t> order(full.samples.size());
                    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<uint32_t>(i);
                    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                        std::size_t j = i + static_cast<std::size_t>(split_rng.next_below(order.size() - i));
                        std::swap(order[i], order[j]);
                    }
                    std::size_t n_train = std::max<std::size_t>(
                        1, static_cast<std::size_t>(std::llround(file_cfg.train_fraction *
                                                                 static_cast<double>(order.size()))));
                    TrainingSet train;
                    train.theta = full.theta;
                    train.mask = full.mask;
                    train.samples.reserve(n_train);
                    for (std::size_t i = 0; i < n_train; ++i)
                        train.samples.push_back(full.samples[order[i]]);
                    model = train_forest(train, file_cfg.rf);
                    int k = static_cast<int>(std::min<std::size_t>(
                        static_cast<std::size_t>(cfg.cv_folds), full.samples.size()));
                    accuracy = k >= 2 ? cross_validate(full, k, file_cfg.rf).mean_accuracy : 1.0;
                }
            }

            PruneOutcome outcome = prune(nfa, model, file_cfg, accuracy);
            fr.report = outcome.report;
            if (!outcome.nfa.states.empty()) fr.avg_tpn_after = avg_transitions_per_node(outcome.nfa);

            write_anml_file((fs::path(output_dir) / (in.stem + ".pruned.anml")).string(), outcome.nfa);
            CsvPair pruned_tables = to_csv(outcome.nfa);
            write_file((fs::path(output_dir) / (in.stem + ".pruned.transitions.csv")).string(),
                       pruned_tables.transitions);
            write_file((fs::path(output_dir) / (in.stem + ".pruned.nodes.csv")).string(), pruned_tables.nodes);
            write_file((fs::path(output_dir) / (in.stem + ".model.json")).string(),
                       model_to_json(model).dump(2) + "\n");
            write_file((fs::path(output_dir) / (in.stem + ".report.json")).string(),
                       prune_report_to_json(fr).dump(2) + "\n");
        } catch (const std::exception& e) {
            fr.error = e.what();
            // Reports are written even for failing files, for traceability.
            try {
                write_file((fs::path(output_dir) / (in.stem + ".report.json")).string(),
                           prune_report_to_json(fr).dump(2) + "\n");
            } catch (const std::exception&) {
            }
        }
    };

    unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, std::max<std::size_t>(1, inputs.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < inputs.size(); ++i) process_file(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (unsigned w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= inputs.size()) return;
                    process_file(i);
                }
            });
        for (auto& t : workers) t.join();
    }

    write_summary(result.files, output_dir,
                  {{"theta", cfg.prune.theta},
                   {"oracle_only", cfg.oracle_only},
                   {"shared_model", cfg.shared_model}});
    result.summary_json_path = (fs::path(output_dir) / "summary.json").string();
    result.summary_csv_path = (fs::path(output_dir) / "summary.csv").string();
    return result;
}

} // namespace nfaslim
