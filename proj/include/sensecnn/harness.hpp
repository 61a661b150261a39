#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sensecnn/dataset.hpp"
#include "sensecnn/eval.hpp"
#include "sensecnn/optim.hpp"

namespace sensecnn {

// Resolved experiment description: config file keys plus CLI overrides.
struct ExperimentSpec {
    std::string mode;  // cv | train | eval | wsd | analyze | tune

    std::filesystem::path train_path;               // fold source in cv mode
    std::vector<std::filesystem::path> extra_train; // appended to every training fold
    std::filesystem::path test_path;
    std::filesystem::path model_path;    // checkpoint file or directory (eval/analyze)
    std::filesystem::path compare_with;  // previous results.json for significance

    std::string model_kind = "cnn";  // cnn | mlp | majority | random
    std::string group_by = "target"; // target | none
    std::string balance = "none";    // none | over | under

    std::string embeddings;  // path, or "random"
    std::size_t embedding_dim = 0;
    double oov_bound = -1.0;  // required when embeddings == "random"
    std::string embedding_mode = "static";

    std::size_t folds = 5;
    std::vector<std::size_t> region_sizes = {3, 4, 5};
    std::size_t maps_per_size = 100;
    std::size_t hidden = 1024;
    double dropout_keep = 0.5;
    double l2_lambda = 1e-3;
    double learning_rate = 1e-4;
    std::size_t iterations = 0;   // 0 = mode default (1001 cnn, 3001 mlp)
    std::size_t batch_size = 0;   // 0 = mode default (50; 10 in wsd mode)
    std::uint64_t seed = 1;

    std::vector<std::vector<std::size_t>> candidates;  // region-size grid for tune/wsd
    bool tune_regions = false;
    std::size_t k_top = 15;
    bool parallel = true;

    std::filesystem::path out_dir = "out";

    // Raw resolved key=value view, written into the manifest.
    std::map<std::string, std::string> resolved;
};

// Flat `key = value` config file; '#' starts a comment. Unknown keys error.
ExperimentSpec load_config(const std::filesystem::path& path);
// Applies one key=value override (CLI flags win over file values).
void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value);
// Re-derives defaults that depend on mode/model and fills `resolved`.
void finalize_spec(ExperimentSpec& spec);

struct VerbResult {
    std::string verb;
    EvalResult model;
    std::optional<EvalResult> majority;
    std::optional<EvalResult> random;
    std::map<std::string, EvalResult> genres;
    std::vector<std::string> warnings;
    std::size_t dropped_multi_target = 0;
};

struct RunSummary {
    std::vector<VerbResult> verbs;  // sorted by verb key
    double micro = 0.0;
    struct Significance {
        std::string pair;
        std::size_t b, c;
        double midp;
    };
    std::vector<Significance> significance;
};

struct TuneResult {
    std::vector<std::size_t> chosen;
    std::vector<double> val_accuracy;  // per candidate, empty on fallback
    bool fallback = false;
};

// Stratified 80:20 split, one model per candidate, highest validation
// accuracy wins (earlier candidate on ties). Degenerate datasets fall back to
// the spec's default sizes without a tuning run. `table` must be pre-warmed;
// tuned-mode candidates train on private copies.
TuneResult tune_region_sizes(const Dataset& train,
                             const std::vector<std::vector<std::size_t>>& candidates,
                             const ExperimentSpec& spec, EmbeddingTable& table,
                             std::uint64_t seed);

// Mode entry points; each writes results.json / report.txt / manifest.json
// (plus mode-specific files) under spec.out_dir.
RunSummary run_cv(const ExperimentSpec& spec);
RunSummary run_train(const ExperimentSpec& spec);
RunSummary run_train_eval(const ExperimentSpec& spec);
RunSummary run_wsd(const ExperimentSpec& spec);
void run_analyze(const ExperimentSpec& spec);
std::map<std::string, TuneResult> run_tune(const ExperimentSpec& spec);

// Dispatches on spec.mode. Returns a process exit code.
int run_experiment(ExperimentSpec& spec);

// The standard region-size grid for lexical-sample tuning.
std::vector<std::vector<std::size_t>> default_region_candidates();

}  // namespace sensecnn
