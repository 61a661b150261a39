#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sensecnn/harness.hpp"

namespace {

struct Flags {
    std::string config;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_flag(CLI::App* cmd, Flags& flags, const std::string& option, const std::string& key,
              const std::string& help) {
    cmd->add_option_function<std::string>(
        option, [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); },
        help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-layer CNN toolkit for modal sense and word sense classification"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> modes = {
        {"cv", "k-fold cross validation with per-verb classifiers"},
        {"train", "train per-verb models and write checkpoints"},
        {"eval", "evaluate checkpoints or a train/test split"},
        {"wsd", "lexical-sample word sense disambiguation protocol"},
        {"analyze", "rank sentences per filter and export feature-map reports"},
        {"tune", "pick region sizes on an 80:20 validation split"},
    };

    Flags flags;
    std::vector<CLI::App*> cmds;
    for (const auto& [name, help] : modes) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", flags.config, "flat key=value config file");
        add_flag(cmd, flags, "--seed", "seed", "master RNG seed");
        add_flag(cmd, flags, "--model", "model", "cnn|mlp|majority|random");
        add_flag(cmd, flags, "--embeddings", "embeddings", "embedding file, or 'random'");
        add_flag(cmd, flags, "--embedding-mode", "embedding_mode", "static|tuned");
        add_flag(cmd, flags, "--embedding-dim", "embedding_dim", "embedding dimensionality");
        add_flag(cmd, flags, "--oov-bound", "oov_bound", "uniform bound for random-init vectors");
        add_flag(cmd, flags, "--balance", "balance", "over|under|none");
        add_flag(cmd, flags, "--out", "out", "output directory");
        add_flag(cmd, flags, "--train", "train", "training corpus (JSONL)");
        add_flag(cmd, flags, "--extra-train", "extra_train",
                 "corpora appended to every training fold (';'-separated)");
        add_flag(cmd, flags, "--test", "test", "test corpus (JSONL)");
        add_flag(cmd, flags, "--model-file", "model_file", "checkpoint file or directory");
        add_flag(cmd, flags, "--compare-with", "compare_with",
                 "previous results.json for paired significance");
        add_flag(cmd, flags, "--folds", "folds", "number of CV folds");
        add_flag(cmd, flags, "--iterations", "iterations", "mini-batch gradient steps");
        add_flag(cmd, flags, "--batch-size", "batch_size", "mini-batch size");
        add_flag(cmd, flags, "--region-sizes", "region_sizes", "comma-separated filter sizes");
        add_flag(cmd, flags, "--maps-per-size", "maps_per_size", "feature maps per region size");
        add_flag(cmd, flags, "--hidden", "hidden", "MLP hidden layer size");
        add_flag(cmd, flags, "--dropout-keep", "dropout_keep", "dropout keep probability");
        add_flag(cmd, flags, "--l2-lambda", "l2_lambda", "l2 regularisation coefficient");
        add_flag(cmd, flags, "--learning-rate", "learning_rate", "Adam learning rate");
        add_flag(cmd, flags, "--group-by", "group_by", "target|none");
        add_flag(cmd, flags, "--candidates", "candidates",
                 "region-size grid, e.g. '1,2,3;3,4,5'");
        add_flag(cmd, flags, "--tune-regions", "tune_regions", "tune region sizes per word");
        add_flag(cmd, flags, "--k-top", "k_top", "top sentences per filter");
        add_flag(cmd, flags, "--parallel", "parallel", "true|false");
        cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        sensecnn::ExperimentSpec spec;
        if (!flags.config.empty()) spec = sensecnn::load_config(flags.config);
        for (std::size_t i = 0; i < modes.size(); ++i)
            if (cmds[i]->parsed()) spec.mode = modes[i].first;
        for (const auto& [key, value] : flags.overrides)
            sensecnn::apply_override(spec, key, value);
        return sensecnn::run_experiment(spec);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
