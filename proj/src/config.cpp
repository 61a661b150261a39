#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sensecnn/harness.hpp"

namespace sensecnn {

std::vector<std::vector<std::size_t>> default_region_candidates() {
    return {{1, 2, 3}, {2, 3, 4}, {3, 4, 5}, {4, 5, 6}, {5, 6, 7}};
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    try {
        long long v = std::stoll(value);
        if (v < 0) throw std::invalid_argument("negative");
        return static_cast<std::size_t>(v);
    } catch (...) {
        throw std::runtime_error("config: bad integer for '" + key + "': " + value);
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return std::stod(value);
    } catch (...) {
        throw std::runtime_error("config: bad number for '" + key + "': " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw std::runtime_error("config: bad boolean for '" + key + "': " + value);
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& part : split(value, ',')) out.push_back(parse_count(key, part));
    if (out.empty()) throw std::runtime_error("config: empty size list for '" + key + "'");
    return out;
}

}  // namespace

void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (key == "mode") {
        spec.mode = value;
    } else if (key == "train") {
        spec.train_path = value;
    } else if (key == "extra_train") {
        spec.extra_train.clear();
        for (const auto& p : split(value, ';')) spec.extra_train.emplace_back(p);
    } else if (key == "test") {
        spec.test_path = value;
    } else if (key == "model_file") {
        spec.model_path = value;
    } else if (key == "compare_with") {
        spec.compare_with = value;
    } else if (key == "model") {
        if (value != "cnn" && value != "mlp" && value != "majority" && value != "random")
            throw std::runtime_error("config: unknown model '" + value + "'");
        spec.model_kind = value;
    } else if (key == "group_by") {
        if (value != "target" && value != "none")
            throw std::runtime_error("config: group_by must be 'target' or 'none'");
        spec.group_by = value;
    } else if (key == "balance") {
        if (value != "none" && value != "over" && value != "under")
            throw std::runtime_error("config: balance must be none|over|under");
        spec.balance = value;
    } else if (key == "embeddings") {
        spec.embeddings = value;
    } else if (key == "embedding_dim") {
        spec.embedding_dim = parse_count(key, value);
    } else if (key == "oov_bound") {
        spec.oov_bound = parse_real(key, value);
    } else if (key == "embedding_mode") {
        if (value != "static" && value != "tuned")
            throw std::runtime_error("config: embedding_mode must be static|tuned");
        spec.embedding_mode = value;
    } else if (key == "folds") {
        spec.folds = parse_count(key, value);
    } else if (key == "region_sizes") {
        spec.region_sizes = parse_sizes(key, value);
    } else if (key == "maps_per_size") {
        spec.maps_per_size = parse_count(key, value);
    } else if (key == "hidden") {
        spec.hidden = parse_count(key, value);
    } else if (key == "dropout_keep") {
        spec.dropout_keep = parse_real(key, value);
    } else if (key == "l2_lambda") {
        spec.l2_lambda = parse_real(key, value);
    } else if (key == "learning_rate") {
        spec.learning_rate = parse_real(key, value);
    } else if (key == "iterations") {
        spec.iterations = parse_count(key, value);
    } else if (key == "batch_size") {
        spec.batch_size = parse_count(key, value);
    } else if (key == "seed") {
        spec.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "candidates") {
        spec.candidates.clear();
        for (const auto& triple : split(value, ';'))
            spec.candidates.push_back(parse_sizes(key, triple));
    } else if (key == "tune_regions") {
        spec.tune_regions = parse_bool(key, value);
    } else if (key == "k_top") {
        spec.k_top = parse_count(key, value);
    } else if (key == "parallel") {
        spec.parallel = parse_bool(key, value);
    } else if (key == "out") {
        spec.out_dir = value;
    } else {
        throw std::runtime_error("config: unknown key '" + key + "'");
    }
}

ExperimentSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    ExperimentSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        try {
            apply_override(spec, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + " line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return spec;
}

void finalize_spec(ExperimentSpec& spec) {
    static const std::vector<std::string> kModes = {"cv", "train", "eval", "wsd", "analyze",
                                                    "tune"};
    if (std::find(kModes.begin(), kModes.end(), spec.mode) == kModes.end())
        throw std::runtime_error("config: mode must be one of cv|train|eval|wsd|analyze|tune");
    if (spec.folds < 2) throw std::runtime_error("config: folds must be >= 2");
    if (spec.iterations == 0) spec.iterations = spec.model_kind == "mlp" ? 3001 : 1001;
    if (spec.batch_size == 0) spec.batch_size = spec.mode == "wsd" ? 10 : 50;
    if (spec.candidates.empty()) spec.candidates = default_region_candidates();

    auto sizes_str = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(v[i]);
        }
        return s;
    };
    char buf[48];
    auto real_str = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };

    spec.resolved.clear();
    spec.resolved["mode"] = spec.mode;
    if (!spec.train_path.empty()) spec.resolved["train"] = spec.train_path.string();
    if (!spec.extra_train.empty()) {
        std::string s;
        for (std::size_t i = 0; i < spec.extra_train.size(); ++i) {
            if (i) s += ";";
            s += spec.extra_train[i].string();
        }
        spec.resolved["extra_train"] = s;
    }
    if (!spec.test_path.empty()) spec.resolved["test"] = spec.test_path.string();
    if (!spec.model_path.empty()) spec.resolved["model_file"] = spec.model_path.string();
    if (!spec.compare_with.empty()) spec.resolved["compare_with"] = spec.compare_with.string();
    spec.resolved["model"] = spec.model_kind;
    spec.resolved["group_by"] = spec.group_by;
    spec.resolved["balance"] = spec.balance;
    if (!spec.embeddings.empty()) spec.resolved["embeddings"] = spec.embeddings;
    if (spec.embedding_dim) spec.resolved["embedding_dim"] = std::to_string(spec.embedding_dim);
    if (spec.oov_bound >= 0) spec.resolved["oov_bound"] = real_str(spec.oov_bound);
    spec.resolved["embedding_mode"] = spec.embedding_mode;
    spec.resolved["folds"] = std::to_string(spec.folds);
    spec.resolved["region_sizes"] = sizes_str(spec.region_sizes);
    spec.resolved["maps_per_size"] = std::to_string(spec.maps_per_size);
    spec.resolved["hidden"] = std::to_string(spec.hidden);
    spec.resolved["dropout_keep"] = real_str(spec.dropout_keep);
    spec.resolved["l2_lambda"] = real_str(spec.l2_lambda);
    spec.resolved["learning_rate"] = real_str(spec.learning_rate);
    spec.resolved["iterations"] = std::to_string(spec.iterations);
    spec.resolved["batch_size"] = std::to_string(spec.batch_size);
    spec.resolved["seed"] = std::to_string(spec.seed);
    {
        std::string s;
        for (std::size_t i = 0; i < spec.candidates.size(); ++i) {
            if (i) s += ";";
            s += sizes_str(spec.candidates[i]);
        }
        spec.resolved["candidates"] = s;
    }
    spec.resolved["tune_regions"] = spec.tune_regions ? "true" : "false";
    spec.resolved["k_top"] = std::to_string(spec.k_top);
    spec.resolved["parallel"] = spec.parallel ? "true" : "false";
    spec.resolved["out"] = spec.out_dir.string();
}

}  // namespace sensecnn
