#include "sensecnn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace sensecnn {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t Dataset::label_index(const std::string& label) const {
    for (std::size_t i = 0; i < label_set.size(); ++i)
        if (label_set[i] == label) return i;
    throw std::out_of_range("label '" + label + "' not in label set");
}

std::map<std::string, std::size_t> Dataset::label_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& inst : instances) ++counts[inst.label()];
    return counts;
}

void Dataset::rebuild_label_set() {
    std::set<std::string> labels;
    for (const auto& inst : instances)
        for (const auto& l : inst.labels) labels.insert(l);
    label_set.assign(labels.begin(), labels.end());
}

std::size_t FoldPlan::fold_of(const std::string& id) const {
    auto it = assignments.find(id);
    if (it == assignments.end()) throw std::out_of_range("no fold assignment for id '" + id + "'");
    return it->second;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + what);
}

Instance parse_instance_line(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        parse_fail(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) parse_fail(line_no, "expected a JSON object");

    Instance inst;
    if (!j.contains("id") || !j["id"].is_string()) parse_fail(line_no, "missing string field 'id'");
    inst.id = j["id"].get<std::string>();

    if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty())
        parse_fail(line_no, "missing non-empty array field 'tokens'");
    for (const auto& t : j["tokens"]) {
        if (!t.is_string()) parse_fail(line_no, "'tokens' entries must be strings");
        inst.tokens.push_back(t.get<std::string>());
    }

    if (j.contains("labels")) {
        if (!j["labels"].is_array() || j["labels"].empty())
            parse_fail(line_no, "'labels' must be a non-empty array");
        for (const auto& l : j["labels"]) {
            if (!l.is_string()) parse_fail(line_no, "'labels' entries must be strings");
            inst.labels.push_back(l.get<std::string>());
        }
    } else if (j.contains("label") && j["label"].is_string()) {
        inst.labels.push_back(j["label"].get<std::string>());
    } else {
        parse_fail(line_no, "missing field 'label' (or 'labels')");
    }

    if (!j.contains("target_index") || !j["target_index"].is_number_integer())
        parse_fail(line_no, "missing integer field 'target_index'");
    long long ti = j["target_index"].get<long long>();
    if (ti < 0 || static_cast<std::size_t>(ti) >= inst.tokens.size())
        parse_fail(line_no, "target_index " + std::to_string(ti) + " out of range for " +
                                std::to_string(inst.tokens.size()) + " tokens");
    inst.target_index = static_cast<std::size_t>(ti);
    inst.target_indices = {inst.target_index};

    if (j.contains("target_indices")) {
        if (!j["target_indices"].is_array() || j["target_indices"].empty())
            parse_fail(line_no, "'target_indices' must be a non-empty array");
        inst.target_indices.clear();
        for (const auto& x : j["target_indices"]) {
            if (!x.is_number_integer()) parse_fail(line_no, "'target_indices' entries must be integers");
            long long v = x.get<long long>();
            if (v < 0 || static_cast<std::size_t>(v) >= inst.tokens.size())
                parse_fail(line_no, "target_indices entry out of range");
            inst.target_indices.push_back(static_cast<std::size_t>(v));
        }
        if (inst.target_indices.front() != inst.target_index)
            parse_fail(line_no, "target_indices must start with target_index");
    }

    if (j.contains("genre")) {
        if (!j["genre"].is_string()) parse_fail(line_no, "'genre' must be a string");
        inst.genre = j["genre"].get<std::string>();
    }
    return inst;
}

}  // namespace

Dataset parse_instances(std::istream& in) {
    Dataset ds;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        Instance inst = parse_instance_line(line, line_no);
        if (!seen_ids.insert(inst.id).second)
            parse_fail(line_no, "duplicate id '" + inst.id + "'");
        ds.instances.push_back(std::move(inst));
    }
    ds.rebuild_label_set();
    return ds;
}

Dataset parse_instances_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("corpus: cannot open " + path);
    try {
        return parse_instances(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void serialize_instances(const Dataset& ds, std::ostream& out) {
    for (const auto& inst : ds.instances) {
        ordered_json j;
        j["id"] = inst.id;
        j["tokens"] = inst.tokens;
        if (inst.labels.size() == 1)
            j["label"] = inst.labels.front();
        else
            j["labels"] = inst.labels;
        j["target_index"] = inst.target_index;
        if (inst.target_indices.size() > 1) j["target_indices"] = inst.target_indices;
        if (!inst.genre.empty()) j["genre"] = inst.genre;
        out << j.dump() << '\n';
    }
}

void serialize_instances_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("corpus: cannot write " + path);
    serialize_instances(ds, out);
}

FoldPlan stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.instances.size(); ++i)
        by_class[ds.instances[i].label()].push_back(i);
    if (by_class.empty()) throw std::invalid_argument("stratified_folds: empty dataset");

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (auto& [label, idxs] : by_class) {
        if (idxs.size() < k) {
            plan.warnings.push_back("class '" + label + "' has " + std::to_string(idxs.size()) +
                                    " instances for k=" + std::to_string(k) +
                                    " folds; some folds will lack it");
        }
        SeededRng rng(derive_seed(seed, label));
        rng.shuffle(idxs);
        for (std::size_t j = 0; j < idxs.size(); ++j)
            plan.assignments[ds.instances[idxs[j]].id] = j % k;
    }
    return plan;
}

Dataset fold_subset(const Dataset& ds, const FoldPlan& plan, std::size_t f, bool held_out) {
    Dataset out;
    out.label_set = ds.label_set;
    out.target_word = ds.target_word;
    for (const auto& inst : ds.instances) {
        bool in_fold = plan.fold_of(inst.id) == f;
        if (in_fold == held_out) out.instances.push_back(inst);
    }
    return out;
}

Dataset balance(const Dataset& ds, BalanceMode mode, std::uint64_t seed) {
    auto counts = ds.label_counts();
    if (counts.size() < 2) throw std::invalid_argument("balance: need >= 2 classes");
    std::size_t max_count = 0, min_count = ds.instances.size();
    for (const auto& [label, c] : counts) {
        max_count = std::max(max_count, c);
        min_count = std::min(min_count, c);
    }

    Dataset out;
    out.label_set = ds.label_set;
    out.target_word = ds.target_word;
    SeededRng rng(derive_seed(seed, "balance"));

    if (mode == BalanceMode::kOversample) {
        out.instances = ds.instances;
        std::map<std::string, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < ds.instances.size(); ++i)
            by_class[ds.instances[i].label()].push_back(i);
        for (const auto& [label, idxs] : by_class) {
            std::size_t dup = 0;
            for (std::size_t need = idxs.size(); need < max_count; ++need) {
                const Instance& src = ds.instances[idxs[rng.below(idxs.size())]];
                Instance copy = src;
                copy.id += "#dup" + std::to_string(++dup);
                out.instances.push_back(std::move(copy));
            }
        }
    } else {
        std::map<std::string, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < ds.instances.size(); ++i)
            by_class[ds.instances[i].label()].push_back(i);
        std::vector<bool> keep(ds.instances.size(), false);
        for (auto& [label, idxs] : by_class) {
            SeededRng class_rng(derive_seed(rng.seed(), label));
            std::vector<std::size_t> pool = idxs;
            class_rng.shuffle(pool);
            pool.resize(min_count);
            for (std::size_t i : pool) keep[i] = true;
        }
        for (std::size_t i = 0; i < ds.instances.size(); ++i)
            if (keep[i]) out.instances.push_back(ds.instances[i]);
    }
    return out;
}

std::string majority_baseline(const Dataset& train) {
    if (train.instances.empty()) throw std::invalid_argument("majority_baseline: empty training set");
    auto counts = train.label_counts();
    std::size_t best = 0;
    std::string best_label;
    for (const auto& label : train.label_set) {  // label_set order breaks ties
        auto it = counts.find(label);
        std::size_t c = it == counts.end() ? 0 : it->second;
        if (c > best) {
            best = c;
            best_label = label;
        }
    }
    if (best_label.empty()) best_label = counts.begin()->first;  // labels outside label_set
    return best_label;
}

Dataset synth_cue_dataset(const SynthCueSpec& spec, std::uint64_t seed) {
    if (spec.cue_ngrams.size() != spec.classes)
        throw std::invalid_argument("synth_cue_dataset: need one cue per class");
    for (const auto& cue : spec.cue_ngrams)
        if (cue.size() != 3) throw std::invalid_argument("synth_cue_dataset: cues must be trigrams");
    for (std::size_t a = 0; a < spec.cue_ngrams.size(); ++a)
        for (std::size_t b = a + 1; b < spec.cue_ngrams.size(); ++b)
            if (spec.cue_ngrams[a] == spec.cue_ngrams[b])
                throw std::invalid_argument("synth_cue_dataset: cues must be pairwise distinct");
    if (spec.sentence_len < 4)
        throw std::invalid_argument("synth_cue_dataset: sentence_len must be >= 4");

    // Fillers must not collide with cue tokens, so the cue alone decides the label.
    std::unordered_set<std::string> cue_tokens;
    for (const auto& cue : spec.cue_ngrams)
        for (const auto& t : cue) cue_tokens.insert(t);
    std::vector<std::string> fillers;
    for (const auto& t : spec.vocab)
        if (!cue_tokens.count(t) && t != spec.target_token) fillers.push_back(t);
    if (fillers.empty()) throw std::invalid_argument("synth_cue_dataset: no usable filler tokens");

    SeededRng rng(seed);
    Dataset ds;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        std::string label = spec.label_prefix + std::to_string(c);
        for (std::size_t i = 0; i < spec.n_per_class; ++i) {
            Instance inst;
            inst.id = "syn-" + label + "-" + std::to_string(i);
            inst.labels = {label};
            inst.target_index = 0;
            inst.target_indices = {0};
            inst.tokens.resize(spec.sentence_len);
            inst.tokens[0] = spec.target_token;
            for (std::size_t p = 1; p < spec.sentence_len; ++p)
                inst.tokens[p] = fillers[rng.below(fillers.size())];
            // Plant the cue at a position that never touches the target slot.
            std::size_t pos = 1 + rng.below(spec.sentence_len - 3);
            for (std::size_t j = 0; j < 3; ++j) inst.tokens[pos + j] = spec.cue_ngrams[c][j];
            ds.instances.push_back(std::move(inst));
        }
    }
    ds.rebuild_label_set();
    return ds;
}

}  // namespace sensecnn
