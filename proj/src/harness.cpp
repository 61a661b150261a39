#include "sensecnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "sensecnn/checkpoint.hpp"
#include "sensecnn/introspect.hpp"

namespace sensecnn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::mutex g_log_mutex;

void log_warning(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "warning: " << msg << '\n';
}

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_acc(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", a * 100.0);
    return buf;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? std::string("_") : out;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for digest");
    std::ostringstream ss;
    ss << in.rdbuf();
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(ss.str())));
    return buf;
}

// Per-classifier grouping: the token under target_index, lowercased.
std::map<std::string, Dataset> group_instances(const Dataset& ds, const std::string& group_by) {
    std::map<std::string, Dataset> groups;
    for (const Instance& inst : ds.instances) {
        std::string key =
            group_by == "target" ? to_lower(inst.tokens[inst.target_index]) : std::string("all");
        groups[key].instances.push_back(inst);
    }
    for (auto& [key, g] : groups) {
        g.target_word = key;
        g.rebuild_label_set();
    }
    return groups;
}

std::vector<std::string> union_labels(const Dataset& a, const Dataset& b) {
    std::set<std::string> labels(a.label_set.begin(), a.label_set.end());
    labels.insert(b.label_set.begin(), b.label_set.end());
    return {labels.begin(), labels.end()};
}

EmbeddingTable build_table(const ExperimentSpec& spec) {
    if (spec.embeddings.empty())
        throw std::runtime_error("spec: 'embeddings' is required (path or 'random')");
    EmbeddingTable table = [&spec] {
        if (spec.embeddings == "random") {
            if (spec.embedding_dim == 0)
                throw std::runtime_error("spec: embedding_dim required with embeddings=random");
            if (spec.oov_bound < 0)
                throw std::runtime_error("spec: oov_bound required with embeddings=random");
            return EmbeddingTable::random_init(spec.embedding_dim, spec.oov_bound, 0);
        }
        std::size_t dim = spec.embedding_dim;
        if (dim == 0) {  // infer from the first data line
            std::ifstream in(spec.embeddings);
            if (!in) throw std::runtime_error("cannot open " + spec.embeddings);
            std::string line;
            while (std::getline(in, line)) {
                std::stringstream ss(line);
                std::vector<std::string> fields;
                std::string f;
                while (ss >> f) fields.push_back(f);
                if (fields.empty()) continue;
                if (fields.size() == 2) continue;  // header line
                dim = fields.size() - 1;
                break;
            }
            if (dim == 0) throw std::runtime_error("embeddings: cannot infer dimension");
        }
        return EmbeddingTable::load_file(spec.embeddings, dim);
    }();
    table.reseed_oov(derive_seed(spec.seed, "oov"));
    table.set_trainable(spec.embedding_mode == "tuned");
    if (table.duplicate_count() > 0)
        log_warning(std::to_string(table.duplicate_count()) +
                    " duplicate embedding tokens ignored (first occurrence kept)");
    return table;
}

void pre_warm(EmbeddingTable& table, const Dataset& ds) {
    for (const Instance& inst : ds.instances)
        for (const std::string& tok : inst.tokens) table.lookup(tok);
}

EmbeddingMode embed_mode(const ExperimentSpec& spec) {
    return spec.embedding_mode == "tuned" ? EmbeddingMode::kTuned : EmbeddingMode::kStatic;
}

CnnConfig cnn_config(const ExperimentSpec& spec, std::size_t dim, std::size_t classes,
                     const std::vector<std::size_t>* region_override = nullptr) {
    CnnConfig cfg;
    cfg.dim = dim;
    cfg.region_sizes = region_override ? *region_override : spec.region_sizes;
    cfg.maps_per_size = spec.maps_per_size;
    cfg.classes = classes;
    cfg.dropout_keep = spec.dropout_keep;
    cfg.l2_lambda = spec.l2_lambda;
    cfg.embedding_mode = embed_mode(spec);
    return cfg;
}

MlpConfig mlp_config(const ExperimentSpec& spec, std::size_t dim, std::size_t classes) {
    MlpConfig cfg;
    cfg.dim = dim;
    cfg.hidden = spec.hidden;
    cfg.classes = classes;
    cfg.dropout_keep = spec.dropout_keep;
    cfg.l2_lambda = spec.l2_lambda;
    cfg.embedding_mode = embed_mode(spec);
    return cfg;
}

TrainConfig train_config(const ExperimentSpec& spec, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.iterations = spec.iterations;
    cfg.batch_size = spec.batch_size;
    cfg.seed = seed;
    cfg.dropout_keep = spec.dropout_keep;
    cfg.l2_lambda = spec.l2_lambda;
    cfg.embedding_mode = embed_mode(spec);
    cfg.adam.lr = spec.learning_rate;
    return cfg;
}

std::unique_ptr<TrainableModel> make_model(const ExperimentSpec& spec, std::size_t dim,
                                           const std::vector<std::string>& label_set,
                                           std::uint64_t init_seed,
                                           const std::vector<std::size_t>* region_override =
                                               nullptr) {
    SeededRng rng(init_seed);
    if (spec.model_kind == "mlp")
        return std::make_unique<MlpModel>(mlp_config(spec, dim, label_set.size()), label_set, rng);
    return std::make_unique<CnnModel>(cnn_config(spec, dim, label_set.size(), region_override),
                                      label_set, rng);
}

std::vector<std::string> predict_all(TrainableModel& model,
                                     const std::vector<std::string>& label_set, const Dataset& ds,
                                     EmbeddingTable& table) {
    std::vector<std::string> preds;
    preds.reserve(ds.instances.size());
    for (const Instance& inst : ds.instances)
        preds.push_back(label_set[model.predict_class(inst.tokens, table)]);
    return preds;
}

Dataset blend(const Dataset& fold_train, const Dataset& extra) {
    Dataset out = fold_train;
    out.instances.insert(out.instances.end(), extra.instances.begin(), extra.instances.end());
    out.label_set = union_labels(fold_train, extra);
    return out;
}

Dataset maybe_balance(const Dataset& ds, const ExperimentSpec& spec, std::uint64_t seed,
                      std::vector<std::string>& warnings) {
    if (spec.balance == "none") return ds;
    if (ds.label_counts().size() < 2) {
        warnings.push_back("balance skipped for '" + ds.target_word + "': fewer than 2 classes");
        return ds;
    }
    return balance(ds, spec.balance == "over" ? BalanceMode::kOversample
                                              : BalanceMode::kUndersample,
                   seed);
}

// Trains the spec's model kind on `train` and fills per-instance predictions
// for `test`. Majority/random are handled inline; single-class training sets
// degrade to constant prediction.
struct FoldOutcome {
    std::vector<std::string> model_preds, majority_preds, random_preds;
};

FoldOutcome run_fold(const ExperimentSpec& spec, const Dataset& train, const Dataset& test,
                     const std::vector<std::string>& label_set, EmbeddingTable& master,
                     std::uint64_t fold_seed, std::vector<std::string>& warnings,
                     const Dataset* majority_source = nullptr,
                     TrainHistory* history_out = nullptr,
                     std::unique_ptr<TrainableModel>* model_out = nullptr,
                     EmbeddingTable** table_out = nullptr,
                     std::optional<EmbeddingTable>* table_store = nullptr) {
    FoldOutcome out;

    // The majority baseline reflects the raw sense distribution; training may
    // see a rebalanced blend.
    const std::string majority = majority_baseline(majority_source ? *majority_source : train);
    out.majority_preds.assign(test.instances.size(), majority);

    SeededRng rand_rng(derive_seed(fold_seed, "random-baseline"));
    out.random_preds.reserve(test.instances.size());
    for (std::size_t i = 0; i < test.instances.size(); ++i)
        out.random_preds.push_back(label_set[rand_rng.below(label_set.size())]);

    if (spec.model_kind == "majority") {
        out.model_preds = out.majority_preds;
        return out;
    }
    if (spec.model_kind == "random") {
        SeededRng rng(derive_seed(fold_seed, "random-model"));
        for (std::size_t i = 0; i < test.instances.size(); ++i)
            out.model_preds.push_back(label_set[rng.below(label_set.size())]);
        return out;
    }
    if (label_set.size() < 2) {
        warnings.push_back("only one class in training data; predicting it everywhere");
        out.model_preds.assign(test.instances.size(), label_set.front());
        return out;
    }

    const bool tuned = spec.embedding_mode == "tuned";
    EmbeddingTable* table = &master;
    std::optional<EmbeddingTable> local_copy;
    if (tuned) {
        if (table_store) {
            *table_store = master;  // caller keeps the tuned copy alive
            table = &**table_store;
        } else {
            local_copy = master;
            table = &*local_copy;
        }
    }

    auto model = make_model(spec, master.dim(), label_set, derive_seed(fold_seed, "init"));
    TrainHistory history = sensecnn::train(*model, train, *table,
                                           train_config(spec, derive_seed(fold_seed, "train")));
    if (history_out) *history_out = std::move(history);
    out.model_preds = predict_all(*model, label_set, test, *table);
    if (model_out) *model_out = std::move(model);
    if (table_out) *table_out = table;
    return out;
}

struct PairedPreds {
    std::vector<std::string> model, majority, random, golds;
};

void add_significance(RunSummary& summary, const std::string& model_kind, const std::string& verb,
                      const PairedPreds& p) {
    if (p.golds.empty()) return;
    auto vs_majority = mcnemar_midp(p.model, p.majority, p.golds);
    auto vs_random = mcnemar_midp(p.model, p.random, p.golds);
    summary.significance.push_back(
        {model_kind + "-vs-majority:" + verb, vs_majority.b, vs_majority.c, vs_majority.midp});
    summary.significance.push_back(
        {model_kind + "-vs-random:" + verb, vs_random.b, vs_random.c, vs_random.midp});
}

// Deterministic parallel map: worker i fills slot i, results merged in order.
template <typename Fn>
void parallel_for(std::size_t n, bool parallel, Fn&& fn) {
    if (!parallel || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(n, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

ordered_json eval_json(const EvalResult& r, bool with_confusion = true) {
    ordered_json j;
    j["n"] = r.n;
    j["correct"] = r.correct;
    j["accuracy"] = r.accuracy;
    if (with_confusion && !r.labels.empty()) {
        j["labels"] = r.labels;
        j["confusion"] = r.confusion;
    }
    ordered_json preds = ordered_json::array();
    for (const auto& p : r.predictions) {
        ordered_json pj;
        pj["id"] = p.id;
        pj["gold"] = p.gold;
        pj["pred"] = p.pred;
        preds.push_back(std::move(pj));
    }
    j["predictions"] = std::move(preds);
    return j;
}

void write_manifest(const ExperimentSpec& spec) {
    ordered_json j;
    j["tool"] = "sensecnn";
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : spec.resolved) cfg[k] = v;
    j["config"] = std::move(cfg);
    ordered_json digests = ordered_json::object();
    auto add_digest = [&digests](const std::filesystem::path& p) {
        if (!p.empty() && std::filesystem::is_regular_file(p))
            digests[p.string()] = file_digest(p);
    };
    add_digest(spec.train_path);
    for (const auto& p : spec.extra_train) add_digest(p);
    add_digest(spec.test_path);
    if (spec.embeddings != "random" && !spec.embeddings.empty())
        add_digest(spec.embeddings);
    j["corpus_digests"] = std::move(digests);

    std::ofstream out(spec.out_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << j.dump(2) << '\n';
}

void write_results_and_report(const ExperimentSpec& spec, const RunSummary& summary,
                              const std::string& title) {
    ordered_json j;
    j["mode"] = spec.mode;
    j["model"] = spec.model_kind;
    ordered_json per_verb = ordered_json::object();
    for (const VerbResult& vr : summary.verbs) {
        ordered_json vj = eval_json(vr.model);
        if (!vr.genres.empty()) {
            ordered_json gj = ordered_json::object();
            for (const auto& [genre, res] : vr.genres) {
                ordered_json one;
                one["n"] = res.n;
                one["correct"] = res.correct;
                one["accuracy"] = res.accuracy;
                gj[genre] = std::move(one);
            }
            vj["genres"] = std::move(gj);
        }
        if (!vr.warnings.empty()) vj["warnings"] = vr.warnings;
        if (vr.dropped_multi_target) vj["dropped_multi_target"] = vr.dropped_multi_target;
        per_verb[vr.verb] = std::move(vj);
    }
    j["per_verb"] = std::move(per_verb);
    j["micro"] = summary.micro;

    bool have_baselines = false;
    ordered_json baselines = ordered_json::object();
    for (const char* kind : {"majority", "random"}) {
        ordered_json bj = ordered_json::object();
        std::vector<EvalResult> all;
        for (const VerbResult& vr : summary.verbs) {
            const auto& res = kind == std::string("majority") ? vr.majority : vr.random;
            if (res) {
                bj[vr.verb] = res->accuracy;
                all.push_back(*res);
            }
        }
        if (!all.empty()) {
            have_baselines = true;
            bj["micro"] = micro_average(all);
            baselines[kind] = std::move(bj);
        }
    }
    if (have_baselines) j["baselines"] = std::move(baselines);

    ordered_json sig = ordered_json::array();
    for (const auto& s : summary.significance) {
        ordered_json sj;
        sj["pair"] = s.pair;
        sj["b"] = s.b;
        sj["c"] = s.c;
        sj["midp"] = s.midp;
        sig.push_back(std::move(sj));
    }
    j["significance"] = std::move(sig);

    std::ofstream out(spec.out_dir / "results.json");
    if (!out) throw std::runtime_error("cannot write results.json");
    out << j.dump(2) << '\n';

    // Plain-text table: one row per system, one column per verb plus the
    // micro average.
    std::ofstream rep(spec.out_dir / "report.txt");
    if (!rep) throw std::runtime_error("cannot write report.txt");
    rep << title << '\n';
    rep << std::left;
    auto cell = [&rep](const std::string& s) {
        rep << s;
        for (std::size_t i = s.size(); i < 12; ++i) rep << ' ';
    };
    cell("");
    for (const VerbResult& vr : summary.verbs) cell(vr.verb);
    cell("micro");
    rep << '\n';
    auto baseline_row = [&](const char* name, bool majority) {
        std::vector<EvalResult> all;
        cell(name);
        for (const VerbResult& vr : summary.verbs) {
            const auto& res = majority ? vr.majority : vr.random;
            cell(res ? fmt_acc(res->accuracy) : "-");
            if (res) all.push_back(*res);
        }
        cell(all.empty() ? "-" : fmt_acc(micro_average(all)));
        rep << '\n';
    };
    if (have_baselines) {
        baseline_row("BL_rand", false);
        baseline_row("BL_maj", true);
    }
    cell(spec.model_kind);
    for (const VerbResult& vr : summary.verbs) cell(fmt_acc(vr.model.accuracy));
    cell(fmt_acc(summary.micro));
    rep << '\n';
    if (!summary.significance.empty()) {
        rep << "\nmid-p McNemar\n";
        for (const auto& s : summary.significance)
            rep << "  " << s.pair << "  b=" << s.b << " c=" << s.c << " midp=" << fmt_g(s.midp)
                << '\n';
    }
    for (const VerbResult& vr : summary.verbs)
        for (const auto& w : vr.warnings) rep << "note(" << vr.verb << "): " << w << '\n';
}

double micro_of(const std::vector<VerbResult>& verbs) {
    std::vector<EvalResult> all;
    for (const auto& vr : verbs) all.push_back(vr.model);
    return micro_average(all);
}

void compare_against_file(const ExperimentSpec& spec, RunSummary& summary) {
    if (spec.compare_with.empty()) return;
    std::ifstream in(spec.compare_with);
    if (!in) throw std::runtime_error("cannot open " + spec.compare_with.string());
    json other = json::parse(in);
    std::map<std::string, std::string> other_preds;
    for (const auto& [verb, vj] : other.at("per_verb").items())
        for (const auto& p : vj.at("predictions"))
            other_preds[p.at("id").get<std::string>()] = p.at("pred").get<std::string>();

    std::vector<std::string> a, b, golds;
    for (const VerbResult& vr : summary.verbs) {
        for (const auto& p : vr.model.predictions) {
            auto it = other_preds.find(p.id);
            if (it == other_preds.end()) continue;
            a.push_back(p.pred);
            b.push_back(it->second);
            golds.push_back(p.gold);
        }
    }
    if (golds.empty()) {
        log_warning("compare_with: no shared instance ids; skipping comparison");
        return;
    }
    auto cmp = mcnemar_midp(a, b, golds);
    summary.significance.push_back(
        {spec.model_kind + "-vs-" + spec.compare_with.filename().string() + ":micro", cmp.b,
         cmp.c, cmp.midp});
}

}  // namespace

RunSummary run_cv(const ExperimentSpec& spec) {
    if (spec.train_path.empty()) throw std::runtime_error("cv: 'train' corpus required");
    Dataset fold_source = parse_instances_file(spec.train_path.string());
    std::map<std::string, Dataset> groups = group_instances(fold_source, spec.group_by);

    std::map<std::string, Dataset> extra_groups;
    for (const auto& path : spec.extra_train) {
        Dataset extra = parse_instances_file(path.string());
        for (auto& [verb, g] : group_instances(extra, spec.group_by)) {
            Dataset& dst = extra_groups[verb];
            dst.instances.insert(dst.instances.end(), g.instances.begin(), g.instances.end());
            dst.rebuild_label_set();
        }
    }

    EmbeddingTable master = build_table(spec);
    pre_warm(master, fold_source);
    for (const auto& [verb, g] : extra_groups) pre_warm(master, g);

    std::vector<std::string> verbs;
    for (const auto& [verb, g] : groups) verbs.push_back(verb);

    RunSummary summary;
    summary.verbs.resize(verbs.size());
    std::vector<PairedPreds> paired(verbs.size());

    parallel_for(verbs.size(), spec.parallel, [&](std::size_t vi) {
        const std::string& verb = verbs[vi];
        const Dataset& verb_ds = groups.at(verb);
        Dataset extra;
        if (auto it = extra_groups.find(verb); it != extra_groups.end()) extra = it->second;

        const std::uint64_t verb_seed = derive_seed(spec.seed, "verb:" + verb);
        VerbResult vr;
        vr.verb = verb;

        FoldPlan plan = stratified_folds(verb_ds, spec.folds, derive_seed(verb_seed, "folds"));
        for (const auto& w : plan.warnings) vr.warnings.push_back(w);

        std::vector<std::string> label_set = union_labels(verb_ds, extra);
        PairedPreds& p = paired[vi];
        std::vector<std::string> ids;

        for (std::size_t f = 0; f < spec.folds; ++f) {
            Dataset test = fold_subset(verb_ds, plan, f, true);
            if (test.instances.empty()) continue;
            Dataset train_raw = blend(fold_subset(verb_ds, plan, f, false), extra);
            if (train_raw.instances.empty()) {
                vr.warnings.push_back("fold " + std::to_string(f) + ": empty training split");
                continue;
            }
            const std::uint64_t fold_seed =
                derive_seed(verb_seed, "fold:" + std::to_string(f));
            Dataset train =
                maybe_balance(train_raw, spec, derive_seed(fold_seed, "balance"), vr.warnings);
            FoldOutcome fo = run_fold(spec, train, test, label_set, master, fold_seed,
                                      vr.warnings, &train_raw);
            for (std::size_t i = 0; i < test.instances.size(); ++i) {
                p.model.push_back(fo.model_preds[i]);
                p.majority.push_back(fo.majority_preds[i]);
                p.random.push_back(fo.random_preds[i]);
                p.golds.push_back(test.instances[i].label());
                ids.push_back(test.instances[i].id);
            }
        }
        if (p.golds.empty())
            throw std::runtime_error("cv: no test instances for verb '" + verb + "'");
        vr.model = evaluate(p.model, p.golds, label_set, &ids);
        vr.majority = evaluate(p.majority, p.golds, label_set, &ids);
        vr.random = evaluate(p.random, p.golds, label_set, &ids);
        summary.verbs[vi] = std::move(vr);
    });

    for (std::size_t vi = 0; vi < verbs.size(); ++vi)
        add_significance(summary, spec.model_kind, verbs[vi], paired[vi]);
    PairedPreds pooled;
    for (const auto& p : paired) {
        pooled.model.insert(pooled.model.end(), p.model.begin(), p.model.end());
        pooled.majority.insert(pooled.majority.end(), p.majority.begin(), p.majority.end());
        pooled.random.insert(pooled.random.end(), p.random.begin(), p.random.end());
        pooled.golds.insert(pooled.golds.end(), p.golds.begin(), p.golds.end());
    }
    add_significance(summary, spec.model_kind, "micro", pooled);
    summary.micro = micro_of(summary.verbs);

    compare_against_file(spec, summary);
    std::filesystem::create_directories(spec.out_dir);
    write_manifest(spec);
    write_results_and_report(spec, summary,
                             std::to_string(spec.folds) + "-fold CV (" + spec.model_kind + ")");
    return summary;
}

RunSummary run_train(const ExperimentSpec& spec) {
    if (spec.train_path.empty()) throw std::runtime_error("train: 'train' corpus required");
    if (spec.model_kind != "cnn" && spec.model_kind != "mlp")
        throw std::runtime_error("train: model must be cnn or mlp");
    Dataset train_all = parse_instances_file(spec.train_path.string());
    std::map<std::string, Dataset> groups = group_instances(train_all, spec.group_by);
    std::map<std::string, Dataset> extra_groups;
    for (const auto& path : spec.extra_train) {
        Dataset extra = parse_instances_file(path.string());
        for (auto& [verb, g] : group_instances(extra, spec.group_by)) {
            Dataset& dst = extra_groups[verb];
            dst.instances.insert(dst.instances.end(), g.instances.begin(), g.instances.end());
            dst.rebuild_label_set();
        }
    }

    EmbeddingTable master = build_table(spec);
    pre_warm(master, train_all);
    for (const auto& [verb, g] : extra_groups) pre_warm(master, g);

    std::vector<std::string> verbs;
    for (const auto& [verb, g] : groups) verbs.push_back(verb);

    RunSummary summary;
    summary.verbs.resize(verbs.size());
    std::filesystem::create_directories(spec.out_dir);

    struct Saved {
        Checkpoint ckpt;
        TrainHistory history;
    };
    std::vector<Saved> saved(verbs.size());

    parallel_for(verbs.size(), spec.parallel, [&](std::size_t vi) {
        const std::string& verb = verbs[vi];
        Dataset extra;
        if (auto it = extra_groups.find(verb); it != extra_groups.end()) extra = it->second;
        Dataset raw = blend(groups.at(verb), extra);
        const std::uint64_t verb_seed = derive_seed(spec.seed, "verb:" + verb);

        VerbResult vr;
        vr.verb = verb;
        Dataset train_ds =
            maybe_balance(raw, spec, derive_seed(verb_seed, "balance"), vr.warnings);
        std::vector<std::string> label_set = train_ds.label_set;
        if (label_set.size() < 2)
            throw std::runtime_error("train: verb '" + verb + "' has a single class");

        TrainHistory history;
        std::unique_ptr<TrainableModel> model;
        EmbeddingTable* used_table = &master;
        std::optional<EmbeddingTable> tuned_copy;
        run_fold(spec, train_ds, raw, label_set, master, verb_seed, vr.warnings, &raw,
                 &history, &model, &used_table, &tuned_copy);
        // Training-set accuracy on the unbalanced blend.
        std::vector<std::string> preds = predict_all(*model, label_set, raw, *used_table);
        std::vector<std::string> golds, ids;
        for (const Instance& inst : raw.instances) {
            golds.push_back(inst.label());
            ids.push_back(inst.id);
        }
        vr.model = evaluate(preds, golds, label_set, &ids);

        std::string seed_info = "seed=" + std::to_string(spec.seed) + " verb=" + verb;
        Saved& sv = saved[vi];
        if (spec.model_kind == "cnn") {
            sv.ckpt = make_cnn_checkpoint(static_cast<CnnModel&>(*model), *used_table, master,
                                          spec.embeddings, seed_info);
        } else {
            sv.ckpt = make_mlp_checkpoint(static_cast<MlpModel&>(*model), *used_table, master,
                                          spec.embeddings, seed_info);
        }
        sv.history = std::move(history);
        summary.verbs[vi] = std::move(vr);
    });

    for (std::size_t vi = 0; vi < verbs.size(); ++vi) {
        std::string stem = verbs[vi] == "all" ? "" : "-" + sanitize(verbs[vi]);
        save_checkpoint(spec.out_dir / ("checkpoint" + stem + ".json"), saved[vi].ckpt);
        write_history_csv(spec.out_dir / ("history" + stem + ".csv"), saved[vi].history);
    }
    summary.micro = micro_of(summary.verbs);
    write_manifest(spec);
    write_results_and_report(spec, summary, "training-set accuracy (" + spec.model_kind + ")");
    return summary;
}

namespace {

// Collects checkpoint files for eval/analyze: a single file, or every
// checkpoint*.json in a directory keyed by the verb suffix.
std::map<std::string, std::filesystem::path> checkpoint_files(
    const std::filesystem::path& path) {
    std::map<std::string, std::filesystem::path> out;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            std::string name = entry.path().filename().string();
            if (name.rfind("checkpoint", 0) != 0 || entry.path().extension() != ".json") continue;
            std::string verb = name.substr(10);
            verb = verb.substr(0, verb.size() - 5);  // drop .json
            if (!verb.empty() && verb[0] == '-') verb = verb.substr(1);
            out[verb.empty() ? "all" : verb] = entry.path();
        }
        if (out.empty())
            throw std::runtime_error("eval: no checkpoint*.json files in " + path.string());
    } else {
        out["all"] = path;
    }
    return out;
}

void genre_breakdown(VerbResult& vr, const Dataset& test) {
    bool any = false;
    for (const Instance& inst : test.instances)
        if (!inst.genre.empty()) any = true;
    if (!any) return;
    std::map<std::string, std::vector<std::size_t>> by_genre;
    for (std::size_t i = 0; i < test.instances.size(); ++i)
        by_genre[test.instances[i].genre.empty() ? "(none)" : test.instances[i].genre].push_back(
            i);
    for (const auto& [genre, idxs] : by_genre) {
        EvalResult r;
        r.n = idxs.size();
        for (std::size_t i : idxs)
            if (vr.model.predictions[i].pred == vr.model.predictions[i].gold) ++r.correct;
        r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.n);
        vr.genres[genre] = std::move(r);
    }
}

}  // namespace

RunSummary run_train_eval(const ExperimentSpec& spec) {
    if (spec.test_path.empty()) throw std::runtime_error("eval: 'test' corpus required");
    Dataset test_all = parse_instances_file(spec.test_path.string());
    std::map<std::string, Dataset> test_groups = group_instances(test_all, spec.group_by);

    RunSummary summary;

    if (!spec.model_path.empty()) {
        // Evaluate stored checkpoints.
        auto files = checkpoint_files(spec.model_path);
        std::vector<std::string> verbs;
        for (const auto& [verb, g] : test_groups) verbs.push_back(verb);
        summary.verbs.resize(verbs.size());
        parallel_for(verbs.size(), spec.parallel, [&](std::size_t vi) {
            const std::string& verb = verbs[vi];
            const Dataset& test = test_groups.at(verb);
            VerbResult vr;
            vr.verb = verb;
            std::vector<std::string> golds, ids;
            for (const Instance& inst : test.instances) {
                golds.push_back(inst.label());
                ids.push_back(inst.id);
            }
            auto it = files.find(sanitize(verb));
            if (it == files.end() && files.size() == 1 && files.count("all")) {
                it = files.find("all");  // one model for everything
            }
            if (it == files.end()) {
                vr.warnings.push_back("no checkpoint for verb '" + verb +
                                      "'; all instances counted as misses");
                log_warning(vr.warnings.back());
                std::vector<std::string> preds(test.instances.size(), "<none>");
                vr.model = evaluate(preds, golds, test.label_set, &ids);
            } else {
                Checkpoint ckpt = load_checkpoint(it->second);
                EmbeddingTable table = restore_table(
                    ckpt, spec.embeddings == "random" ? "" : spec.embeddings);
                auto model = restore_model(ckpt);
                for (const auto& l : golds) {
                    if (std::find(ckpt.label_set.begin(), ckpt.label_set.end(), l) ==
                        ckpt.label_set.end()) {
                        vr.warnings.push_back("test label '" + l +
                                              "' absent from training label set");
                        log_warning(vr.warnings.back());
                        break;
                    }
                }
                std::vector<std::string> preds =
                    predict_all(*model, ckpt.label_set, test, table);
                vr.model = evaluate(preds, golds, ckpt.label_set, &ids);
            }
            genre_breakdown(vr, test);
            summary.verbs[vi] = std::move(vr);
        });
        summary.micro = micro_of(summary.verbs);
        compare_against_file(spec, summary);
        std::filesystem::create_directories(spec.out_dir);
        write_manifest(spec);
        write_results_and_report(spec, summary, "evaluation from checkpoints");
        return summary;
    }

    // Train on the train corpus, evaluate on the full test corpus.
    if (spec.train_path.empty())
        throw std::runtime_error("eval: 'train' corpus or 'model_file' required");
    Dataset train_all = parse_instances_file(spec.train_path.string());
    std::map<std::string, Dataset> train_groups = group_instances(train_all, spec.group_by);
    std::map<std::string, Dataset> extra_groups;
    for (const auto& path : spec.extra_train) {
        Dataset extra = parse_instances_file(path.string());
        for (auto& [verb, g] : group_instances(extra, spec.group_by)) {
            Dataset& dst = extra_groups[verb];
            dst.instances.insert(dst.instances.end(), g.instances.begin(), g.instances.end());
            dst.rebuild_label_set();
        }
    }

    EmbeddingTable master = build_table(spec);
    pre_warm(master, train_all);
    pre_warm(master, test_all);
    for (const auto& [verb, g] : extra_groups) pre_warm(master, g);

    std::vector<std::string> verbs;
    for (const auto& [verb, g] : test_groups) verbs.push_back(verb);
    summary.verbs.resize(verbs.size());
    std::vector<PairedPreds> paired(verbs.size());

    parallel_for(verbs.size(), spec.parallel, [&](std::size_t vi) {
        const std::string& verb = verbs[vi];
        const Dataset& test = test_groups.at(verb);
        VerbResult vr;
        vr.verb = verb;
        std::vector<std::string> golds, ids;
        for (const Instance& inst : test.instances) {
            golds.push_back(inst.label());
            ids.push_back(inst.id);
        }

        auto tg = train_groups.find(verb);
        if (tg == train_groups.end()) {
            vr.warnings.push_back("no training data for verb '" + verb +
                                  "'; all instances counted as misses");
            log_warning(vr.warnings.back());
            std::vector<std::string> preds(test.instances.size(), "<none>");
            vr.model = evaluate(preds, golds, test.label_set, &ids);
            genre_breakdown(vr, test);
            summary.verbs[vi] = std::move(vr);
            return;
        }

        Dataset extra;
        if (auto it = extra_groups.find(verb); it != extra_groups.end()) extra = it->second;
        Dataset raw = blend(tg->second, extra);
        const std::uint64_t verb_seed = derive_seed(spec.seed, "verb:" + verb);
        Dataset train_ds =
            maybe_balance(raw, spec, derive_seed(verb_seed, "balance"), vr.warnings);
        std::vector<std::string> label_set = train_ds.label_set;

        for (const auto& l : test.label_set) {
            if (std::find(label_set.begin(), label_set.end(), l) == label_set.end()) {
                vr.warnings.push_back("test label '" + l + "' absent from training label set");
                log_warning(vr.verb + ": " + vr.warnings.back());
            }
        }

        FoldOutcome fo = run_fold(spec, train_ds, test, label_set, master, verb_seed,
                                  vr.warnings, &raw);
        vr.model = evaluate(fo.model_preds, golds, label_set, &ids);
        vr.majority = evaluate(fo.majority_preds, golds, label_set, &ids);
        vr.random = evaluate(fo.random_preds, golds, label_set, &ids);
        genre_breakdown(vr, test);
        PairedPreds& p = paired[vi];
        p.model = fo.model_preds;
        p.majority = fo.majority_preds;
        p.random = fo.random_preds;
        p.golds = golds;
        summary.verbs[vi] = std::move(vr);
    });

    for (std::size_t vi = 0; vi < verbs.size(); ++vi)
        add_significance(summary, spec.model_kind, verbs[vi], paired[vi]);
    PairedPreds pooled;
    for (const auto& p : paired) {
        pooled.model.insert(pooled.model.end(), p.model.begin(), p.model.end());
        pooled.majority.insert(pooled.majority.end(), p.majority.begin(), p.majority.end());
        pooled.random.insert(pooled.random.end(), p.random.begin(), p.random.end());
        pooled.golds.insert(pooled.golds.end(), p.golds.begin(), p.golds.end());
    }
    add_significance(summary, spec.model_kind, "micro", pooled);
    summary.micro = micro_of(summary.verbs);
    compare_against_file(spec, summary);
    std::filesystem::create_directories(spec.out_dir);
    write_manifest(spec);
    write_results_and_report(spec, summary, "train/test evaluation (" + spec.model_kind + ")");
    return summary;
}

TuneResult tune_region_sizes(const Dataset& train,
                             const std::vector<std::vector<std::size_t>>& candidates,
                             const ExperimentSpec& spec, EmbeddingTable& table,
                             std::uint64_t seed) {
    if (candidates.empty()) throw std::invalid_argument("tune: no candidates");
    TuneResult result;
    result.chosen = spec.region_sizes;

    auto counts = train.label_counts();
    bool degenerate = train.label_set.size() < 2 || train.instances.size() < 5;
    for (const auto& [label, c] : counts)
        if (c < 2) degenerate = true;
    if (!degenerate) {
        FoldPlan plan = stratified_folds(train, 5, derive_seed(seed, "tune-split"));
        Dataset val = fold_subset(train, plan, 0, true);
        Dataset tr = fold_subset(train, plan, 0, false);
        auto tr_counts = tr.label_counts();
        for (const auto& label : train.label_set)
            if (!tr_counts.count(label)) degenerate = true;
        if (val.instances.empty() || tr.instances.empty()) degenerate = true;
        if (!degenerate) {
            double best = -1.0;
            for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
                const bool tuned = spec.embedding_mode == "tuned";
                std::optional<EmbeddingTable> copy;
                EmbeddingTable* t = &table;
                if (tuned) {
                    copy = table;
                    t = &*copy;
                }
                auto model = make_model(spec, table.dim(), train.label_set,
                                        derive_seed(seed, "cand-init:" + std::to_string(ci)),
                                        &candidates[ci]);
                sensecnn::train(*model, tr, *t,
                                train_config(spec, derive_seed(seed, "cand-train:" +
                                                                         std::to_string(ci))));
                std::vector<std::string> preds = predict_all(*model, train.label_set, val, *t);
                std::size_t correct = 0;
                for (std::size_t i = 0; i < val.instances.size(); ++i)
                    if (preds[i] == val.instances[i].label()) ++correct;
                double acc = static_cast<double>(correct) /
                             static_cast<double>(val.instances.size());
                result.val_accuracy.push_back(acc);
                if (acc > best) {  // strict: earlier candidate wins ties
                    best = acc;
                    result.chosen = candidates[ci];
                }
            }
            return result;
        }
    }
    result.fallback = true;
    log_warning("tune: dataset too small for an 80:20 split; keeping default region sizes");
    return result;
}

std::map<std::string, TuneResult> run_tune(const ExperimentSpec& spec) {
    if (spec.train_path.empty()) throw std::runtime_error("tune: 'train' corpus required");
    Dataset train_all = parse_instances_file(spec.train_path.string());
    std::map<std::string, Dataset> groups = group_instances(train_all, spec.group_by);

    EmbeddingTable master = build_table(spec);
    pre_warm(master, train_all);

    std::vector<std::string> words;
    for (const auto& [word, g] : groups) words.push_back(word);
    std::vector<TuneResult> results(words.size());
    parallel_for(words.size(), spec.parallel, [&](std::size_t wi) {
        results[wi] = tune_region_sizes(groups.at(words[wi]), spec.candidates, spec, master,
                                        derive_seed(spec.seed, "tune:" + words[wi]));
    });

    std::map<std::string, TuneResult> out;
    std::filesystem::create_directories(spec.out_dir);
    ordered_json j;
    j["mode"] = "tune";
    ordered_json per_word = ordered_json::object();
    std::ofstream rep(spec.out_dir / "report.txt");
    rep << "region-size tuning\n";
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        const TuneResult& r = results[wi];
        ordered_json wj;
        wj["chosen"] = r.chosen;
        wj["fallback"] = r.fallback;
        wj["val_accuracy"] = r.val_accuracy;
        per_word[words[wi]] = std::move(wj);
        rep << "  " << words[wi] << " -> ";
        for (std::size_t i = 0; i < r.chosen.size(); ++i)
            rep << (i ? "," : "") << r.chosen[i];
        if (r.fallback) rep << "  (fallback)";
        rep << '\n';
        out[words[wi]] = r;
    }
    j["per_word"] = std::move(per_word);
    std::ofstream res(spec.out_dir / "results.json");
    res << j.dump(2) << '\n';
    write_manifest(spec);
    return out;
}

RunSummary run_wsd(const ExperimentSpec& spec) {
    if (spec.train_path.empty() || spec.test_path.empty())
        throw std::runtime_error("wsd: 'train' and 'test' corpora required");
    Dataset train_all = parse_instances_file(spec.train_path.string());
    Dataset test_all = parse_instances_file(spec.test_path.string());
    std::map<std::string, Dataset> train_groups = group_instances(train_all, "target");
    std::map<std::string, Dataset> test_groups = group_instances(test_all, "target");

    EmbeddingTable master = build_table(spec);
    pre_warm(master, train_all);
    pre_warm(master, test_all);

    std::vector<std::string> words;
    for (const auto& [word, g] : train_groups) words.push_back(word);
    for (const auto& [word, g] : test_groups)
        if (!train_groups.count(word))
            log_warning("wsd: word '" + word + "' has no training data; skipped");

    RunSummary summary;
    summary.verbs.resize(words.size());
    std::vector<bool> used(words.size(), false);

    parallel_for(words.size(), spec.parallel, [&](std::size_t wi) {
        const std::string& word = words[wi];
        const std::uint64_t word_seed = derive_seed(spec.seed, "word:" + word);
        VerbResult vr;
        vr.verb = word;

        // Resolve multi-label training instances with a seeded pick and drop
        // multi-target instances outright.
        Dataset train;
        train.target_word = word;
        SeededRng pick_rng(derive_seed(word_seed, "label-pick"));
        for (const Instance& inst : train_groups.at(word).instances) {
            if (inst.multi_target()) {
                ++vr.dropped_multi_target;
                continue;
            }
            Instance copy = inst;
            if (copy.labels.size() > 1)
                copy.labels = {copy.labels[pick_rng.below(copy.labels.size())]};
            train.instances.push_back(std::move(copy));
        }
        train.rebuild_label_set();
        if (train.instances.empty()) {
            vr.warnings.push_back("empty training data after drops; word skipped");
            log_warning("wsd: " + word + ": " + vr.warnings.back());
            summary.verbs[wi] = std::move(vr);
            return;
        }

        std::vector<std::size_t> sizes = spec.region_sizes;
        if (spec.tune_regions) {
            TuneResult tuned = tune_region_sizes(train, spec.candidates, spec, master,
                                                 derive_seed(word_seed, "tune"));
            sizes = tuned.chosen;
            if (tuned.fallback) vr.warnings.push_back("region tuning fell back to defaults");
        }

        Dataset test;
        test.target_word = word;
        if (auto it = test_groups.find(word); it != test_groups.end()) {
            for (const Instance& inst : it->second.instances) {
                if (inst.multi_target()) {
                    ++vr.dropped_multi_target;
                    continue;
                }
                test.instances.push_back(inst);
            }
            test.rebuild_label_set();
        }

        const bool tuned_mode = spec.embedding_mode == "tuned";
        std::optional<EmbeddingTable> copy;
        EmbeddingTable* table = &master;
        if (tuned_mode) {
            copy = master;
            table = &*copy;
        }

        std::vector<std::string> preds;
        if (train.label_set.size() < 2) {
            vr.warnings.push_back("single training sense; predicting it everywhere");
            preds.assign(test.instances.size(), train.label_set.front());
        } else {
            auto model = make_model(spec, master.dim(), train.label_set,
                                    derive_seed(word_seed, "init"), &sizes);
            sensecnn::train(*model, train, *table,
                            train_config(spec, derive_seed(word_seed, "train")));
            preds = predict_all(*model, train.label_set, test, *table);
        }

        // Any-match scoring: a prediction is correct if it hits any gold label.
        EvalResult r;
        r.n = test.instances.size();
        for (std::size_t i = 0; i < test.instances.size(); ++i) {
            const Instance& inst = test.instances[i];
            bool ok = std::find(inst.labels.begin(), inst.labels.end(), preds[i]) !=
                      inst.labels.end();
            if (ok) ++r.correct;
            std::string gold_joined = inst.labels.front();
            for (std::size_t li = 1; li < inst.labels.size(); ++li)
                gold_joined += "|" + inst.labels[li];
            r.predictions.push_back({inst.id, gold_joined, preds[i]});
        }
        r.accuracy = r.n ? static_cast<double>(r.correct) / static_cast<double>(r.n) : 0.0;
        vr.model = std::move(r);
        used[wi] = vr.model.n > 0;
        summary.verbs[wi] = std::move(vr);
    });

    std::vector<EvalResult> scored;
    std::vector<VerbResult> kept;
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        if (used[wi]) scored.push_back(summary.verbs[wi].model);
        kept.push_back(std::move(summary.verbs[wi]));
    }
    summary.verbs = std::move(kept);
    summary.micro = scored.empty() ? 0.0 : micro_average(scored);

    std::filesystem::create_directories(spec.out_dir);
    write_manifest(spec);
    write_results_and_report(spec, summary, "lexical-sample WSD (" + spec.model_kind + ")");
    return summary;
}

void run_analyze(const ExperimentSpec& spec) {
    if (spec.model_kind != "cnn")
        throw std::runtime_error("analyze: feature-map introspection requires model=cnn");
    if (spec.train_path.empty())
        throw std::runtime_error("analyze: 'train' corpus required (hits rank training data)");
    Dataset train_all = parse_instances_file(spec.train_path.string());
    std::map<std::string, Dataset> groups = group_instances(train_all, spec.group_by);

    std::filesystem::create_directories(spec.out_dir);

    std::map<std::string, std::filesystem::path> files;
    if (!spec.model_path.empty()) files = checkpoint_files(spec.model_path);

    EmbeddingTable master = build_table(spec);
    pre_warm(master, train_all);

    for (const auto& [verb, verb_ds] : groups) {
        std::string suffix = verb == "all" ? "" : "-" + sanitize(verb);
        const std::uint64_t verb_seed = derive_seed(spec.seed, "verb:" + verb);

        std::unique_ptr<TrainableModel> owned;
        const CnnModel* cnn = nullptr;
        std::optional<EmbeddingTable> restored;
        EmbeddingTable* table = &master;

        if (!files.empty()) {
            auto it = files.find(sanitize(verb));
            if (it == files.end() && files.size() == 1 && files.count("all"))
                it = files.find("all");
            if (it == files.end()) {
                log_warning("analyze: no checkpoint for verb '" + verb + "'; skipped");
                continue;
            }
            Checkpoint ckpt = load_checkpoint(it->second);
            if (ckpt.model_kind != "cnn") {
                log_warning("analyze: checkpoint for '" + verb + "' is not a cnn; skipped");
                continue;
            }
            restored = restore_table(ckpt, spec.embeddings == "random" ? "" : spec.embeddings);
            table = &*restored;
            pre_warm(*table, verb_ds);
            owned = restore_model(ckpt);
            cnn = static_cast<const CnnModel*>(owned.get());
        } else {
            if (verb_ds.label_set.size() < 2) {
                log_warning("analyze: verb '" + verb + "' has a single class; skipped");
                continue;
            }
            std::vector<std::string> warnings;
            std::optional<EmbeddingTable> tuned_copy;
            EmbeddingTable* used = &master;
            std::unique_ptr<TrainableModel> model;
            Dataset train_ds = maybe_balance(verb_ds, spec,
                                             derive_seed(verb_seed, "balance"), warnings);
            run_fold(spec, train_ds, verb_ds, verb_ds.label_set, master, verb_seed, warnings,
                     &verb_ds, nullptr, &model, &used, &tuned_copy);
            for (const auto& w : warnings) log_warning("analyze: " + verb + ": " + w);
            if (tuned_copy) {
                restored = std::move(tuned_copy);
                table = &*restored;
            }
            owned = std::move(model);
            cnn = static_cast<const CnnModel*>(owned.get());
        }

        auto hits = all_filter_hits(cnn->params(), cnn->config(), *table, verb_ds, spec.k_top);
        std::vector<FilterHit> flat;
        for (const auto& per_filter : hits)
            flat.insert(flat.end(), per_filter.begin(), per_filter.end());
        DistanceStats stats = distance_stats(flat, verb_ds);
        export_report(hits, *table, stats, verb_ds, spec.out_dir, suffix);
    }
    write_manifest(spec);
}

int run_experiment(ExperimentSpec& spec) {
    finalize_spec(spec);
    if (spec.mode == "cv")
        run_cv(spec);
    else if (spec.mode == "train")
        run_train(spec);
    else if (spec.mode == "eval")
        run_train_eval(spec);
    else if (spec.mode == "wsd")
        run_wsd(spec);
    else if (spec.mode == "analyze")
        run_analyze(spec);
    else if (spec.mode == "tune")
        run_tune(spec);
    else
        throw std::runtime_error("unknown mode '" + spec.mode + "'");
    return 0;
}

}  // namespace sensecnn
