#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sensecnn/checkpoint.hpp"
#include "sensecnn/dataset.hpp"
#include "sensecnn/embeddings.hpp"
#include "sensecnn/eval.hpp"
#include "sensecnn/harness.hpp"
#include "sensecnn/introspect.hpp"
#include "sensecnn/model.hpp"
#include "sensecnn/numerics.hpp"
#include "sensecnn/optim.hpp"

namespace py = pybind11;
using namespace sensecnn;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("matrix: no rows");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw std::invalid_argument("matrix: ragged rows");
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    }
    return m;
}

// Convenience wrapper owning a trained model together with its table.
struct PyClassifier {
    std::unique_ptr<TrainableModel> model;
    std::shared_ptr<EmbeddingTable> table;
    std::vector<std::string> labels;
    std::vector<double> history;

    std::string predict(const std::vector<std::string>& tokens) {
        return labels[model->predict_class(tokens, *table)];
    }
    std::vector<std::string> predict_dataset(const Dataset& ds) {
        std::vector<std::string> out;
        out.reserve(ds.instances.size());
        for (const Instance& inst : ds.instances)
            out.push_back(labels[model->predict_class(inst.tokens, *table)]);
        return out;
    }
};

PyClassifier train_classifier(const std::string& kind, const Dataset& data,
                              std::shared_ptr<EmbeddingTable> table, std::size_t iterations,
                              std::size_t batch_size, std::uint64_t seed,
                              const std::vector<std::size_t>& region_sizes,
                              std::size_t maps_per_size, std::size_t hidden, double dropout_keep,
                              double l2_lambda, double learning_rate,
                              const std::string& embedding_mode) {
    PyClassifier clf;
    clf.table = std::move(table);
    clf.labels = data.label_set;
    EmbeddingMode mode =
        embedding_mode == "tuned" ? EmbeddingMode::kTuned : EmbeddingMode::kStatic;
    SeededRng init_rng(derive_seed(seed, "init"));
    if (kind == "cnn") {
        CnnConfig cfg;
        cfg.dim = clf.table->dim();
        cfg.region_sizes = region_sizes;
        cfg.maps_per_size = maps_per_size;
        cfg.classes = clf.labels.size();
        cfg.dropout_keep = dropout_keep;
        cfg.l2_lambda = l2_lambda;
        cfg.embedding_mode = mode;
        clf.model = std::make_unique<CnnModel>(cfg, clf.labels, init_rng);
    } else if (kind == "mlp") {
        MlpConfig cfg;
        cfg.dim = clf.table->dim();
        cfg.hidden = hidden;
        cfg.classes = clf.labels.size();
        cfg.dropout_keep = dropout_keep;
        cfg.l2_lambda = l2_lambda;
        cfg.embedding_mode = mode;
        clf.model = std::make_unique<MlpModel>(cfg, clf.labels, init_rng);
    } else {
        throw std::invalid_argument("train: kind must be 'cnn' or 'mlp'");
    }
    TrainConfig tc;
    tc.iterations = iterations;
    tc.batch_size = batch_size;
    tc.seed = derive_seed(seed, "train");
    tc.dropout_keep = dropout_keep;
    tc.l2_lambda = l2_lambda;
    tc.embedding_mode = mode;
    tc.adam.lr = learning_rate;
    clf.history = train(*clf.model, data, *clf.table, tc).losses;
    return clf;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "sensecnn: one-layer text CNN toolkit (C++ core)";

    m.def("softmax",
          [](const std::vector<double>& v) { return softmax(std::span<const double>(v)); });
    m.def("relu", [](const std::vector<double>& v) { return relu(std::span<const double>(v)); });
    m.def("cross_entropy", [](const std::vector<double>& probs, std::size_t gold) {
        return cross_entropy(std::span<const double>(probs), gold);
    });
    m.def("frobenius_inner",
          [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
              return frobenius_inner(matrix_from_rows(a), matrix_from_rows(b));
          });

    py::class_<SeededRng>(m, "SeededRng")
        .def(py::init<std::uint64_t>())
        .def("next_u64", &SeededRng::next_u64)
        .def("next_double", &SeededRng::next_double)
        .def("uniform", &SeededRng::uniform)
        .def("below", &SeededRng::below);
    m.def("sample_uniform", &sample_uniform);
    m.def("derive_seed", &derive_seed);

    py::class_<EmbeddingTable, std::shared_ptr<EmbeddingTable>>(m, "EmbeddingTable")
        .def_static("load_file",
                    [](const std::string& path, std::size_t dim) {
                        return std::make_shared<EmbeddingTable>(
                            EmbeddingTable::load_file(path, dim));
                    })
        .def_static("random_init",
                    [](std::size_t dim, double bound, std::uint64_t seed) {
                        return std::make_shared<EmbeddingTable>(
                            EmbeddingTable::random_init(dim, bound, seed));
                    })
        .def_property_readonly("dim", &EmbeddingTable::dim)
        .def_property_readonly("rows", &EmbeddingTable::rows)
        .def_property_readonly("oov_bound", &EmbeddingTable::oov_bound)
        .def("reseed_oov", &EmbeddingTable::reseed_oov)
        .def("embed_sentence", [](EmbeddingTable& t, const std::vector<std::string>& tokens) {
            SentenceMatrix sm = t.embed_sentence(tokens);
            std::vector<std::vector<double>> rows(sm.matrix.rows);
            for (std::size_t i = 0; i < sm.matrix.rows; ++i)
                rows[i].assign(sm.matrix.row(i), sm.matrix.row(i) + sm.matrix.cols);
            return rows;
        });
    m.def("oov_bound_from_table",
          [](const std::shared_ptr<EmbeddingTable>& t) { return oov_bound_from_table(*t); });

    py::class_<Instance>(m, "Instance")
        .def_readonly("id", &Instance::id)
        .def_readonly("tokens", &Instance::tokens)
        .def_readonly("labels", &Instance::labels)
        .def_readonly("target_index", &Instance::target_index)
        .def_readonly("genre", &Instance::genre)
        .def_property_readonly("label", [](const Instance& i) { return i.label(); });

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("instances", &Dataset::instances)
        .def_readonly("label_set", &Dataset::label_set)
        .def("__len__", [](const Dataset& d) { return d.size(); })
        .def("label_counts", &Dataset::label_counts);

    m.def("parse_instances_file", &parse_instances_file);
    m.def("parse_instances", [](const std::string& text) {
        std::istringstream in(text);
        return parse_instances(in);
    });
    m.def("serialize_instances", [](const Dataset& ds) {
        std::ostringstream out;
        serialize_instances(ds, out);
        return out.str();
    });

    m.def(
        "synth_cue_dataset",
        [](std::size_t classes, const std::vector<std::vector<std::string>>& cues,
           std::size_t n_per_class, std::size_t sentence_len, const std::vector<std::string>& vocab,
           std::uint64_t seed) {
            SynthCueSpec spec;
            spec.classes = classes;
            spec.cue_ngrams = cues;
            spec.n_per_class = n_per_class;
            spec.sentence_len = sentence_len;
            spec.vocab = vocab;
            return synth_cue_dataset(spec, seed);
        },
        py::arg("classes"), py::arg("cues"), py::arg("n_per_class"), py::arg("sentence_len"),
        py::arg("vocab"), py::arg("seed"));

    m.def("stratified_fold_of", [](const Dataset& ds, std::size_t k, std::uint64_t seed) {
        FoldPlan plan = stratified_folds(ds, k, seed);
        return plan.assignments;
    });
    m.def("balance", [](const Dataset& ds, const std::string& mode, std::uint64_t seed) {
        return balance(ds,
                       mode == "over" ? BalanceMode::kOversample : BalanceMode::kUndersample,
                       seed);
    });
    m.def("majority_baseline", &majority_baseline);

    py::class_<PyClassifier>(m, "Classifier")
        .def("predict", &PyClassifier::predict)
        .def("predict_dataset", &PyClassifier::predict_dataset)
        .def_readonly("history", &PyClassifier::history)
        .def_readonly("labels", &PyClassifier::labels);

    m.def("train_classifier", &train_classifier, py::arg("kind"), py::arg("data"),
          py::arg("table"), py::arg("iterations") = 200, py::arg("batch_size") = 50,
          py::arg("seed") = 1,
          py::arg("region_sizes") = std::vector<std::size_t>{3, 4, 5},
          py::arg("maps_per_size") = 100, py::arg("hidden") = 1024,
          py::arg("dropout_keep") = 0.5, py::arg("l2_lambda") = 1e-3,
          py::arg("learning_rate") = 1e-4, py::arg("embedding_mode") = "static");

    m.def("evaluate", [](const std::vector<std::string>& preds,
                         const std::vector<std::string>& golds,
                         const std::vector<std::string>& label_set) {
        EvalResult r = evaluate(preds, golds, label_set);
        py::dict d;
        d["n"] = r.n;
        d["correct"] = r.correct;
        d["accuracy"] = r.accuracy;
        d["labels"] = r.labels;
        d["confusion"] = r.confusion;
        return d;
    });
    m.def("micro_average", [](const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
        std::vector<EvalResult> results;
        for (auto [correct, n] : pairs) {
            EvalResult r;
            r.correct = correct;
            r.n = n;
            r.accuracy = n ? static_cast<double>(correct) / n : 0.0;
            results.push_back(r);
        }
        return micro_average(results);
    });
    m.def("mcnemar_midp", [](std::size_t b, std::size_t c) {
        PairedComparison p = mcnemar_midp_counts(b, c);
        return py::make_tuple(p.b, p.c, p.midp);
    });
    m.def("mcnemar_midp_preds",
          [](const std::vector<std::string>& a, const std::vector<std::string>& b,
             const std::vector<std::string>& golds) {
              PairedComparison p = mcnemar_midp(a, b, golds);
              return py::make_tuple(p.b, p.c, p.midp);
          });

    m.def("run_config", [](const std::filesystem::path& path) {
        ExperimentSpec spec = load_config(path);
        return run_experiment(spec);
    });
}
