#include "sensecnn/model.hpp"

#include <stdexcept>

namespace sensecnn {

std::size_t label_index_of(const std::vector<std::string>& label_set, const std::string& label) {
    for (std::size_t i = 0; i < label_set.size(); ++i)
        if (label_set[i] == label) return i;
    throw std::out_of_range("label '" + label + "' not in model label set");
}

CnnModel::CnnModel(CnnConfig cfg, std::vector<std::string> label_set, SeededRng& init_rng)
    : cfg_(std::move(cfg)), labels_(std::move(label_set)) {
    cfg_.classes = labels_.size();
    params_ = init_params(cfg_, init_rng);
}

CnnModel::CnnModel(CnnConfig cfg, std::vector<std::string> label_set, CnnParams params)
    : cfg_(std::move(cfg)), labels_(std::move(label_set)), params_(std::move(params)) {}

std::vector<TensorRef> CnnModel::trainable_tensors() {
    std::vector<TensorRef> refs;
    for (std::size_t si = 0; si < params_.filters.size(); ++si) {
        for (std::size_t m = 0; m < params_.filters[si].size(); ++m) {
            refs.push_back({"filter." + std::to_string(cfg_.region_sizes[si]) + "." +
                                std::to_string(m),
                            &params_.filters[si][m].data});
        }
    }
    refs.push_back({"biases", &params_.biases});
    refs.push_back({"softmax_w", &params_.softmax_w.data});
    refs.push_back({"softmax_b", &params_.softmax_b});
    return refs;
}

BatchGradients CnnModel::gradient_batch(std::span<const Instance* const> batch,
                                        EmbeddingTable& table, SeededRng* dropout_rng) {
    if (batch.empty()) throw std::invalid_argument("gradient_batch: empty batch");
    const bool tuned = cfg_.embedding_mode == EmbeddingMode::kTuned;
    const double inv = 1.0 / static_cast<double>(batch.size());

    BatchGradients out;
    CnnGradients acc;
    bool first = true;
    for (const Instance* inst : batch) {
        SentenceMatrix sm = table.embed_sentence(inst->tokens);
        ForwardTrace trace = forward(params_, cfg_, sm, dropout_rng);
        std::size_t gold = label_index_of(labels_, inst->label());
        out.mean_loss += loss(trace, gold, params_, cfg_);
        CnnGradients g = backward(trace, gold, params_, cfg_);
        if (tuned) {
            for (std::size_t r = 0; r < sm.table_rows.size(); ++r) {
                auto [it, inserted] =
                    out.embedding_rows.try_emplace(sm.table_rows[r], cfg_.dim, 0.0);
                const double* gr = g.embedding.row(r);
                for (std::size_t j = 0; j < cfg_.dim; ++j) it->second[j] += gr[j];
            }
        }
        if (first) {
            acc = std::move(g);
            first = false;
        } else {
            for (std::size_t si = 0; si < acc.filters.size(); ++si)
                for (std::size_t m = 0; m < acc.filters[si].size(); ++m)
                    for (std::size_t i = 0; i < acc.filters[si][m].data.size(); ++i)
                        acc.filters[si][m].data[i] += g.filters[si][m].data[i];
            for (std::size_t i = 0; i < acc.biases.size(); ++i) acc.biases[i] += g.biases[i];
            for (std::size_t i = 0; i < acc.softmax_w.data.size(); ++i)
                acc.softmax_w.data[i] += g.softmax_w.data[i];
            for (std::size_t i = 0; i < acc.softmax_b.size(); ++i)
                acc.softmax_b[i] += g.softmax_b[i];
        }
    }
    out.mean_loss *= inv;

    for (auto& size_filters : acc.filters)
        for (Matrix& gw : size_filters) {
            for (double& x : gw.data) x *= inv;
            out.tensors.push_back(std::move(gw.data));
        }
    for (double& x : acc.biases) x *= inv;
    out.tensors.push_back(std::move(acc.biases));
    for (double& x : acc.softmax_w.data) x *= inv;
    out.tensors.push_back(std::move(acc.softmax_w.data));
    for (double& x : acc.softmax_b) x *= inv;
    out.tensors.push_back(std::move(acc.softmax_b));
    for (auto& [row, grad] : out.embedding_rows)
        for (double& x : grad) x *= inv;
    return out;
}

std::size_t CnnModel::predict_class(const std::vector<std::string>& tokens,
                                    EmbeddingTable& table) {
    SentenceMatrix sm = table.embed_sentence(tokens);
    return predict(params_, cfg_, sm);
}

MlpModel::MlpModel(MlpConfig cfg, std::vector<std::string> label_set, SeededRng& init_rng)
    : cfg_(std::move(cfg)), labels_(std::move(label_set)) {
    cfg_.classes = labels_.size();
    params_ = mlp_init(cfg_, init_rng);
}

MlpModel::MlpModel(MlpConfig cfg, std::vector<std::string> label_set, MlpParams params)
    : cfg_(std::move(cfg)), labels_(std::move(label_set)), params_(std::move(params)) {}

std::vector<TensorRef> MlpModel::trainable_tensors() {
    return {{"w1", &params_.w1.data},
            {"b1", &params_.b1},
            {"w2", &params_.w2.data},
            {"b2", &params_.b2}};
}

BatchGradients MlpModel::gradient_batch(std::span<const Instance* const> batch,
                                        EmbeddingTable& table, SeededRng* dropout_rng) {
    if (batch.empty()) throw std::invalid_argument("gradient_batch: empty batch");
    const bool tuned = cfg_.embedding_mode == EmbeddingMode::kTuned;
    const double inv = 1.0 / static_cast<double>(batch.size());

    BatchGradients out;
    MlpGradients acc;
    acc.w1 = Matrix(cfg_.hidden, cfg_.dim);
    acc.b1.assign(cfg_.hidden, 0.0);
    acc.w2 = Matrix(cfg_.classes, cfg_.hidden);
    acc.b2.assign(cfg_.classes, 0.0);

    for (const Instance* inst : batch) {
        SentenceMatrix sm = table.embed_sentence(inst->tokens);
        MlpTrace trace = mlp_forward(params_, cfg_, sm, dropout_rng);
        std::size_t gold = label_index_of(labels_, inst->label());
        out.mean_loss += mlp_loss(trace, gold, params_, cfg_);
        MlpGradients g = mlp_backward(trace, gold, params_, cfg_);
        for (std::size_t i = 0; i < acc.w1.data.size(); ++i) acc.w1.data[i] += g.w1.data[i];
        for (std::size_t i = 0; i < acc.b1.size(); ++i) acc.b1[i] += g.b1[i];
        for (std::size_t i = 0; i < acc.w2.data.size(); ++i) acc.w2.data[i] += g.w2.data[i];
        for (std::size_t i = 0; i < acc.b2.size(); ++i) acc.b2[i] += g.b2[i];
        if (tuned) {
            // du/dx_i is the identity for every token, so each row gets dL/du.
            for (std::size_t r = 0; r < sm.table_rows.size(); ++r) {
                auto [it, inserted] =
                    out.embedding_rows.try_emplace(sm.table_rows[r], cfg_.dim, 0.0);
                for (std::size_t j = 0; j < cfg_.dim; ++j) it->second[j] += g.input_sum[j];
            }
        }
    }
    out.mean_loss *= inv;
    for (double& x : acc.w1.data) x *= inv;
    for (double& x : acc.b1) x *= inv;
    for (double& x : acc.w2.data) x *= inv;
    for (double& x : acc.b2) x *= inv;
    out.tensors.push_back(std::move(acc.w1.data));
    out.tensors.push_back(std::move(acc.b1));
    out.tensors.push_back(std::move(acc.w2.data));
    out.tensors.push_back(std::move(acc.b2));
    for (auto& [row, grad] : out.embedding_rows)
        for (double& x : grad) x *= inv;
    return out;
}

std::size_t MlpModel::predict_class(const std::vector<std::string>& tokens,
                                    EmbeddingTable& table) {
    SentenceMatrix sm = table.embed_sentence(tokens);
    return mlp_predict(params_, cfg_, sm);
}

}  // namespace sensecnn
