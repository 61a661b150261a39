#include "sensecnn/optim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sensecnn {

AdamState::AdamState(AdamHyper hyper) : hyper_(hyper) {
    if (hyper_.beta1 <= 0.0 || hyper_.beta1 >= 1.0 || hyper_.beta2 <= 0.0 || hyper_.beta2 >= 1.0)
        throw std::invalid_argument("adam: betas must lie in (0,1)");
}

void AdamState::update(std::vector<double>& m, std::vector<double>& v, double* theta,
                       const std::vector<double>& grad, double corr1, double corr2) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double g = grad[i];
        m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * g;
        v[i] = hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * g * g;
        const double mhat = m[i] / corr1;
        const double vhat = v[i] / corr2;
        theta[i] -= hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps);
    }
}

void AdamState::step(const std::vector<TensorRef>& params,
                     const std::vector<std::vector<double>>& grads, EmbeddingTable* table,
                     const std::map<std::size_t, std::vector<double>>& row_grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam: tensor/gradient count mismatch");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value->size(), 0.0);
            v_[i].assign(params[i].value->size(), 0.0);
        }
    }
    ++t_;
    const double corr1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].value->size() != grads[i].size())
            throw std::invalid_argument("adam: shape mismatch for tensor " + params[i].name);
        update(m_[i], v_[i], params[i].value->data(), grads[i], corr1, corr2);
    }
    if (table) {
        Matrix& emb = table->mutable_matrix();
        for (const auto& [row, grad] : row_grads) {
            if (grad.size() != emb.cols) throw std::invalid_argument("adam: embedding row shape");
            auto [it, inserted] = row_mv_.try_emplace(row);
            if (inserted) {
                it->second.first.assign(emb.cols, 0.0);
                it->second.second.assign(emb.cols, 0.0);
            }
            update(it->second.first, it->second.second, emb.row(row), grad, corr1, corr2);
        }
    }
}

TrainHistory train(TrainableModel& model, const Dataset& data, EmbeddingTable& table,
                   const TrainConfig& cfg) {
    if (cfg.iterations == 0) throw std::invalid_argument("train: iterations must be >= 1");
    if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    if (data.instances.empty()) throw std::invalid_argument("train: empty dataset");

    const bool tuned = model.embedding_mode() == EmbeddingMode::kTuned;
    SeededRng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    SeededRng dropout_rng(derive_seed(cfg.seed, "dropout"));
    AdamState adam(cfg.adam);
    std::vector<TensorRef> tensors = model.trainable_tensors();

    std::vector<const Instance*> order;
    order.reserve(data.instances.size());
    for (const Instance& inst : data.instances) order.push_back(&inst);
    std::size_t pos = order.size();  // forces a shuffle on the first step

    TrainHistory history;
    history.losses.reserve(cfg.iterations);
    for (std::size_t step = 0; step < cfg.iterations; ++step) {
        if (pos >= order.size()) {
            shuffle_rng.shuffle(order);
            pos = 0;
        }
        std::size_t take = std::min(cfg.batch_size, order.size() - pos);
        std::span<const Instance* const> batch(order.data() + pos, take);
        pos += take;

        BatchGradients grads = model.gradient_batch(batch, table, &dropout_rng);
        adam.step(tensors, grads.tensors, tuned ? &table : nullptr, grads.embedding_rows);
        history.losses.push_back(grads.mean_loss);
    }
    return history;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,loss\n";
    char buf[48];
    for (std::size_t i = 0; i < history.losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", history.losses[i]);
        out << (i + 1) << ',' << buf << '\n';
    }
}

}  // namespace sensecnn
