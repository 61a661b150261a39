#include "sensecnn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace sensecnn {

void MlpConfig::validate() const {
    if (dim == 0) throw std::invalid_argument("mlp: dim must be >= 1");
    if (hidden == 0) throw std::invalid_argument("mlp: hidden must be >= 1");
    if (classes < 2) throw std::invalid_argument("mlp: classes must be >= 2");
    if (dropout_keep <= 0.0 || dropout_keep > 1.0)
        throw std::invalid_argument("mlp: dropout_keep must be in (0,1]");
    if (l2_lambda < 0.0) throw std::invalid_argument("mlp: l2_lambda must be >= 0");
}

MlpParams mlp_init(const MlpConfig& cfg, SeededRng& rng) {
    cfg.validate();
    MlpParams p;
    double l1 = std::sqrt(6.0 / static_cast<double>(cfg.dim + cfg.hidden));
    p.w1 = Matrix(cfg.hidden, cfg.dim);
    for (double& x : p.w1.data) x = rng.uniform(-l1, l1);
    p.b1.assign(cfg.hidden, 0.0);
    double l2 = std::sqrt(6.0 / static_cast<double>(cfg.hidden + cfg.classes));
    p.w2 = Matrix(cfg.classes, cfg.hidden);
    for (double& x : p.w2.data) x = rng.uniform(-l2, l2);
    p.b2.assign(cfg.classes, 0.0);
    return p;
}

namespace {

MlpTrace run_forward(const MlpParams& params, const MlpConfig& cfg, const SentenceMatrix& sm,
                     SeededRng* dropout_rng, const DropoutMask* fixed_mask) {
    if (sm.matrix.cols != cfg.dim)
        throw std::invalid_argument("mlp forward: sentence dim " + std::to_string(sm.matrix.cols) +
                                    " does not match config dim " + std::to_string(cfg.dim));
    if (sm.matrix.rows == 0) throw std::invalid_argument("mlp forward: empty sentence");

    MlpTrace trace;
    trace.sentence = sm;

    trace.input_sum.assign(cfg.dim, 0.0);
    for (std::size_t i = 0; i < sm.matrix.rows; ++i) {
        const double* r = sm.matrix.row(i);
        for (std::size_t j = 0; j < cfg.dim; ++j) trace.input_sum[j] += r[j];
    }

    trace.hidden.resize(cfg.hidden);
    for (std::size_t h = 0; h < cfg.hidden; ++h) {
        const double* wr = params.w1.row(h);
        double acc = params.b1[h];
        for (std::size_t j = 0; j < cfg.dim; ++j) acc += wr[j] * trace.input_sum[j];
        trace.hidden[h] = acc > 0.0 ? acc : 0.0;
    }

    std::vector<double> dropped = trace.hidden;
    if (fixed_mask) {
        if (fixed_mask->keep.size() != cfg.hidden)
            throw std::invalid_argument("mlp forward: dropout mask size mismatch");
        trace.dropout_mask = *fixed_mask;
    } else if (dropout_rng && cfg.dropout_keep < 1.0) {
        DropoutMask mask;
        mask.keep_prob = cfg.dropout_keep;
        mask.keep.resize(cfg.hidden);
        for (std::size_t h = 0; h < cfg.hidden; ++h)
            mask.keep[h] = dropout_rng->next_double() < cfg.dropout_keep ? 1 : 0;
        trace.dropout_mask = std::move(mask);
    }
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t h = 0; h < cfg.hidden; ++h)
            dropped[h] = mask.keep[h] ? dropped[h] / mask.keep_prob : 0.0;
    }

    trace.logits.resize(cfg.classes);
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        const double* wr = params.w2.row(k);
        double acc = params.b2[k];
        for (std::size_t h = 0; h < cfg.hidden; ++h) acc += wr[h] * dropped[h];
        trace.logits[k] = acc;
    }
    trace.probs = softmax(trace.logits);
    return trace;
}

}  // namespace

MlpTrace mlp_forward(const MlpParams& params, const MlpConfig& cfg, const SentenceMatrix& sm,
                     SeededRng* dropout_rng) {
    return run_forward(params, cfg, sm, dropout_rng, nullptr);
}

MlpTrace mlp_forward_masked(const MlpParams& params, const MlpConfig& cfg,
                            const SentenceMatrix& sm, const DropoutMask& mask) {
    return run_forward(params, cfg, sm, nullptr, &mask);
}

double mlp_loss(const MlpTrace& trace, std::size_t gold, const MlpParams& params,
                const MlpConfig& cfg) {
    double l = cross_entropy(trace.probs, gold);
    if (cfg.l2_lambda > 0.0)
        l += cfg.l2_lambda * (frobenius_norm_sq(params.w1) + frobenius_norm_sq(params.w2));
    return l;
}

MlpGradients mlp_backward(const MlpTrace& trace, std::size_t gold, const MlpParams& params,
                          const MlpConfig& cfg) {
    if (gold >= cfg.classes) throw std::out_of_range("mlp backward: gold index out of range");
    const bool tuned = cfg.embedding_mode == EmbeddingMode::kTuned;

    MlpGradients g;
    g.w1 = Matrix(cfg.hidden, cfg.dim);
    g.b1.assign(cfg.hidden, 0.0);
    g.w2 = Matrix(cfg.classes, cfg.hidden);
    g.b2.assign(cfg.classes, 0.0);

    std::vector<double> dlogits = trace.probs;
    dlogits[gold] -= 1.0;

    std::vector<double> dropped = trace.hidden;
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t h = 0; h < cfg.hidden; ++h)
            dropped[h] = mask.keep[h] ? dropped[h] / mask.keep_prob : 0.0;
    }

    std::vector<double> dhidden(cfg.hidden, 0.0);
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        const double dk = dlogits[k];
        g.b2[k] = dk;
        const double* wr = params.w2.row(k);
        double* gwr = g.w2.row(k);
        for (std::size_t h = 0; h < cfg.hidden; ++h) {
            gwr[h] = dk * dropped[h];
            dhidden[h] += dk * wr[h];
        }
    }
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t h = 0; h < cfg.hidden; ++h)
            dhidden[h] = mask.keep[h] ? dhidden[h] / mask.keep_prob : 0.0;
    }
    // ReLU gate, then the first layer.
    if (tuned) g.input_sum.assign(cfg.dim, 0.0);
    for (std::size_t h = 0; h < cfg.hidden; ++h) {
        double dh = trace.hidden[h] > 0.0 ? dhidden[h] : 0.0;
        g.b1[h] = dh;
        const double* wr = params.w1.row(h);
        double* gwr = g.w1.row(h);
        if (dh != 0.0) {
            for (std::size_t j = 0; j < cfg.dim; ++j) {
                gwr[j] = dh * trace.input_sum[j];
                if (tuned) g.input_sum[j] += dh * wr[j];
            }
        }
    }
    if (cfg.l2_lambda > 0.0) {
        for (std::size_t i = 0; i < g.w1.data.size(); ++i)
            g.w1.data[i] += 2.0 * cfg.l2_lambda * params.w1.data[i];
        for (std::size_t i = 0; i < g.w2.data.size(); ++i)
            g.w2.data[i] += 2.0 * cfg.l2_lambda * params.w2.data[i];
    }
    return g;
}

std::size_t mlp_predict(const MlpParams& params, const MlpConfig& cfg, const SentenceMatrix& sm) {
    MlpTrace trace = run_forward(params, cfg, sm, nullptr, nullptr);
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.probs.size(); ++k)
        if (trace.probs[k] > trace.probs[best]) best = k;
    return best;
}

}  // namespace sensecnn
