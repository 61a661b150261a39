#include "sensecnn/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sensecnn {

std::size_t CnnConfig::max_region() const {
    return *std::max_element(region_sizes.begin(), region_sizes.end());
}

void CnnConfig::validate() const {
    if (dim == 0) throw std::invalid_argument("cnn: dim must be >= 1");
    if (region_sizes.empty()) throw std::invalid_argument("cnn: region_sizes must be non-empty");
    for (std::size_t n : region_sizes)
        if (n == 0) throw std::invalid_argument("cnn: region sizes must be >= 1");
    if (maps_per_size == 0) throw std::invalid_argument("cnn: maps_per_size must be >= 1");
    if (classes < 2) throw std::invalid_argument("cnn: classes must be >= 2");
    if (dropout_keep <= 0.0 || dropout_keep > 1.0)
        throw std::invalid_argument("cnn: dropout_keep must be in (0,1]");
    if (l2_lambda < 0.0) throw std::invalid_argument("cnn: l2_lambda must be >= 0");
}

std::size_t feature_map_length(std::size_t s, std::size_t n) {
    return s >= n ? s - n + 1 : 1;
}

CnnParams init_params(const CnnConfig& cfg, SeededRng& rng) {
    cfg.validate();
    CnnParams p;
    p.filters.resize(cfg.region_sizes.size());
    for (std::size_t si = 0; si < cfg.region_sizes.size(); ++si) {
        std::size_t n = cfg.region_sizes[si];
        double limit = std::sqrt(6.0 / (static_cast<double>(n * cfg.dim) +
                                        static_cast<double>(cfg.maps_per_size)));
        p.filters[si].reserve(cfg.maps_per_size);
        for (std::size_t m = 0; m < cfg.maps_per_size; ++m) {
            Matrix w(n, cfg.dim);
            for (double& x : w.data) x = rng.uniform(-limit, limit);
            p.filters[si].push_back(std::move(w));
        }
    }
    p.biases.assign(cfg.total_maps(), 0.0);
    double limit = std::sqrt(6.0 / (static_cast<double>(cfg.total_maps()) +
                                    static_cast<double>(cfg.classes)));
    p.softmax_w = Matrix(cfg.classes, cfg.total_maps());
    for (double& x : p.softmax_w.data) x = rng.uniform(-limit, limit);
    p.softmax_b.assign(cfg.classes, 0.0);
    return p;
}

namespace {

// Window dot product against filter w, rows at or past `s` read as zeros.
double window_inner(const Matrix& x, std::size_t start, const Matrix& w) {
    const std::size_t s = x.rows;
    double acc = 0.0;
    for (std::size_t r = 0; r < w.rows; ++r) {
        std::size_t row = start + r;
        if (row >= s) break;  // zero padding contributes nothing
        const double* xr = x.row(row);
        const double* wr = w.row(r);
        for (std::size_t j = 0; j < w.cols; ++j) acc += xr[j] * wr[j];
    }
    return acc;
}

ForwardTrace run_forward(const CnnParams& params, const CnnConfig& cfg, const SentenceMatrix& sm,
                         SeededRng* dropout_rng, const DropoutMask* fixed_mask) {
    if (sm.matrix.cols != cfg.dim)
        throw std::invalid_argument("cnn forward: sentence dim " + std::to_string(sm.matrix.cols) +
                                    " does not match config dim " + std::to_string(cfg.dim));
    if (sm.matrix.rows == 0) throw std::invalid_argument("cnn forward: empty sentence");

    const std::size_t s = sm.matrix.rows;
    const std::size_t total = cfg.total_maps();

    ForwardTrace trace;
    trace.sentence = sm;
    trace.feature_maps.resize(total);
    trace.pooled.resize(total);
    trace.argmax_pos.resize(total);

    std::size_t f = 0;
    for (std::size_t si = 0; si < cfg.region_sizes.size(); ++si) {
        const std::size_t n = cfg.region_sizes[si];
        const std::size_t len = feature_map_length(s, n);
        for (std::size_t m = 0; m < cfg.maps_per_size; ++m, ++f) {
            const Matrix& w = params.filters[si][m];
            std::vector<double>& fmap = trace.feature_maps[f];
            fmap.resize(len);
            double best = -1.0;  // activations are >= 0, so window 0 always wins this
            std::size_t best_pos = 0;
            for (std::size_t i = 0; i < len; ++i) {
                double c = window_inner(sm.matrix, i, w) + params.biases[f];
                double act = c > 0.0 ? c : 0.0;
                fmap[i] = act;
                if (act > best) {  // strict: first maximum wins ties
                    best = act;
                    best_pos = i;
                }
            }
            trace.pooled[f] = best;
            trace.argmax_pos[f] = best_pos;
        }
    }

    // Inverted dropout on the pooled feature vector.
    std::vector<double> dropped = trace.pooled;
    if (fixed_mask) {
        if (fixed_mask->keep.size() != total)
            throw std::invalid_argument("cnn forward: dropout mask size mismatch");
        trace.dropout_mask = *fixed_mask;
    } else if (dropout_rng && cfg.dropout_keep < 1.0) {
        DropoutMask mask;
        mask.keep_prob = cfg.dropout_keep;
        mask.keep.resize(total);
        for (std::size_t i = 0; i < total; ++i)
            mask.keep[i] = dropout_rng->next_double() < cfg.dropout_keep ? 1 : 0;
        trace.dropout_mask = std::move(mask);
    }
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t i = 0; i < total; ++i)
            dropped[i] = mask.keep[i] ? dropped[i] / mask.keep_prob : 0.0;
    }

    trace.logits.resize(cfg.classes);
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        const double* wr = params.softmax_w.row(k);
        double acc = params.softmax_b[k];
        for (std::size_t i = 0; i < total; ++i) acc += wr[i] * dropped[i];
        trace.logits[k] = acc;
    }
    trace.probs = softmax(trace.logits);
    return trace;
}

}  // namespace

ForwardTrace forward(const CnnParams& params, const CnnConfig& cfg, const SentenceMatrix& sm,
                     SeededRng* dropout_rng) {
    return run_forward(params, cfg, sm, dropout_rng, nullptr);
}

ForwardTrace forward_masked(const CnnParams& params, const CnnConfig& cfg,
                            const SentenceMatrix& sm, const DropoutMask& mask) {
    return run_forward(params, cfg, sm, nullptr, &mask);
}

double loss(const ForwardTrace& trace, std::size_t gold, const CnnParams& params,
            const CnnConfig& cfg) {
    double l = cross_entropy(trace.probs, gold);
    if (cfg.l2_lambda > 0.0) {
        double penalty = frobenius_norm_sq(params.softmax_w);
        for (const auto& size_filters : params.filters)
            for (const Matrix& w : size_filters) penalty += frobenius_norm_sq(w);
        l += cfg.l2_lambda * penalty;
    }
    return l;
}

CnnGradients backward(const ForwardTrace& trace, std::size_t gold, const CnnParams& params,
                      const CnnConfig& cfg) {
    if (gold >= cfg.classes) throw std::out_of_range("cnn backward: gold index out of range");
    const std::size_t total = cfg.total_maps();
    const std::size_t s = trace.sentence.matrix.rows;
    const bool tuned = cfg.embedding_mode == EmbeddingMode::kTuned;

    CnnGradients g;
    g.filters.resize(params.filters.size());
    for (std::size_t si = 0; si < params.filters.size(); ++si) {
        g.filters[si].reserve(params.filters[si].size());
        for (const Matrix& w : params.filters[si]) g.filters[si].emplace_back(w.rows, w.cols);
    }
    g.biases.assign(total, 0.0);
    g.softmax_w = Matrix(cfg.classes, total);
    g.softmax_b.assign(cfg.classes, 0.0);
    if (tuned) g.embedding = Matrix(s, cfg.dim);

    // Softmax + cross entropy: dL/dlogit = p - onehot(gold).
    std::vector<double> dlogits = trace.probs;
    dlogits[gold] -= 1.0;

    // Reconstruct the post-dropout pooled vector the softmax layer consumed.
    std::vector<double> dropped = trace.pooled;
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t i = 0; i < total; ++i)
            dropped[i] = mask.keep[i] ? dropped[i] / mask.keep_prob : 0.0;
    }

    std::vector<double> dpooled(total, 0.0);
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        const double dk = dlogits[k];
        g.softmax_b[k] = dk;
        const double* wr = params.softmax_w.row(k);
        double* gwr = g.softmax_w.row(k);
        for (std::size_t i = 0; i < total; ++i) {
            gwr[i] = dk * dropped[i];
            dpooled[i] += dk * wr[i];
        }
    }
    if (cfg.l2_lambda > 0.0) {
        for (std::size_t i = 0; i < g.softmax_w.data.size(); ++i)
            g.softmax_w.data[i] += 2.0 * cfg.l2_lambda * params.softmax_w.data[i];
    }
    if (trace.dropout_mask) {
        const DropoutMask& mask = *trace.dropout_mask;
        for (std::size_t i = 0; i < total; ++i)
            dpooled[i] = mask.keep[i] ? dpooled[i] / mask.keep_prob : 0.0;
    }

    std::size_t f = 0;
    for (std::size_t si = 0; si < cfg.region_sizes.size(); ++si) {
        for (std::size_t m = 0; m < cfg.maps_per_size; ++m, ++f) {
            const Matrix& w = params.filters[si][m];
            Matrix& gw = g.filters[si][m];
            if (cfg.l2_lambda > 0.0) {
                for (std::size_t i = 0; i < w.data.size(); ++i)
                    gw.data[i] = 2.0 * cfg.l2_lambda * w.data[i];
            }
            const double gf = dpooled[f];
            // Max pooling routes to the argmax window; ReLU gate open iff the
            // stored activation is positive.
            if (gf == 0.0 || trace.pooled[f] <= 0.0) continue;
            g.biases[f] += gf;
            const std::size_t start = trace.argmax_pos[f];
            for (std::size_t r = 0; r < w.rows; ++r) {
                std::size_t row = start + r;
                if (row >= s) break;  // padding rows carry no signal
                const double* xr = trace.sentence.matrix.row(row);
                const double* wr = w.row(r);
                double* gwr = gw.row(r);
                for (std::size_t j = 0; j < cfg.dim; ++j) {
                    gwr[j] += gf * xr[j];
                    if (tuned) g.embedding.at(row, j) += gf * wr[j];
                }
            }
        }
    }
    return g;
}

std::size_t predict(const CnnParams& params, const CnnConfig& cfg, const SentenceMatrix& sm) {
    ForwardTrace trace = run_forward(params, cfg, sm, nullptr, nullptr);
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.probs.size(); ++k)
        if (trace.probs[k] > trace.probs[best]) best = k;
    return best;
}

}  // namespace sensecnn
