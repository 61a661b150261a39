#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sensecnn/embeddings.hpp"
#include "sensecnn/numerics.hpp"

namespace sensecnn {

enum class EmbeddingMode : std::uint8_t { kStatic, kTuned };

struct CnnConfig {
    std::size_t dim = 300;
    std::vector<std::size_t> region_sizes = {3, 4, 5};
    std::size_t maps_per_size = 100;
    std::size_t classes = 0;
    double dropout_keep = 0.5;  // keep probability, in (0,1]
    double l2_lambda = 1e-3;
    EmbeddingMode embedding_mode = EmbeddingMode::kStatic;

    std::size_t total_maps() const { return region_sizes.size() * maps_per_size; }
    std::size_t max_region() const;
    void validate() const;
};

// One weight matrix w in R^{n x d} per filter, a scalar bias per filter, and
// the softmax layer on top of the concatenated pooled features.
struct CnnParams {
    std::vector<std::vector<Matrix>> filters;  // [region size index][map]
    std::vector<double> biases;                // flat, region-size-major filter order
    Matrix softmax_w;                          // classes x total_maps
    std::vector<double> softmax_b;             // classes
};

struct DropoutMask {
    std::vector<std::uint8_t> keep;
    double keep_prob = 1.0;
};

// Everything forward() computed for one sentence, kept around so backward()
// can replay the max-pool routing, the ReLU gates and the dropout mask.
struct ForwardTrace {
    SentenceMatrix sentence;
    std::vector<std::vector<double>> feature_maps;  // per filter, post-activation
    std::vector<double> pooled;                     // max per feature map, pre-dropout
    std::vector<std::size_t> argmax_pos;            // window start index per filter
    std::optional<DropoutMask> dropout_mask;
    std::vector<double> logits;
    std::vector<double> probs;
};

struct CnnGradients {
    std::vector<std::vector<Matrix>> filters;
    std::vector<double> biases;
    Matrix softmax_w;
    std::vector<double> softmax_b;
    Matrix embedding;  // s x d, only populated in tuned mode
};

// Glorot uniform init. Filters of region size n are treated as a linear map
// R^{n*d} -> R^m, so the limit is sqrt(6 / (n*d + m)); the softmax layer uses
// sqrt(6 / (total_maps + classes)). Biases start at zero.
CnnParams init_params(const CnnConfig& cfg, SeededRng& rng);

// Narrow convolution + bias + ReLU + max-over-time pooling + softmax.
// Sentences shorter than a filter still produce one window, read against
// implicit zero padding rows, so the feature-map length is max(s - n + 1, 1).
// With `dropout_rng` set and keep < 1, inverted dropout is applied to the
// pooled vector and the mask is recorded in the trace.
ForwardTrace forward(const CnnParams& params, const CnnConfig& cfg, const SentenceMatrix& sm,
                     SeededRng* dropout_rng = nullptr);

// Same forward pass with a fixed dropout mask (gradient checks, replay).
ForwardTrace forward_masked(const CnnParams& params, const CnnConfig& cfg,
                            const SentenceMatrix& sm, const DropoutMask& mask);

// Cross entropy plus l2_lambda * (||softmax_w||_F^2 + sum over filter norms).
// Biases and embeddings are not penalized.
double loss(const ForwardTrace& trace, std::size_t gold, const CnnParams& params,
            const CnnConfig& cfg);

// Exact gradients of loss(). Max-pooling routes the data gradient only to the
// argmax window (first maximum on ties); the ReLU gate is open iff the
// pre-activation was positive; the dropout mask is replayed from the trace.
// Embedding row gradients are produced only in tuned mode.
CnnGradients backward(const ForwardTrace& trace, std::size_t gold, const CnnParams& params,
                      const CnnConfig& cfg);

// Argmax of the dropout-free class distribution; ties go to the lowest index.
std::size_t predict(const CnnParams& params, const CnnConfig& cfg, const SentenceMatrix& sm);

// Feature-map length for region size n on an s-token sentence.
std::size_t feature_map_length(std::size_t s, std::size_t n);

}  // namespace sensecnn
