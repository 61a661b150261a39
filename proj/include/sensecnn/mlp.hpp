#pragma once

#include <optional>
#include <vector>

#include "sensecnn/cnn.hpp"  // EmbeddingMode, DropoutMask
#include "sensecnn/embeddings.hpp"
#include "sensecnn/numerics.hpp"

namespace sensecnn {

// One-hidden-layer network over the sum of the sentence's word vectors.
struct MlpConfig {
    std::size_t dim = 300;
    std::size_t hidden = 1024;
    std::size_t classes = 0;
    double dropout_keep = 0.5;
    double l2_lambda = 1e-3;
    EmbeddingMode embedding_mode = EmbeddingMode::kStatic;

    void validate() const;
};

struct MlpParams {
    Matrix w1;  // hidden x dim
    std::vector<double> b1;
    Matrix w2;  // classes x hidden
    std::vector<double> b2;
};

struct MlpTrace {
    SentenceMatrix sentence;
    std::vector<double> input_sum;  // u = sum of token vectors
    std::vector<double> hidden;     // ReLU(w1 u + b1), pre-dropout
    std::optional<DropoutMask> dropout_mask;
    std::vector<double> logits;
    std::vector<double> probs;
};

struct MlpGradients {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    std::vector<double> input_sum;  // dL/du; per-token row gradient in tuned mode
};

MlpParams mlp_init(const MlpConfig& cfg, SeededRng& rng);

MlpTrace mlp_forward(const MlpParams& params, const MlpConfig& cfg, const SentenceMatrix& sm,
                     SeededRng* dropout_rng = nullptr);
MlpTrace mlp_forward_masked(const MlpParams& params, const MlpConfig& cfg,
                            const SentenceMatrix& sm, const DropoutMask& mask);

double mlp_loss(const MlpTrace& trace, std::size_t gold, const MlpParams& params,
                const MlpConfig& cfg);

// Exact gradients; the l2 penalty covers w1 and w2 only. Because the input is
// a plain token sum, every token row receives the same gradient dL/du.
MlpGradients mlp_backward(const MlpTrace& trace, std::size_t gold, const MlpParams& params,
                          const MlpConfig& cfg);

std::size_t mlp_predict(const MlpParams& params, const MlpConfig& cfg, const SentenceMatrix& sm);

}  // namespace sensecnn
