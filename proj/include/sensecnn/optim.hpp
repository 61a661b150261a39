#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "sensecnn/dataset.hpp"
#include "sensecnn/embeddings.hpp"
#include "sensecnn/model.hpp"

namespace sensecnn {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers for the model tensors are created
// on the first step; embedding rows get their own lazily-created buffers and
// are corrected with the same global step counter.
class AdamState {
public:
    explicit AdamState(AdamHyper hyper = {});

    // One optimization step over all tensors (and, in tuned mode, the touched
    // embedding rows). Grad vectors must be shape-aligned with the tensors.
    void step(const std::vector<TensorRef>& params, const std::vector<std::vector<double>>& grads,
              EmbeddingTable* table = nullptr,
              const std::map<std::size_t, std::vector<double>>& row_grads = {});

    std::size_t t() const { return t_; }
    const AdamHyper& hyper() const { return hyper_; }

private:
    void update(std::vector<double>& m, std::vector<double>& v, double* theta,
                const std::vector<double>& grad, double corr1, double corr2);

    AdamHyper hyper_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;  // aligned with the tensor list
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> row_mv_;
};

struct TrainConfig {
    std::size_t iterations = 1001;  // mini-batch gradient steps, not epochs
    std::size_t batch_size = 50;
    std::uint64_t seed = 1;
    double dropout_keep = 0.5;
    double l2_lambda = 1e-3;
    EmbeddingMode embedding_mode = EmbeddingMode::kStatic;
    AdamHyper adam;
};

struct TrainHistory {
    std::vector<double> losses;  // one entry per step
};

// Mini-batch training shared by the CNN and the MLP: seeded shuffling with a
// reshuffle at every epoch boundary, partial final batches used as-is, mean
// gradients, no early stopping. In tuned mode only the embedding rows of
// tokens seen in a batch are updated.
TrainHistory train(TrainableModel& model, const Dataset& data, EmbeddingTable& table,
                   const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

}  // namespace sensecnn
