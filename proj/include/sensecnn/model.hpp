#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sensecnn/cnn.hpp"
#include "sensecnn/dataset.hpp"
#include "sensecnn/embeddings.hpp"
#include "sensecnn/mlp.hpp"

namespace sensecnn {

// Named view of one trainable tensor. The pointee must stay alive and keep
// its size for as long as the optimizer holds the reference.
struct TensorRef {
    std::string name;
    std::vector<double>* value;
};

struct BatchGradients {
    double mean_loss = 0.0;
    std::vector<std::vector<double>> tensors;  // aligned with trainable_tensors()
    std::map<std::size_t, std::vector<double>> embedding_rows;  // table row -> d grads
};

// What the shared training loop needs from a classifier. Gradients are means
// over the batch; embedding_rows is filled only in tuned mode.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;

    virtual std::size_t classes() const = 0;
    virtual EmbeddingMode embedding_mode() const = 0;
    virtual std::vector<TensorRef> trainable_tensors() = 0;
    virtual BatchGradients gradient_batch(std::span<const Instance* const> batch,
                                          EmbeddingTable& table, SeededRng* dropout_rng) = 0;
    virtual std::size_t predict_class(const std::vector<std::string>& tokens,
                                      EmbeddingTable& table) = 0;
};

class CnnModel : public TrainableModel {
public:
    CnnModel(CnnConfig cfg, std::vector<std::string> label_set, SeededRng& init_rng);
    CnnModel(CnnConfig cfg, std::vector<std::string> label_set, CnnParams params);

    const CnnConfig& config() const { return cfg_; }
    CnnParams& params() { return params_; }
    const CnnParams& params() const { return params_; }
    const std::vector<std::string>& label_set() const { return labels_; }

    std::size_t classes() const override { return cfg_.classes; }
    EmbeddingMode embedding_mode() const override { return cfg_.embedding_mode; }
    std::vector<TensorRef> trainable_tensors() override;
    BatchGradients gradient_batch(std::span<const Instance* const> batch, EmbeddingTable& table,
                                  SeededRng* dropout_rng) override;
    std::size_t predict_class(const std::vector<std::string>& tokens,
                              EmbeddingTable& table) override;

private:
    CnnConfig cfg_;
    std::vector<std::string> labels_;
    CnnParams params_;
};

class MlpModel : public TrainableModel {
public:
    MlpModel(MlpConfig cfg, std::vector<std::string> label_set, SeededRng& init_rng);
    MlpModel(MlpConfig cfg, std::vector<std::string> label_set, MlpParams params);

    const MlpConfig& config() const { return cfg_; }
    MlpParams& params() { return params_; }
    const MlpParams& params() const { return params_; }
    const std::vector<std::string>& label_set() const { return labels_; }

    std::size_t classes() const override { return cfg_.classes; }
    EmbeddingMode embedding_mode() const override { return cfg_.embedding_mode; }
    std::vector<TensorRef> trainable_tensors() override;
    BatchGradients gradient_batch(std::span<const Instance* const> batch, EmbeddingTable& table,
                                  SeededRng* dropout_rng) override;
    std::size_t predict_class(const std::vector<std::string>& tokens,
                              EmbeddingTable& table) override;

private:
    MlpConfig cfg_;
    std::vector<std::string> labels_;
    MlpParams params_;
};

std::size_t label_index_of(const std::vector<std::string>& label_set, const std::string& label);

}  // namespace sensecnn
