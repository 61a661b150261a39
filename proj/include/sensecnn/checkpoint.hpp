#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sensecnn/model.hpp"

namespace sensecnn {

// JSON model checkpoint. Doubles are serialized with shortest round-trip
// representations, so save/load preserves every prediction bit-exactly.
// `embedding_delta` holds all table rows the run materialized or tuned,
// keyed by token; `rng_state` freezes the OOV draw stream so tokens first
// seen after a reload keep matching the uninterrupted run.
struct Checkpoint {
    std::string model_kind;  // "cnn" | "mlp"
    std::vector<std::string> label_set;

    std::optional<CnnConfig> cnn_cfg;
    std::optional<CnnParams> cnn_params;
    std::optional<MlpConfig> mlp_cfg;
    std::optional<MlpParams> mlp_params;

    std::string embedding_source;  // path or "random"
    std::size_t embedding_dim = 0;
    double oov_bound = 0.0;
    std::map<std::string, std::vector<double>> embedding_delta;
    std::array<std::uint64_t, 4> rng_state{};

    std::string seed_info;
};

// `baseline` is the table state before training (pass `table` itself in
// static mode, where pre-trained rows cannot move).
Checkpoint make_cnn_checkpoint(const CnnModel& model, const EmbeddingTable& table,
                               const EmbeddingTable& baseline,
                               const std::string& embedding_source, const std::string& seed_info);
Checkpoint make_mlp_checkpoint(const MlpModel& model, const EmbeddingTable& table,
                               const EmbeddingTable& baseline,
                               const std::string& embedding_source, const std::string& seed_info);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the embedding table a checkpoint was trained against: loads the
// source (file or random-init), applies the stored rows and restores the OOV
// stream. `embedding_override` substitutes the source path when non-empty.
EmbeddingTable restore_table(const Checkpoint& ckpt, const std::string& embedding_override = "");

// Instantiates the checkpointed model.
std::unique_ptr<TrainableModel> restore_model(const Checkpoint& ckpt);

// Rows of `table` that differ from `baseline` plus all rows `table` added,
// keyed by token. Used to populate embedding_delta.
std::map<std::string, std::vector<double>> embedding_rows_delta(const EmbeddingTable& table,
                                                                const EmbeddingTable& baseline);

}  // namespace sensecnn
