#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sensecnn/checkpoint.hpp"
#include "sensecnn/optim.hpp"

using namespace sensecnn;

namespace {

Dataset cue_corpus(std::size_t per_class, std::uint64_t seed, std::size_t len = 9) {
    SynthCueSpec spec;
    spec.classes = 3;
    spec.cue_ngrams = {{"k1", "k2", "k3"}, {"q1", "q2", "q3"}, {"r1", "r2", "r3"}};
    spec.n_per_class = per_class;
    spec.sentence_len = len;
    for (int i = 0; i < 40; ++i) spec.vocab.push_back("w" + std::to_string(i));
    return synth_cue_dataset(spec, seed);
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("cnn checkpoint round trip preserves every prediction exactly") {
    for (auto mode : {EmbeddingMode::kStatic, EmbeddingMode::kTuned}) {
        Dataset train_ds = cue_corpus(6, 3);
        Dataset eval_ds = cue_corpus(34, 99);  // ~100 sentences, different draws

        EmbeddingTable master = EmbeddingTable::random_init(8, 0.3, 7);
        for (const Instance& inst : train_ds.instances)
            for (const auto& tok : inst.tokens) master.lookup(tok);
        EmbeddingTable table = master;  // training table; master stays the baseline

        CnnConfig cfg;
        cfg.dim = 8;
        cfg.region_sizes = {2, 3};
        cfg.maps_per_size = 3;
        cfg.classes = 3;
        cfg.embedding_mode = mode;
        SeededRng rng(5);
        CnnModel model(cfg, train_ds.label_set, rng);
        TrainConfig tc;
        tc.iterations = 40;
        tc.batch_size = 6;
        tc.seed = 8;
        tc.embedding_mode = mode;
        train(model, train_ds, table, tc);

        Checkpoint ckpt = make_cnn_checkpoint(model, table, master, "random", "seed=8");
        auto path = temp_file("sensecnn_ckpt_cnn.json");
        save_checkpoint(path, ckpt);

        // Direct predictions; eval_ds has unseen tokens, drawn lazily.
        std::vector<std::size_t> direct;
        for (const Instance& inst : eval_ds.instances)
            direct.push_back(model.predict_class(inst.tokens, table));

        Checkpoint loaded = load_checkpoint(path);
        EmbeddingTable restored = restore_table(loaded);
        auto model2 = restore_model(loaded);
        std::vector<std::size_t> reloaded;
        for (const Instance& inst : eval_ds.instances)
            reloaded.push_back(model2->predict_class(inst.tokens, restored));

        CHECK(direct == reloaded);
        std::filesystem::remove(path);
    }
}

TEST_CASE("mlp checkpoint round trip") {
    Dataset train_ds = cue_corpus(5, 13);
    EmbeddingTable master = EmbeddingTable::random_init(6, 0.3, 17);
    for (const Instance& inst : train_ds.instances)
        for (const auto& tok : inst.tokens) master.lookup(tok);
    EmbeddingTable table = master;

    MlpConfig cfg;
    cfg.dim = 6;
    cfg.hidden = 10;
    cfg.classes = 3;
    SeededRng rng(19);
    MlpModel model(cfg, train_ds.label_set, rng);
    TrainConfig tc;
    tc.iterations = 25;
    tc.batch_size = 5;
    tc.seed = 21;
    train(model, train_ds, table, tc);

    Checkpoint ckpt = make_mlp_checkpoint(model, table, master, "random", "seed=21");
    auto path = temp_file("sensecnn_ckpt_mlp.json");
    save_checkpoint(path, ckpt);
    Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.model_kind == "mlp");
    EmbeddingTable restored = restore_table(loaded);
    auto model2 = restore_model(loaded);
    for (const Instance& inst : train_ds.instances)
        CHECK(model.predict_class(inst.tokens, table) ==
              model2->predict_class(inst.tokens, restored));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint restores against a pre-trained embedding file") {
    // Write a small embedding file, train static, reload against the file.
    auto emb_path = temp_file("sensecnn_ckpt_vectors.txt");
    {
        std::ofstream out(emb_path);
        SeededRng gen(23);
        for (int i = 0; i < 30; ++i) {
            out << "w" << i;
            for (int j = 0; j < 5; ++j) out << ' ' << gen.uniform(-0.4, 0.4);
            out << '\n';
        }
        for (const char* t : {"k1", "k2", "k3", "q1", "q2", "q3", "r1", "r2", "r3", "modal"}) {
            out << t;
            for (int j = 0; j < 5; ++j) out << ' ' << gen.uniform(-0.4, 0.4);
            out << '\n';
        }
    }
    Dataset train_ds = cue_corpus(5, 29);
    EmbeddingTable master = EmbeddingTable::load_file(emb_path.string(), 5);
    master.reseed_oov(31);
    for (const Instance& inst : train_ds.instances)
        for (const auto& tok : inst.tokens) master.lookup(tok);
    EmbeddingTable table = master;

    CnnConfig cfg;
    cfg.dim = 5;
    cfg.region_sizes = {2};
    cfg.maps_per_size = 2;
    cfg.classes = 3;
    cfg.embedding_mode = EmbeddingMode::kTuned;
    SeededRng rng(33);
    CnnModel model(cfg, train_ds.label_set, rng);
    TrainConfig tc;
    tc.iterations = 20;
    tc.batch_size = 5;
    tc.seed = 35;
    tc.embedding_mode = EmbeddingMode::kTuned;
    train(model, train_ds, table, tc);

    Checkpoint ckpt = make_cnn_checkpoint(model, table, master, emb_path.string(), "");
    CHECK(!ckpt.embedding_delta.empty());  // tuned rows recorded

    auto path = temp_file("sensecnn_ckpt_file.json");
    save_checkpoint(path, ckpt);
    Checkpoint loaded = load_checkpoint(path);
    EmbeddingTable restored = restore_table(loaded);
    auto model2 = restore_model(loaded);
    for (const Instance& inst : train_ds.instances)
        CHECK(model.predict_class(inst.tokens, table) ==
              model2->predict_class(inst.tokens, restored));

    std::filesystem::remove(path);
    std::filesystem::remove(emb_path);
}
