#include "sensecnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sensecnn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json matrix_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    Matrix m;
    m.rows = j.size();
    m.cols = m.rows ? j.at(0).size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& row : j) {
        if (row.size() != m.cols) throw std::runtime_error("checkpoint: ragged matrix");
        for (const auto& v : row) m.data.push_back(v.get<double>());
    }
    return m;
}

std::string mode_str(EmbeddingMode m) {
    return m == EmbeddingMode::kTuned ? "tuned" : "static";
}

EmbeddingMode mode_from(const std::string& s) {
    if (s == "tuned") return EmbeddingMode::kTuned;
    if (s == "static") return EmbeddingMode::kStatic;
    throw std::runtime_error("checkpoint: unknown embedding mode '" + s + "'");
}

ordered_json table_json(const Checkpoint& c) {
    ordered_json j;
    j["source"] = c.embedding_source;
    j["dim"] = c.embedding_dim;
    j["oov_bound"] = c.oov_bound;
    j["rng_state"] = c.rng_state;
    ordered_json rows = ordered_json::object();
    for (const auto& [token, values] : c.embedding_delta) rows[token] = values;
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace

std::map<std::string, std::vector<double>> embedding_rows_delta(const EmbeddingTable& table,
                                                                const EmbeddingTable& baseline) {
    std::map<std::string, std::vector<double>> delta;
    const Matrix& m = table.matrix();
    const Matrix& base = baseline.matrix();
    for (std::size_t r = 0; r < m.rows; ++r) {
        const std::string& token = table.token_of_row(r);
        bool include;
        if (table.source_of_row(r) != RowSource::kPretrained) {
            include = true;  // materialized rows must survive a reload as-is
        } else if (r < base.rows && baseline.token_of_row(r) == token) {
            include = false;
            for (std::size_t j = 0; j < m.cols; ++j) {
                if (m.at(r, j) != base.at(r, j)) {
                    include = true;
                    break;
                }
            }
        } else {
            include = true;
        }
        if (include)
            delta.emplace(token, std::vector<double>(m.row(r), m.row(r) + m.cols));
    }
    return delta;
}

namespace {

Checkpoint base_checkpoint(const EmbeddingTable& table, const EmbeddingTable& baseline,
                           const std::string& embedding_source, const std::string& seed_info) {
    Checkpoint c;
    c.embedding_source = embedding_source;
    c.embedding_dim = table.dim();
    c.oov_bound = table.oov_bound();
    c.embedding_delta = embedding_rows_delta(table, baseline);
    c.rng_state = table.oov_rng_state();
    c.seed_info = seed_info;
    return c;
}

}  // namespace

Checkpoint make_cnn_checkpoint(const CnnModel& model, const EmbeddingTable& table,
                               const EmbeddingTable& baseline,
                               const std::string& embedding_source, const std::string& seed_info) {
    Checkpoint c = base_checkpoint(table, baseline, embedding_source, seed_info);
    c.model_kind = "cnn";
    c.label_set = model.label_set();
    c.cnn_cfg = model.config();
    c.cnn_params = model.params();
    return c;
}

Checkpoint make_mlp_checkpoint(const MlpModel& model, const EmbeddingTable& table,
                               const EmbeddingTable& baseline,
                               const std::string& embedding_source, const std::string& seed_info) {
    Checkpoint c = base_checkpoint(table, baseline, embedding_source, seed_info);
    c.model_kind = "mlp";
    c.label_set = model.label_set();
    c.mlp_cfg = model.config();
    c.mlp_params = model.params();
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    ordered_json j;
    j["model_kind"] = c.model_kind;
    j["label_set"] = c.label_set;
    if (c.model_kind == "cnn") {
        const CnnConfig& cfg = *c.cnn_cfg;
        ordered_json cj;
        cj["dim"] = cfg.dim;
        cj["region_sizes"] = cfg.region_sizes;
        cj["maps_per_size"] = cfg.maps_per_size;
        cj["classes"] = cfg.classes;
        cj["dropout_keep"] = cfg.dropout_keep;
        cj["l2_lambda"] = cfg.l2_lambda;
        cj["embedding_mode"] = mode_str(cfg.embedding_mode);
        j["config"] = std::move(cj);
        const CnnParams& p = *c.cnn_params;
        ordered_json filters = ordered_json::array();
        for (const auto& size_filters : p.filters) {
            ordered_json group = ordered_json::array();
            for (const Matrix& w : size_filters) group.push_back(matrix_json(w));
            filters.push_back(std::move(group));
        }
        j["filters"] = std::move(filters);
        j["biases"] = p.biases;
        j["softmax_W"] = matrix_json(p.softmax_w);
        j["softmax_b"] = p.softmax_b;
    } else if (c.model_kind == "mlp") {
        const MlpConfig& cfg = *c.mlp_cfg;
        ordered_json cj;
        cj["dim"] = cfg.dim;
        cj["hidden"] = cfg.hidden;
        cj["classes"] = cfg.classes;
        cj["dropout_keep"] = cfg.dropout_keep;
        cj["l2_lambda"] = cfg.l2_lambda;
        cj["embedding_mode"] = mode_str(cfg.embedding_mode);
        j["config"] = std::move(cj);
        const MlpParams& p = *c.mlp_params;
        j["W1"] = matrix_json(p.w1);
        j["b1"] = p.b1;
        j["W2"] = matrix_json(p.w2);
        j["b2"] = p.b2;
    } else {
        throw std::invalid_argument("checkpoint: unknown model kind '" + c.model_kind + "'");
    }
    j["embedding_delta"] = table_json(c);
    j["seed_info"] = c.seed_info;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }

    Checkpoint c;
    c.model_kind = j.at("model_kind").get<std::string>();
    c.label_set = j.at("label_set").get<std::vector<std::string>>();
    const json& cj = j.at("config");
    if (c.model_kind == "cnn") {
        CnnConfig cfg;
        cfg.dim = cj.at("dim").get<std::size_t>();
        cfg.region_sizes = cj.at("region_sizes").get<std::vector<std::size_t>>();
        cfg.maps_per_size = cj.at("maps_per_size").get<std::size_t>();
        cfg.classes = cj.at("classes").get<std::size_t>();
        cfg.dropout_keep = cj.at("dropout_keep").get<double>();
        cfg.l2_lambda = cj.at("l2_lambda").get<double>();
        cfg.embedding_mode = mode_from(cj.at("embedding_mode").get<std::string>());
        c.cnn_cfg = cfg;
        CnnParams p;
        for (const auto& group : j.at("filters")) {
            std::vector<Matrix> size_filters;
            for (const auto& w : group) size_filters.push_back(matrix_from_json(w));
            p.filters.push_back(std::move(size_filters));
        }
        p.biases = j.at("biases").get<std::vector<double>>();
        p.softmax_w = matrix_from_json(j.at("softmax_W"));
        p.softmax_b = j.at("softmax_b").get<std::vector<double>>();
        c.cnn_params = std::move(p);
    } else if (c.model_kind == "mlp") {
        MlpConfig cfg;
        cfg.dim = cj.at("dim").get<std::size_t>();
        cfg.hidden = cj.at("hidden").get<std::size_t>();
        cfg.classes = cj.at("classes").get<std::size_t>();
        cfg.dropout_keep = cj.at("dropout_keep").get<double>();
        cfg.l2_lambda = cj.at("l2_lambda").get<double>();
        cfg.embedding_mode = mode_from(cj.at("embedding_mode").get<std::string>());
        c.mlp_cfg = cfg;
        MlpParams p;
        p.w1 = matrix_from_json(j.at("W1"));
        p.b1 = j.at("b1").get<std::vector<double>>();
        p.w2 = matrix_from_json(j.at("W2"));
        p.b2 = j.at("b2").get<std::vector<double>>();
        c.mlp_params = std::move(p);
    } else {
        throw std::runtime_error("checkpoint: unknown model kind '" + c.model_kind + "'");
    }

    const json& tj = j.at("embedding_delta");
    c.embedding_source = tj.at("source").get<std::string>();
    c.embedding_dim = tj.at("dim").get<std::size_t>();
    c.oov_bound = tj.at("oov_bound").get<double>();
    auto state = tj.at("rng_state").get<std::vector<std::uint64_t>>();
    if (state.size() != 4) throw std::runtime_error("checkpoint: bad rng state");
    for (int i = 0; i < 4; ++i) c.rng_state[i] = state[i];
    for (const auto& [token, values] : tj.at("rows").items())
        c.embedding_delta.emplace(token, values.get<std::vector<double>>());
    c.seed_info = j.value("seed_info", "");
    return c;
}

EmbeddingTable restore_table(const Checkpoint& c, const std::string& embedding_override) {
    std::string source = embedding_override.empty() ? c.embedding_source : embedding_override;
    EmbeddingTable table = source == "random"
                               ? EmbeddingTable::random_init(c.embedding_dim, c.oov_bound, 0)
                               : EmbeddingTable::load_file(source, c.embedding_dim);
    for (const auto& [token, values] : c.embedding_delta) table.install_row(token, values);
    table.set_oov_rng_state(c.rng_state);
    return table;
}

std::unique_ptr<TrainableModel> restore_model(const Checkpoint& c) {
    if (c.model_kind == "cnn")
        return std::make_unique<CnnModel>(*c.cnn_cfg, c.label_set, *c.cnn_params);
    if (c.model_kind == "mlp")
        return std::make_unique<MlpModel>(*c.mlp_cfg, c.label_set, *c.mlp_params);
    throw std::runtime_error("checkpoint: unknown model kind '" + c.model_kind + "'");
}

}  // namespace sensecnn
