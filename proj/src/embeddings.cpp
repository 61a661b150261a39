#include "sensecnn/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sensecnn {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool is_integer_field(std::string_view f) {
    if (f.empty()) return false;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    return ec == std::errc() && p == f.data() + f.size();
}

double parse_real(std::string_view f, std::size_t line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v)) {
        throw std::runtime_error("embeddings: bad value '" + std::string(f) + "' on line " +
                                 std::to_string(line_no));
    }
    return v;
}

std::string to_lower_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable() : rng_(0x5eed) {}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::size_t expected_dim) {
    if (expected_dim == 0) throw std::invalid_argument("embeddings: expected_dim must be >= 1");
    EmbeddingTable t;
    t.dim_ = expected_dim;
    t.matrix_ = Matrix(0, expected_dim);

    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (first_content_line) {
            first_content_line = false;
            // `V d` header: exactly two integer fields.
            if (fields.size() == 2 && is_integer_field(fields[0]) && is_integer_field(fields[1])) {
                std::uint64_t d = 0;
                std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), d);
                if (d != expected_dim) {
                    throw std::runtime_error("embeddings: header dimension " + std::to_string(d) +
                                             " does not match expected " +
                                             std::to_string(expected_dim) + " (line 1)");
                }
                continue;
            }
        }
        if (fields.size() != expected_dim + 1) {
            throw std::runtime_error("embeddings: expected " + std::to_string(expected_dim) +
                                     " values but found " + std::to_string(fields.size() - 1) +
                                     " on line " + std::to_string(line_no));
        }
        std::string token(fields[0]);
        if (t.vocab_.count(token)) {
            ++t.duplicates_;  // first occurrence wins
            continue;
        }
        values.clear();
        for (std::size_t i = 1; i < fields.size(); ++i)
            values.push_back(parse_real(fields[i], line_no));
        t.vocab_.emplace(std::move(token), t.matrix_.rows);
        t.row_tokens_.push_back(std::string(fields[0]));
        t.row_sources_.push_back(RowSource::kPretrained);
        t.matrix_.data.insert(t.matrix_.data.end(), values.begin(), values.end());
        ++t.matrix_.rows;
    }
    if (t.matrix_.rows == 0) throw std::runtime_error("embeddings: empty stream");
    t.pretrained_rows_ = t.matrix_.rows;
    t.oov_bound_ = oov_bound_from_table(t);
    return t;
}

EmbeddingTable EmbeddingTable::load_file(const std::string& path, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("embeddings: cannot open " + path);
    try {
        return load(in, expected_dim);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

EmbeddingTable EmbeddingTable::random_init(std::size_t dim, double bound, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("embeddings: dim must be >= 1");
    if (bound < 0) throw std::invalid_argument("embeddings: bound must be >= 0");
    EmbeddingTable t;
    t.dim_ = dim;
    t.matrix_ = Matrix(0, dim);
    t.oov_bound_ = bound;
    t.random_mode_ = true;
    t.rng_ = SeededRng(seed);
    return t;
}

void EmbeddingTable::reseed_oov(std::uint64_t seed) { rng_ = SeededRng(seed); }

std::optional<std::size_t> EmbeddingTable::find(const std::string& token) const {
    if (auto it = vocab_.find(token); it != vocab_.end()) return it->second;
    std::string lower = to_lower_ascii(token);
    if (auto it = vocab_.find(lower); it != vocab_.end()) return it->second;
    if (auto it = oov_cache_.find(token); it != oov_cache_.end()) return it->second;
    if (auto it = oov_cache_.find(lower); it != oov_cache_.end()) return it->second;
    return std::nullopt;
}

EmbeddingTable::Lookup EmbeddingTable::lookup(const std::string& token) {
    if (auto row = find(token)) return {*row, row_sources_[*row]};
    // Materialize a fresh OOV row from U[-a,a] per dimension.
    std::size_t row = matrix_.rows;
    for (std::size_t j = 0; j < dim_; ++j)
        matrix_.data.push_back(rng_.uniform(-oov_bound_, oov_bound_));
    ++matrix_.rows;
    RowSource src = random_mode_ ? RowSource::kRandomInit : RowSource::kOov;
    oov_cache_.emplace(token, row);
    row_tokens_.push_back(token);
    row_sources_.push_back(src);
    return {row, src};
}

SentenceMatrix EmbeddingTable::embed_sentence(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("embed_sentence: empty token list");
    SentenceMatrix sm;
    sm.tokens = tokens;
    sm.matrix = Matrix(tokens.size(), dim_);
    sm.row_sources.resize(tokens.size());
    sm.table_rows.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        Lookup lk = lookup(tokens[i]);
        sm.row_sources[i] = lk.source;
        sm.table_rows[i] = lk.row;
        const double* src = matrix_.row(lk.row);
        double* dst = sm.matrix.row(i);
        for (std::size_t j = 0; j < dim_; ++j) dst[j] = src[j];
    }
    return sm;
}

void EmbeddingTable::install_row(const std::string& token, const std::vector<double>& values) {
    if (values.size() != dim_) {
        throw std::invalid_argument("install_row: value count " + std::to_string(values.size()) +
                                    " does not match dim " + std::to_string(dim_));
    }
    if (auto row = find(token)) {
        double* dst = matrix_.row(*row);
        for (std::size_t j = 0; j < dim_; ++j) dst[j] = values[j];
        return;
    }
    std::size_t row = matrix_.rows;
    matrix_.data.insert(matrix_.data.end(), values.begin(), values.end());
    ++matrix_.rows;
    oov_cache_.emplace(token, row);
    row_tokens_.push_back(token);
    row_sources_.push_back(random_mode_ ? RowSource::kRandomInit : RowSource::kOov);
}

double oov_bound_from_table(const EmbeddingTable& table) {
    const Matrix& m = table.matrix();
    std::size_t n = table.pretrained_size() * table.dim();
    if (n == 0) return table.oov_bound();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += m.data[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = m.data[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    return std::sqrt(3.0 * var);
}

}  // namespace sensecnn
