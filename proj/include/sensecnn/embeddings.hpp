#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sensecnn/numerics.hpp"

namespace sensecnn {

enum class RowSource : std::uint8_t { kPretrained, kOov, kRandomInit };

// A tokenized sentence materialized as an s x d matrix, one row per token.
struct SentenceMatrix {
    std::vector<std::string> tokens;
    Matrix matrix;  // s x d
    std::vector<RowSource> row_sources;
    std::vector<std::size_t> table_rows;  // row index in the owning table, per token
};

// Pre-trained word vectors plus the variance-matched uniform fallback for
// unknown words. OOV rows are materialized lazily, appended to the matrix and
// cached so a token always resolves to the same vector within one table.
// Lookup tries the exact token first, then its ASCII-lowercased form.
class EmbeddingTable {
public:
    // Text format: one line per token, `token v1 v2 ... vd`, '.'-decimal reals.
    // An optional first line with exactly two integer fields is read as a
    // `V d` header. Duplicate tokens keep the first row.
    static EmbeddingTable load(std::istream& in, std::size_t expected_dim);
    static EmbeddingTable load_file(const std::string& path, std::size_t expected_dim);

    // Table with no pre-trained vocabulary: every row is drawn from
    // U[-bound, bound] on first lookup (the random-initialization condition).
    static EmbeddingTable random_init(std::size_t dim, double bound, std::uint64_t seed);

    std::size_t dim() const { return dim_; }
    std::size_t pretrained_size() const { return pretrained_rows_; }
    std::size_t rows() const { return matrix_.rows; }
    double oov_bound() const { return oov_bound_; }
    std::size_t duplicate_count() const { return duplicates_; }

    bool trainable() const { return trainable_; }
    void set_trainable(bool t) { trainable_ = t; }

    const Matrix& matrix() const { return matrix_; }
    Matrix& mutable_matrix() { return matrix_; }

    // Reseed the OOV draw stream. Call before any OOV materialization.
    void reseed_oov(std::uint64_t seed);
    std::array<std::uint64_t, 4> oov_rng_state() const { return rng_.state(); }
    void set_oov_rng_state(const std::array<std::uint64_t, 4>& s) { rng_.set_state(s); }

    struct Lookup {
        std::size_t row;
        RowSource source;
    };

    // Resolves a token to a row, materializing an OOV row if necessary.
    Lookup lookup(const std::string& token);

    // Lookup without materialization; empty when the token has no row yet.
    std::optional<std::size_t> find(const std::string& token) const;

    const std::string& token_of_row(std::size_t row) const { return row_tokens_[row]; }
    RowSource source_of_row(std::size_t row) const { return row_sources_[row]; }

    // Builds the s x d sentence matrix. Throws on an empty token list or when
    // a cached row count no longer matches dim().
    SentenceMatrix embed_sentence(const std::vector<std::string>& tokens);

    // Installs a row with explicit values (checkpoint restore). Overwrites the
    // existing row for the token, or appends a new OOV/random row.
    void install_row(const std::string& token, const std::vector<double>& values);

private:
    EmbeddingTable();

    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::size_t> vocab_;      // pre-trained tokens
    std::unordered_map<std::string, std::size_t> oov_cache_;  // materialized OOV tokens
    std::vector<std::string> row_tokens_;
    std::vector<RowSource> row_sources_;
    Matrix matrix_;
    std::size_t pretrained_rows_ = 0;
    double oov_bound_ = 0.0;
    bool trainable_ = false;
    bool random_mode_ = false;
    SeededRng rng_;
    std::size_t duplicates_ = 0;
};

// a = sqrt(3 * var) where var is the population variance of all pre-trained
// vector components pooled into one scalar, so Var(U[-a,a]) matches it.
double oov_bound_from_table(const EmbeddingTable& table);

}  // namespace sensecnn
