#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace sensecnn {

// Dense row-major matrix of doubles. Everything in this project is small
// enough that a plain std::vector backing store is the right tool.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::size_t size() const { return data.size(); }
};

// Sum of the elementwise products of two equally-shaped matrices.
// Throws std::invalid_argument on shape mismatch.
double frobenius_inner(const Matrix& a, const Matrix& b);

// Squared Frobenius norm.
double frobenius_norm_sq(const Matrix& a);

std::vector<double> relu(std::span<const double> v);

// Numerically stable softmax (max subtraction). Input must be non-empty.
std::vector<double> softmax(std::span<const double> logits);

// Probability floor applied inside cross_entropy so the loss stays finite
// even when the gold probability underflows to zero.
inline constexpr double kProbFloor = 1e-12;

// -ln(probs[gold]) with the floor above. Throws std::out_of_range for a bad index.
double cross_entropy(std::span<const double> probs, std::size_t gold);

// Deterministic, platform-stable generator: xoshiro256++ (Blackman & Vigna),
// state expanded from the seed with splitmix64. Identical seeds give identical
// streams on every platform; no libc or libstdc++ distribution code is used.
// A single instance must not be sampled from concurrently.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0,1) with 53 random bits.
    double next_double();

    // Uniform in [a,b]. Requires a <= b.
    double uniform(double a, double b);

    // Unbiased integer in [0,n), n >= 1, via rejection sampling.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates, stable across platforms.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

    // Raw generator state, exposed so checkpoints can freeze and resume streams.
    std::array<std::uint64_t, 4> state() const;
    void set_state(const std::array<std::uint64_t, 4>& s);

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
};

// n draws from U[a,b], deterministic per rng stream. Requires a <= b.
std::vector<double> sample_uniform(SeededRng& rng, double a, double b, std::size_t n);

// FNV-1a 64-bit, used for content digests and seed derivation.
std::uint64_t fnv1a64(std::string_view s);

// Deterministic sub-seed for a named stream (shuffle, dropout, per-verb jobs, ...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace sensecnn
