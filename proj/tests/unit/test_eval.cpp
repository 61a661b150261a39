#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "sensecnn/eval.hpp"

using namespace sensecnn;

TEST_CASE("evaluate basics") {
    std::vector<std::string> labels = {"a", "b"};
    EvalResult all = evaluate({"a", "b"}, {"a", "b"}, labels);
    CHECK(all.accuracy == 1.0);
    CHECK(all.confusion[0][0] == 1);
    CHECK(all.confusion[1][1] == 1);
    CHECK(all.confusion[0][1] == 0);

    EvalResult half = evaluate({"a", "b"}, {"b", "b"}, labels);
    CHECK(half.accuracy == 0.5);
    CHECK(half.confusion[1][0] == 1);

    CHECK_THROWS_AS(evaluate({}, {}, labels), std::invalid_argument);
    CHECK_THROWS_AS(evaluate({"a"}, {"a", "b"}, labels), std::invalid_argument);
}

TEST_CASE("evaluate extends the label set for unseen labels") {
    EvalResult r = evaluate({"a", "zzz"}, {"unknown", "a"}, {"a", "b"});
    CHECK(r.accuracy == 0.0);
    CHECK(r.labels.size() == 4);
    std::size_t total = 0;
    for (const auto& row : r.confusion)
        for (std::size_t v : row) total += v;
    CHECK(total == r.n);
}

TEST_CASE("micro average") {
    auto mk = [](std::size_t correct, std::size_t n) {
        EvalResult r;
        r.correct = correct;
        r.n = n;
        r.accuracy = static_cast<double>(correct) / n;
        return r;
    };
    CHECK(micro_average({mk(10, 10), mk(0, 10)}) == doctest::Approx(0.5));
    CHECK(micro_average({mk(7, 9)}) == doctest::Approx(7.0 / 9));
    CHECK(micro_average({mk(9, 10), mk(0, 90)}) == doctest::Approx(0.09));

    // Micro lies between the per-verb extremes.
    auto results = std::vector<EvalResult>{mk(3, 10), mk(18, 20), mk(5, 7)};
    double micro = micro_average(results);
    double lo = 1.0, hi = 0.0;
    for (const auto& r : results) {
        lo = std::min(lo, r.accuracy);
        hi = std::max(hi, r.accuracy);
    }
    CHECK(micro >= lo);
    CHECK(micro <= hi);
}

namespace {

// Independent oracle: P(X >= k) and P(X = k) for X~Bin(N, 1/2) via an integer
// Pascal triangle, exact for the N used here.
double oracle_midp(std::size_t b, std::size_t c) {
    std::size_t n = b + c;
    if (n == 0) return 1.0;
    std::size_t k = std::max(b, c);
    std::vector<unsigned long long> row = {1};  // C(0, .)
    for (std::size_t i = 1; i <= n; ++i) {
        std::vector<unsigned long long> next(i + 1, 1);
        for (std::size_t j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
        row = std::move(next);
    }
    unsigned long long tail = 0;
    for (std::size_t i = k; i <= n; ++i) tail += row[i];
    double denom = std::ldexp(1.0, static_cast<int>(n));
    double midp = (2.0 * static_cast<double>(tail) - static_cast<double>(row[k])) / denom;
    return std::min(1.0, std::max(0.0, midp));
}

}  // namespace

TEST_CASE("mcnemar mid-p: frozen exact values") {
    CHECK(oracle_midp(5, 1) == 0.125);  // the oracle itself reproduces the derivation
    CHECK(mcnemar_midp_counts(5, 1).midp == 0.125);
    CHECK(mcnemar_midp_counts(1, 1).midp == 1.0);
    CHECK(mcnemar_midp_counts(0, 0).midp == 1.0);
}

TEST_CASE("mcnemar mid-p matches the enumeration oracle, symmetric, monotone") {
    for (std::size_t n = 0; n <= 20; ++n) {
        double prev = 2.0;
        for (std::size_t b = (n + 1) / 2; b <= n; ++b) {  // k = b grows with |b-c|
            std::size_t c = n - b;
            double v = mcnemar_midp_counts(b, c).midp;
            CHECK(v == oracle_midp(b, c));
            CHECK(mcnemar_midp_counts(c, b).midp == v);  // symmetry
            CHECK(v <= 1.0);
            CHECK(v >= 0.0);
            CHECK(v < prev);  // strictly decreasing as |b-c| grows with n fixed
            prev = v;
        }
    }
}

TEST_CASE("mcnemar mid-p from paired predictions") {
    std::vector<std::string> golds = {"x", "x", "x", "x", "x", "x", "x"};
    std::vector<std::string> a = {"x", "x", "x", "x", "x", "x", "y"};
    std::vector<std::string> b = {"y", "y", "y", "y", "y", "x", "x"};
    PairedComparison p = mcnemar_midp(a, b, golds);
    CHECK(p.b == 5);
    CHECK(p.c == 1);
    CHECK(p.midp == 0.125);

    CHECK_THROWS_AS(mcnemar_midp({"x"}, {"x", "y"}, {"x", "y"}), std::invalid_argument);
}

TEST_CASE("mcnemar mid-p large-N path stays sane") {
    double v = mcnemar_midp_counts(600, 400).midp;
    CHECK(v > 0.0);
    CHECK(v < 1e-9);  // heavily lopsided
    double w = mcnemar_midp_counts(500, 500).midp;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-9));
}
