#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sensecnn {

struct EvalResult {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::vector<std::string> labels;  // effective label set (may extend the given one)
    std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
    struct Prediction {
        std::string id, gold, pred;
    };
    std::vector<Prediction> predictions;
};

// Accuracy and confusion counts. Gold or predicted labels outside `label_set`
// are appended to the effective label set (first-seen order) so the confusion
// matrix stays consistent; such golds can only score as misses.
EvalResult evaluate(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                    const std::vector<std::string>& label_set,
                    const std::vector<std::string>* ids = nullptr);

// Instance-weighted accuracy: sum(correct) / sum(n).
double micro_average(const std::vector<EvalResult>& results);

struct PairedComparison {
    std::size_t b = 0;  // A correct, B wrong
    std::size_t c = 0;  // A wrong, B correct
    double midp = 1.0;
};

// Mid-p McNemar on discordant counts: with N=b+c, k=max(b,c), X~Bin(N,1/2),
// midp = 2 P(X>=k) - P(X=k), clamped to [0,1]; N=0 gives 1. Exact dyadic
// arithmetic for N<=50, log-space binomial tails beyond that.
PairedComparison mcnemar_midp_counts(std::size_t b, std::size_t c);

PairedComparison mcnemar_midp(const std::vector<std::string>& a_preds,
                              const std::vector<std::string>& b_preds,
                              const std::vector<std::string>& golds);

}  // namespace sensecnn
