#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sensecnn/cnn.hpp"
#include "sensecnn/dataset.hpp"
#include "sensecnn/embeddings.hpp"

namespace sensecnn {

struct FilterId {
    std::size_t region_size = 0;
    std::size_t map_index = 0;

    std::string str() const {
        return "n" + std::to_string(region_size) + "." + std::to_string(map_index);
    }
    bool operator==(const FilterId&) const = default;
};

// One top-activating sentence for one filter: the pooled value, the argmax
// window (clipped to real tokens when it overruns into padding) and the
// extracted n-gram.
struct FilterHit {
    FilterId filter;
    std::string instance_id;
    double pooled_value = 0.0;
    std::size_t span_begin = 0;
    std::size_t span_end = 0;  // inclusive
    std::vector<std::string> ngram;
    std::string label;
};

// Top-k training sentences for one filter, ranked by the 1-max pooled value,
// ties broken by instance order. Throws on an unknown filter id.
std::vector<FilterHit> filter_top_sentences(const CnnParams& params, const CnnConfig& cfg,
                                            EmbeddingTable& table, const Dataset& data,
                                            FilterId filter, std::size_t k = 15);

// Top-k hits for every filter in one pass over the data; hits are grouped per
// filter in region-size-major order.
std::vector<std::vector<FilterHit>> all_filter_hits(const CnnParams& params, const CnnConfig& cfg,
                                                    EmbeddingTable& table, const Dataset& data,
                                                    std::size_t k = 15);

// Componentwise sum of the tokens' embedding rows.
std::vector<double> ngram_vector(EmbeddingTable& table, const std::vector<std::string>& ngram);

struct DistanceBucket {
    std::size_t count = 0;
    std::size_t contains = 0;  // span covers the target word (distance 0)
    std::size_t left = 0;      // span entirely left of the target
    std::size_t right = 0;
    double sum_abs = 0.0;
    double sum_left = 0.0;
    double sum_right = 0.0;

    double contains_frac() const { return count ? static_cast<double>(contains) / count : 0.0; }
    double mean_abs() const { return count ? sum_abs / count : 0.0; }
    double mean_left() const { return left ? sum_left / left : 0.0; }
    double mean_right() const { return right ? sum_right / right : 0.0; }
};

struct DistanceStats {
    DistanceBucket overall;
    std::map<std::string, DistanceBucket> per_label;
    std::map<std::string, DistanceBucket> per_filter;
};

// Token distance between each hit's span and its instance's target word.
// Exactly one of contains/left/right per hit. Throws on a dangling id.
DistanceStats distance_stats(const std::vector<FilterHit>& hits, const Dataset& data);

// Writes ngrams.tsv (filter, label, ngram, vector), report.txt (top hits with
// the span bracketed in the full sentence) and distance_stats.json.
void export_report(const std::vector<std::vector<FilterHit>>& hits_per_filter,
                   EmbeddingTable& table, const DistanceStats& stats, const Dataset& data,
                   const std::filesystem::path& out_dir, const std::string& suffix = "");

}  // namespace sensecnn
