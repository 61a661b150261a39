#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sensecnn/numerics.hpp"

namespace sensecnn {

// One labeled sentence. `labels` usually holds a single sense; lexical-sample
// corpora may carry several gold senses per instance, and `target_indices`
// may mark more than one target occurrence (such instances are dropped by the
// WSD protocol).
struct Instance {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> labels;    // >= 1; labels[0] is the training label
    std::size_t target_index = 0;
    std::vector<std::size_t> target_indices;  // all marked targets; front() == target_index
    std::string genre;                  // optional

    const std::string& label() const { return labels.front(); }
    bool multi_target() const { return target_indices.size() > 1; }
};

struct Dataset {
    std::vector<Instance> instances;
    std::vector<std::string> label_set;  // ordered; fixes class-index assignment
    std::string target_word;             // optional, per-classifier corpora

    std::size_t size() const { return instances.size(); }
    std::size_t label_index(const std::string& label) const;  // throws if absent
    std::map<std::string, std::size_t> label_counts() const;
    void rebuild_label_set();  // lexicographic over all instance labels
};

// Stratified fold assignment: per class, instances are shuffled by seed and
// dealt round-robin, so per-fold class counts differ from the proportional
// share by at most one.
struct FoldPlan {
    std::size_t k = 0;
    std::map<std::string, std::size_t> assignments;  // instance id -> fold
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t fold_of(const std::string& id) const;
};

// JSON Lines, one object per instance:
//   {"id": str, "tokens": [str], "label": str, "target_index": int, "genre": str?}
// Extensions: "labels": [str] (multi-sense) and "target_indices": [int].
// Errors carry the 1-based line number. Duplicate ids are an error.
Dataset parse_instances(std::istream& in);
Dataset parse_instances_file(const std::string& path);
void serialize_instances(const Dataset& ds, std::ostream& out);
void serialize_instances_file(const Dataset& ds, const std::string& path);

FoldPlan stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

// Instances of `ds` whose id is (not) assigned to fold `f`.
Dataset fold_subset(const Dataset& ds, const FoldPlan& plan, std::size_t f, bool held_out);

enum class BalanceMode { kOversample, kUndersample };

// Oversample: minority classes duplicated (with replacement, seeded) up to the
// majority count; duplicate ids get a "#dupN" suffix. Undersample: majority
// classes reduced (without replacement, seeded) to the minority count.
Dataset balance(const Dataset& ds, BalanceMode mode, std::uint64_t seed);

// Most frequent training label; ties broken by label_set order.
std::string majority_baseline(const Dataset& train);

struct SynthCueSpec {
    std::size_t classes = 3;
    std::vector<std::vector<std::string>> cue_ngrams;  // one trigram per class
    std::size_t n_per_class = 100;
    std::size_t sentence_len = 12;
    std::vector<std::string> vocab;  // filler tokens; cue tokens are excluded
    std::string target_token = "modal";
    std::string label_prefix = "sense";
};

// Synthetic corpus for the feature-detector oracles: the target token sits at
// index 0 and each sentence carries its class's cue trigram at a random
// position in [1, len-3]; the label is fully determined by the cue.
Dataset synth_cue_dataset(const SynthCueSpec& spec, std::uint64_t seed);

}  // namespace sensecnn
