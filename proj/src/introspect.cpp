#include "sensecnn/introspect.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace sensecnn {

using nlohmann::ordered_json;

namespace {

std::size_t filter_flat_index(const CnnConfig& cfg, FilterId filter) {
    for (std::size_t si = 0; si < cfg.region_sizes.size(); ++si) {
        if (cfg.region_sizes[si] == filter.region_size) {
            if (filter.map_index >= cfg.maps_per_size)
                throw std::out_of_range("introspect: map index " +
                                        std::to_string(filter.map_index) + " out of range");
            return si * cfg.maps_per_size + filter.map_index;
        }
    }
    throw std::out_of_range("introspect: no filters of region size " +
                            std::to_string(filter.region_size));
}

FilterId filter_id_of(const CnnConfig& cfg, std::size_t flat) {
    return {cfg.region_sizes[flat / cfg.maps_per_size], flat % cfg.maps_per_size};
}

// Pooled value and argmax window per filter for every sentence, one forward
// pass each; the per-filter rankings below reuse this.
struct ScanRow {
    std::vector<double> pooled;
    std::vector<std::size_t> argmax;
};

std::vector<ScanRow> scan(const CnnParams& params, const CnnConfig& cfg, EmbeddingTable& table,
                          const Dataset& data) {
    std::vector<ScanRow> rows;
    rows.reserve(data.instances.size());
    for (const Instance& inst : data.instances) {
        SentenceMatrix sm = table.embed_sentence(inst.tokens);
        ForwardTrace trace = forward(params, cfg, sm, nullptr);
        rows.push_back({std::move(trace.pooled), std::move(trace.argmax_pos)});
    }
    return rows;
}

std::vector<FilterHit> top_hits_for(const CnnConfig& cfg, const Dataset& data,
                                    const std::vector<ScanRow>& rows, std::size_t flat,
                                    std::size_t k) {
    FilterId fid = filter_id_of(cfg, flat);
    const std::size_t n = fid.region_size;

    std::vector<std::size_t> order(data.instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&rows, flat](std::size_t a, std::size_t b) {
        return rows[a].pooled[flat] > rows[b].pooled[flat];  // ties keep instance order
    });

    std::vector<FilterHit> hits;
    for (std::size_t idx : order) {
        if (hits.size() >= k) break;
        const Instance& inst = data.instances[idx];
        const std::size_t s = inst.tokens.size();
        std::size_t begin = rows[idx].argmax[flat];
        if (begin >= s) continue;  // window entirely in padding
        std::size_t end = std::min(begin + n - 1, s - 1);  // clip padded tail
        FilterHit hit;
        hit.filter = fid;
        hit.instance_id = inst.id;
        hit.pooled_value = rows[idx].pooled[flat];
        hit.span_begin = begin;
        hit.span_end = end;
        hit.ngram.assign(inst.tokens.begin() + begin, inst.tokens.begin() + end + 1);
        hit.label = inst.label();
        hits.push_back(std::move(hit));
    }
    return hits;
}

}  // namespace

std::vector<FilterHit> filter_top_sentences(const CnnParams& params, const CnnConfig& cfg,
                                            EmbeddingTable& table, const Dataset& data,
                                            FilterId filter, std::size_t k) {
    if (data.instances.empty()) throw std::invalid_argument("filter_top_sentences: empty dataset");
    std::size_t flat = filter_flat_index(cfg, filter);
    return top_hits_for(cfg, data, scan(params, cfg, table, data), flat, k);
}

std::vector<std::vector<FilterHit>> all_filter_hits(const CnnParams& params, const CnnConfig& cfg,
                                                    EmbeddingTable& table, const Dataset& data,
                                                    std::size_t k) {
    if (data.instances.empty()) throw std::invalid_argument("all_filter_hits: empty dataset");
    std::vector<ScanRow> rows = scan(params, cfg, table, data);
    std::vector<std::vector<FilterHit>> out;
    out.reserve(cfg.total_maps());
    for (std::size_t flat = 0; flat < cfg.total_maps(); ++flat)
        out.push_back(top_hits_for(cfg, data, rows, flat, k));
    return out;
}

std::vector<double> ngram_vector(EmbeddingTable& table, const std::vector<std::string>& ngram) {
    if (ngram.empty()) throw std::invalid_argument("ngram_vector: empty ngram");
    std::vector<double> sum(table.dim(), 0.0);
    for (const auto& tok : ngram) {
        auto lk = table.lookup(tok);
        const double* row = table.matrix().row(lk.row);
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += row[j];
    }
    return sum;
}

DistanceStats distance_stats(const std::vector<FilterHit>& hits, const Dataset& data) {
    std::unordered_map<std::string, const Instance*> by_id;
    for (const Instance& inst : data.instances) by_id.emplace(inst.id, &inst);

    DistanceStats stats;
    for (const FilterHit& hit : hits) {
        auto it = by_id.find(hit.instance_id);
        if (it == by_id.end())
            throw std::out_of_range("distance_stats: unknown instance id '" + hit.instance_id +
                                    "'");
        const std::size_t p = it->second->target_index;
        double dist = 0.0;
        enum { kContains, kLeft, kRight } kind = kContains;
        if (hit.span_end < p) {  // ngram left of the target
            kind = kLeft;
            dist = static_cast<double>(p - hit.span_end);
        } else if (hit.span_begin > p) {
            kind = kRight;
            dist = static_cast<double>(hit.span_begin - p);
        }
        auto add = [&](DistanceBucket& b) {
            ++b.count;
            b.sum_abs += dist;
            if (kind == kContains) ++b.contains;
            if (kind == kLeft) {
                ++b.left;
                b.sum_left += dist;
            }
            if (kind == kRight) {
                ++b.right;
                b.sum_right += dist;
            }
        };
        add(stats.overall);
        add(stats.per_label[hit.label]);
        add(stats.per_filter[hit.filter.str()]);
    }
    return stats;
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

ordered_json bucket_json(const DistanceBucket& b) {
    ordered_json j;
    j["count"] = b.count;
    j["contains"] = b.contains;
    j["contains_frac"] = b.contains_frac();
    j["left"] = b.left;
    j["right"] = b.right;
    j["mean_abs_distance"] = b.mean_abs();
    j["mean_left_distance"] = b.mean_left();
    j["mean_right_distance"] = b.mean_right();
    return j;
}

}  // namespace

void export_report(const std::vector<std::vector<FilterHit>>& hits_per_filter,
                   EmbeddingTable& table, const DistanceStats& stats, const Dataset& data,
                   const std::filesystem::path& out_dir, const std::string& suffix) {
    std::filesystem::create_directories(out_dir);

    const auto tsv_path = out_dir / ("ngrams" + suffix + ".tsv");
    std::ofstream tsv(tsv_path);
    if (!tsv) throw std::runtime_error("cannot write " + tsv_path.string());
    tsv << "filter\tlabel\tngram";
    for (std::size_t j = 1; j <= table.dim(); ++j) tsv << "\tv" << j;
    tsv << '\n';
    for (const auto& hits : hits_per_filter) {
        for (const FilterHit& hit : hits) {
            tsv << hit.filter.str() << '\t' << hit.label << '\t';
            for (std::size_t i = 0; i < hit.ngram.size(); ++i) {
                if (i) tsv << ' ';
                tsv << hit.ngram[i];
            }
            for (double v : ngram_vector(table, hit.ngram)) tsv << '\t' << fmt(v);
            tsv << '\n';
        }
    }

    std::unordered_map<std::string, const Instance*> by_id;
    for (const Instance& inst : data.instances) by_id.emplace(inst.id, &inst);

    const auto txt_path = out_dir / ("report" + suffix + ".txt");
    std::ofstream txt(txt_path);
    if (!txt) throw std::runtime_error("cannot write " + txt_path.string());
    for (const auto& hits : hits_per_filter) {
        if (hits.empty()) continue;
        txt << "== filter " << hits.front().filter.str() << " ==\n";
        for (const FilterHit& hit : hits) {
            txt << "  " << fmt(hit.pooled_value) << "  [" << hit.label << "]  ";
            const Instance* inst = by_id.at(hit.instance_id);
            for (std::size_t i = 0; i < inst->tokens.size(); ++i) {
                if (i) txt << ' ';
                if (i == hit.span_begin) txt << "[[";
                txt << inst->tokens[i];
                if (i == hit.span_end) txt << "]]";
            }
            txt << "  (" << hit.instance_id << ")\n";
        }
    }

    const auto json_path = out_dir / ("distance_stats" + suffix + ".json");
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path.string());
    ordered_json j;
    j["overall"] = bucket_json(stats.overall);
    j["per_label"] = ordered_json::object();
    for (const auto& [label, b] : stats.per_label) j["per_label"][label] = bucket_json(b);
    j["per_filter"] = ordered_json::object();
    for (const auto& [fid, b] : stats.per_filter) j["per_filter"][fid] = bucket_json(b);
    js << j.dump(2) << '\n';
}

}  // namespace sensecnn
