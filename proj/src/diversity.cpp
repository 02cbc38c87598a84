#include "bidforge/diversity.hpp"

#include "bidforge/csv.hpp"
#include "bidforge/error.hpp"
#include "bidforge/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

namespace bidforge {

SummaryStats summarize(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorKind::Precondition, "cannot summarize an empty sample");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + (values[hi] - values[lo]) * frac;
    };
    SummaryStats stats;
    stats.count = values.size();
    stats.min = values.front();
    stats.max = values.back();
    stats.q1 = quantile(0.25);
    stats.median = quantile(0.5);
    stats.q3 = quantile(0.75);
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / static_cast<double>(values.size());
    return stats;
}

std::size_t DiversityReport::generated_count() const noexcept {
    std::size_t total = 0;
    for (const auto& cell : cells) total += cell.distances.size();
    return total;
}

std::size_t DiversityReport::baseline_count() const noexcept {
    std::size_t total = 0;
    for (const auto& cell : baseline) total += cell.distances.size();
    return total;
}

std::vector<double> DiversityReport::pooled(int generator_type) const {
    std::vector<double> values;
    for (const auto& cell : generator_type == 0 ? baseline : cells) {
        if (cell.generator_type == generator_type) values.insert(values.end(), cell.distances.begin(), cell.distances.end());
    }
    return values;
}

namespace {

struct Job {
    std::size_t original = 0;
    bool is_baseline = false;
    std::size_t cell = 0;
    std::string item_id;
    const std::string* text = nullptr;
};

}  // namespace

DiversityReport diversity_report(const std::vector<InnovationRecord>& originals, const GeneratedBySample& generated,
                                 const std::vector<InnovationRecord>& baseline_pool, const EmbeddingStore& store,
                                 const StopwordSet& stopwords, const DiversityOptions& options) {
    DiversityReport report;
    std::vector<NBowDocument> original_docs;
    for (const auto& original : originals) {
        const bool in_pool = std::any_of(baseline_pool.begin(), baseline_pool.end(),
                                         [&](const InnovationRecord& r) { return r.id == original.id; });
        if (!in_pool) throw Error(ErrorKind::SampleNotInPool, "sample '" + original.id + "' is not in the baseline pool");
        try {
            original_docs.push_back(to_nbow(original.innovation, store, stopwords));
        } catch (const Error& e) {
            throw Error(e.kind(), "sample '" + original.id + "': " + e.what());
        }
    }
    for (const auto& [key, concepts] : generated) {
        const bool known = std::any_of(originals.begin(), originals.end(),
                                       [&](const InnovationRecord& r) { return r.id == key.first; });
        if (!known) throw Error(ErrorKind::Precondition, "generated concepts reference unknown sample '" + key.first + "'");
    }

    std::vector<Job> jobs;
    for (std::size_t o = 0; o < originals.size(); ++o) {
        for (int type = 1; type <= 3; ++type) {
            const auto it = generated.find({originals[o].id, type});
            if (it == generated.end()) continue;
            const auto cell = report.cells.size();
            report.cells.push_back({originals[o].id, type, {}, {}});
            for (const auto& c : it->second) jobs.push_back({o, false, cell, c.id, &c.innovation});
        }
    }
    for (std::size_t o = 0; o < originals.size(); ++o) {
        report.baseline.push_back({originals[o].id, 0, {}, {}});
        for (const auto& record : baseline_pool) {
            if (record.id == originals[o].id) continue;
            jobs.push_back({o, true, o, record.id, &record.innovation});
        }
    }

    std::size_t workers = options.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    // Returns the distance, or nullopt when the text is empty after preprocessing.
    const auto outcomes = parallel_map(jobs.size(), workers, [&](std::size_t k) -> std::optional<double> {
        const auto& job = jobs[k];
        NBowDocument doc;
        try {
            doc = to_nbow(*job.text, store, stopwords);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::DocumentEmpty) return std::nullopt;
            throw Error(e.kind(), "'" + job.item_id + "': " + e.what());
        }
        return wmd(original_docs[job.original], doc, store, options.metric).distance;
    });

    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const auto& job = jobs[k];
        auto& cell = job.is_baseline ? report.baseline[job.cell] : report.cells[job.cell];
        if (!outcomes[k]) {
            report.skipped.push_back({cell.sample_id, cell.generator_type, job.item_id, "DocumentEmpty"});
            continue;
        }
        cell.item_ids.push_back(job.item_id);
        cell.distances.push_back(*outcomes[k]);
    }
    return report;
}

std::string series_name(int generator_type) {
    return generator_type == 0 ? "baseline" : "type" + std::to_string(generator_type);
}

DistanceHistogram distance_histogram(const DiversityReport& report) {
    DistanceHistogram histogram;
    std::vector<double> all;
    for (int type : {1, 2, 3, 0}) {
        const auto values = report.pooled(type);
        all.insert(all.end(), values.begin(), values.end());
    }
    if (!all.empty()) {
        const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
        histogram.low = *lo;
        histogram.high = *hi > *lo ? *hi : *lo + 1.0;
    }
    const double width = (histogram.high - histogram.low) / static_cast<double>(kDistanceBins);
    for (int type : {1, 2, 3, 0}) {
        const auto values = report.pooled(type);
        if (values.empty()) continue;
        std::array<std::size_t, kDistanceBins> counts{};
        for (double v : values) {
            auto bin = static_cast<std::size_t>((v - histogram.low) / width);
            counts[std::min(bin, kDistanceBins - 1)] += 1;
        }
        histogram.series.emplace_back(series_name(type), counts);
    }
    return histogram;
}

std::string distances_csv(const DiversityReport& report) {
    std::string out = "sample,type,concept_id,distance\n";
    auto emit = [&](const DiversityCell& cell) {
        const std::string type = cell.generator_type == 0 ? "baseline" : std::to_string(cell.generator_type);
        for (std::size_t k = 0; k < cell.distances.size(); ++k)
            out += csv_line({cell.sample_id, type, cell.item_ids[k], format_double(cell.distances[k])});
    };
    for (const auto& cell : report.cells) emit(cell);
    for (const auto& cell : report.baseline) emit(cell);
    return out;
}

std::string histogram_csv(const DistanceHistogram& histogram) {
    std::string out = "series,bin,bin_low,bin_high,count\n";
    const double width = (histogram.high - histogram.low) / static_cast<double>(kDistanceBins);
    for (const auto& [name, counts] : histogram.series) {
        for (std::size_t b = 0; b < kDistanceBins; ++b) {
            const double low = histogram.low + width * static_cast<double>(b);
            const double high = b + 1 == kDistanceBins ? histogram.high : histogram.low + width * static_cast<double>(b + 1);
            out += csv_line({name, std::to_string(b), format_double(low), format_double(high), std::to_string(counts[b])});
        }
    }
    return out;
}

namespace {

nlohmann::ordered_json stats_json(const std::vector<double>& values) {
    nlohmann::ordered_json j;
    j["count"] = values.size();
    if (values.empty()) return j;
    const auto s = summarize(values);
    j["min"] = s.min;
    j["q1"] = s.q1;
    j["median"] = s.median;
    j["mean"] = s.mean;
    j["q3"] = s.q3;
    j["max"] = s.max;
    return j;
}

}  // namespace

std::string summary_json(const DiversityReport& report) {
    nlohmann::ordered_json root;
    root["generated_distances"] = report.generated_count();
    root["baseline_distances"] = report.baseline_count();
    auto cells = nlohmann::ordered_json::array();
    for (const auto& cell : report.cells) {
        auto j = stats_json(cell.distances);
        j["sample"] = cell.sample_id;
        j["type"] = cell.generator_type;
        cells.push_back(std::move(j));
    }
    root["cells"] = std::move(cells);
    auto baseline = nlohmann::ordered_json::array();
    for (const auto& cell : report.baseline) {
        auto j = stats_json(cell.distances);
        j["sample"] = cell.sample_id;
        baseline.push_back(std::move(j));
    }
    root["baseline"] = std::move(baseline);
    nlohmann::ordered_json by_series;
    for (int type : {1, 2, 3, 0}) {
        const auto values = report.pooled(type);
        if (!values.empty()) by_series[series_name(type)] = stats_json(values);
    }
    root["by_series"] = std::move(by_series);

    const auto histogram = distance_histogram(report);
    nlohmann::ordered_json hist;
    hist["bins"] = kDistanceBins;
    hist["low"] = histogram.low;
    hist["high"] = histogram.high;
    nlohmann::ordered_json counts;
    for (const auto& [name, bins] : histogram.series) counts[name] = bins;
    hist["counts"] = std::move(counts);
    root["histogram"] = std::move(hist);

    auto skipped = nlohmann::ordered_json::array();
    for (const auto& s : report.skipped) {
        skipped.push_back({{"sample", s.sample_id}, {"type", series_name(s.generator_type)}, {"id", s.item_id},
                           {"reason", s.reason}});
    }
    root["skipped"] = std::move(skipped);
    return root.dump(2) + "\n";
}

}  // namespace bidforge
