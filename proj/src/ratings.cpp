#include "bidforge/ratings.hpp"

#include "bidforge/csv.hpp"
#include "bidforge/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

namespace bidforge {

namespace {

int parse_score(const std::string& field, const char* name, std::size_t line) {
    const auto value = trim(field);
    int score = 0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), score);
    if (value.empty() || r.ec != std::errc() || r.ptr != value.data() + value.size())
        throw SchemaError(std::string(name) + " must be an integer, got '" + value + "'", line);
    if (score < 1 || score > 5) throw SchemaError(std::string(name) + " must be within 1-5, got " + value, line);
    return score;
}

struct Accumulator {
    std::size_t count = 0;
    long sum = 0;
    int min = 5;
    int max = 1;

    void add(int v) {
        ++count;
        sum += v;
        min = std::min(min, v);
        max = std::max(max, v);
    }
    double mean() const { return count ? static_cast<double>(sum) / static_cast<double>(count) : 0.0; }
    ScoreStats stats() const { return {mean(), min, max}; }
};

}  // namespace

std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw SchemaError("ratings file is empty", 1);
    const std::vector<std::string> header{"concept_id", "rater_id", "feasibility", "novelty"};
    std::vector<std::string> got;
    for (const auto& f : rows.front().fields) got.push_back(trim(f));
    if (got != header) throw SchemaError("header must be concept_id,rater_id,feasibility,novelty", rows.front().line);

    std::vector<RatingRecord> records;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != 4)
            throw SchemaError("expected 4 fields, got " + std::to_string(row.fields.size()), row.line);
        RatingRecord record{trim(row.fields[0]), trim(row.fields[1]), parse_score(row.fields[2], "feasibility", row.line),
                            parse_score(row.fields[3], "novelty", row.line)};
        if (record.concept_id.empty()) throw SchemaError("concept_id is empty", row.line);
        if (record.rater_id.empty()) throw SchemaError("rater_id is empty", row.line);
        if (!seen.emplace(record.concept_id, record.rater_id).second)
            throw SchemaError("rater '" + record.rater_id + "' scored '" + record.concept_id + "' twice", row.line);
        records.push_back(std::move(record));
    }
    return records;
}

RatingsSummary summarize_ratings(const std::vector<RatingRecord>& ratings, const std::vector<GeneratedConcept>& concepts) {
    std::unordered_map<std::string, int> type_of;
    for (const auto& c : concepts) type_of.emplace(c.id, generator_type(c.spec));

    struct PerConcept {
        int type = 1;
        Accumulator feasibility;
        Accumulator novelty;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, PerConcept> per_concept;
    struct PerType {
        std::set<std::string> concepts;
        std::set<std::string> raters;
        Accumulator feasibility;
        Accumulator novelty;
    };
    std::map<int, PerType> per_type;

    for (const auto& r : ratings) {
        const auto it = type_of.find(r.concept_id);
        if (it == type_of.end()) throw Error(ErrorKind::UnknownConcept, "unknown concept '" + r.concept_id + "'");
        auto [slot, inserted] = per_concept.try_emplace(r.concept_id);
        if (inserted) {
            order.push_back(r.concept_id);
            slot->second.type = it->second;
        }
        slot->second.feasibility.add(r.feasibility);
        slot->second.novelty.add(r.novelty);
        auto& t = per_type[it->second];
        t.concepts.insert(r.concept_id);
        t.raters.insert(r.rater_id);
        t.feasibility.add(r.feasibility);
        t.novelty.add(r.novelty);
    }

    RatingsSummary summary;
    for (const auto& [type, t] : per_type) {
        summary.types.push_back({type, t.concepts.size(), t.raters.size(), t.feasibility.count, t.feasibility.stats(),
                                 t.novelty.stats()});
    }
    for (const auto& id : order) {
        const auto& c = per_concept.at(id);
        summary.concepts.push_back({id, c.type, c.feasibility.count, c.feasibility.mean(), c.novelty.mean()});
    }
    return summary;
}

std::string ratings_summary_json(const RatingsSummary& summary) {
    auto stats = [](const ScoreStats& s) { return nlohmann::ordered_json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}}; };
    nlohmann::ordered_json root;
    auto types = nlohmann::ordered_json::array();
    for (const auto& t : summary.types) {
        types.push_back({{"generator_type", t.generator_type},
                         {"concepts", t.concepts},
                         {"raters", t.raters},
                         {"ratings", t.ratings},
                         {"feasibility", stats(t.feasibility)},
                         {"novelty", stats(t.novelty)}});
    }
    root["types"] = std::move(types);
    auto concepts = nlohmann::ordered_json::array();
    for (const auto& c : summary.concepts) {
        concepts.push_back({{"concept_id", c.concept_id},
                            {"generator_type", c.generator_type},
                            {"raters", c.raters},
                            {"feasibility_mean", c.feasibility_mean},
                            {"novelty_mean", c.novelty_mean}});
    }
    root["concepts"] = std::move(concepts);
    return root.dump(2) + "\n";
}

std::string ratings_summary_text(const RatingsSummary& summary) {
    std::string out = "type  concepts  raters  feasibility(mean/min/max)  novelty(mean/min/max)\n";
    char line[160];
    for (const auto& t : summary.types) {
        std::snprintf(line, sizeof line, "%-4d  %8zu  %6zu  %6.2f / %d / %d            %6.2f / %d / %d\n", t.generator_type,
                      t.concepts, t.raters, t.feasibility.mean, t.feasibility.min, t.feasibility.max, t.novelty.mean,
                      t.novelty.min, t.novelty.max);
        out += line;
    }
    return out;
}

}  // namespace bidforge
