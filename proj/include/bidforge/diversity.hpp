#pragma once

#include "bidforge/concept.hpp"
#include "bidforge/corpus.hpp"
#include "bidforge/embeddings.hpp"
#include "bidforge/wmd.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bidforge {

// Keyed by (seed sample id, generator type 1..3).
using GeneratedBySample = std::map<std::pair<std::string, int>, std::vector<GeneratedConcept>>;

struct SummaryStats {
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Quartiles by linear interpolation between order statistics. Throws
// Precondition on an empty sample.
SummaryStats summarize(std::vector<double> values);

// Distances from one seed sample's original innovation to a set of texts.
// generator_type 0 marks the baseline (other records of the pool).
struct DiversityCell {
    std::string sample_id;
    int generator_type = 0;
    std::vector<std::string> item_ids;
    std::vector<double> distances;
};

struct SkippedDocument {
    std::string sample_id;
    int generator_type = 0;
    std::string item_id;
    std::string reason;
};

struct DiversityReport {
    std::vector<DiversityCell> cells;     // originals order, then type
    std::vector<DiversityCell> baseline;  // one per original
    std::vector<SkippedDocument> skipped;

    std::size_t generated_count() const noexcept;
    std::size_t baseline_count() const noexcept;

    // All distances for a generator type (0 = baseline) across samples.
    std::vector<double> pooled(int generator_type) const;
};

struct DiversityOptions {
    GroundMetric metric = GroundMetric::Euclidean;
    std::size_t workers = 0;  // 0: hardware concurrency
};

// Every original must be in the pool (by id), else SampleNotInPool. Generated
// concepts or pool records whose innovation text is empty after preprocessing
// are skipped and listed; an empty original is fatal (DocumentEmpty).
DiversityReport diversity_report(const std::vector<InnovationRecord>& originals, const GeneratedBySample& generated,
                                 const std::vector<InnovationRecord>& baseline_pool, const EmbeddingStore& store,
                                 const StopwordSet& stopwords, const DiversityOptions& options = {});

inline constexpr std::size_t kDistanceBins = 20;

struct DistanceHistogram {
    double low = 0.0;
    double high = 1.0;
    // series name ("type1", "type2", "type3", "baseline") -> bin counts
    std::vector<std::pair<std::string, std::array<std::size_t, kDistanceBins>>> series;
};

// Shared range over every reported distance so series are comparable.
DistanceHistogram distance_histogram(const DiversityReport& report);

std::string series_name(int generator_type);

// sample,type,concept_id,distance; type is 1/2/3 or "baseline".
std::string distances_csv(const DiversityReport& report);
std::string histogram_csv(const DistanceHistogram& histogram);
std::string summary_json(const DiversityReport& report);

}  // namespace bidforge
