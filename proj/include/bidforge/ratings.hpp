#pragma once

#include "bidforge/concept.hpp"
#include "bidforge/error.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

// One rater's 1-5 scores for one concept (see docs/rating_rubric.md).
struct RatingRecord {
    std::string concept_id;
    std::string rater_id;
    int feasibility = 0;
    int novelty = 0;

    bool operator==(const RatingRecord&) const = default;
};

class SchemaError : public Error {
public:
    SchemaError(const std::string& message, std::size_t line)
        : Error(ErrorKind::Schema, message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Header must be exactly concept_id,rater_id,feasibility,novelty. A rater
// may score a concept once.
std::vector<RatingRecord> parse_ratings_csv(std::string_view text);

struct ScoreStats {
    double mean = 0.0;
    int min = 0;
    int max = 0;
};

struct TypeRatings {
    int generator_type = 1;
    std::size_t concepts = 0;
    std::size_t raters = 0;  // distinct rater ids
    std::size_t ratings = 0;
    ScoreStats feasibility;
    ScoreStats novelty;
};

struct ConceptRatings {
    std::string concept_id;
    int generator_type = 1;
    std::size_t raters = 0;
    double feasibility_mean = 0.0;
    double novelty_mean = 0.0;
};

struct RatingsSummary {
    std::vector<TypeRatings> types;        // by generator type
    std::vector<ConceptRatings> concepts;  // first-appearance order
};

// Throws Error{UnknownConcept} for an id absent from the concept store.
RatingsSummary summarize_ratings(const std::vector<RatingRecord>& ratings, const std::vector<GeneratedConcept>& concepts);

std::string ratings_summary_json(const RatingsSummary& summary);
std::string ratings_summary_text(const RatingsSummary& summary);

}  // namespace bidforge
