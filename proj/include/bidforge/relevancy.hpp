#pragma once

#include "bidforge/backend.hpp"
#include "bidforge/concept.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bidforge {

enum class Evaluator { NatureSolution, ProblemSolutionBenefits, ProblemSolutionChallenge };

std::string_view evaluator_name(Evaluator evaluator) noexcept;
std::optional<Evaluator> parse_evaluator(std::string_view name) noexcept;

struct RelevancyVerdict {
    std::string concept_id;
    Evaluator evaluator = Evaluator::NatureSolution;
    double probability = 0.0;
    bool related = false;  // probability >= 0.5

    bool operator==(const RelevancyVerdict&) const = default;
};

struct EvaluatorModels {
    std::string eval_bio;
    std::string eval_ben;
    std::string eval_cha;
};

// [Bio]biomimicry[Bio][Inno]innovation[Inno]
std::string nature_solution_prompt(const GeneratedConcept& generated);

// Type-2: innovation then benefits; Type-3: challenge then innovation;
// Type-1 has an open problem space and gets no prompt.
std::optional<std::string> problem_solution_prompt(const GeneratedConcept& generated);

RelevancyVerdict evaluate_nature_solution(const GeneratedConcept& generated, Backend& backend, const std::string& model);
std::optional<RelevancyVerdict> evaluate_problem_solution(const GeneratedConcept& generated, Backend& backend,
                                                          const EvaluatorModels& models);

// Every applicable verdict per concept, concept order preserved (nature
// first, then problem-solution). Errors name the failing concept.
std::vector<RelevancyVerdict> evaluate_concepts(const std::vector<GeneratedConcept>& concepts, Backend& backend,
                                                const EvaluatorModels& models);

class MissingVerdict : public Error {
public:
    MissingVerdict(std::string concept_id, Evaluator evaluator);
    const std::string& concept_id() const noexcept { return concept_id_; }
    Evaluator evaluator() const noexcept { return evaluator_; }

private:
    std::string concept_id_;
    Evaluator evaluator_;
};

struct PassRateRow {
    int generator_type = 1;
    std::size_t concepts = 0;
    std::size_t nature_solution_pass = 0;
    std::optional<std::size_t> problem_solution_pass;  // absent for Type-1
    std::size_t overall_pass = 0;  // concepts passing every applicable evaluator

    double nature_solution_rate() const noexcept;
    std::optional<double> problem_solution_rate() const noexcept;
    double overall_rate() const noexcept;
};

// One row per generator type that has concepts, ordered by type.
struct PassRateTable {
    std::vector<PassRateRow> rows;

    const PassRateRow* row(int generator_type) const noexcept;
};

PassRateTable pass_rate_table(const std::vector<GeneratedConcept>& concepts,
                              const std::vector<RelevancyVerdict>& verdicts);

std::string pass_rate_csv(const PassRateTable& table);
std::string pass_rate_text(const PassRateTable& table);

inline constexpr std::size_t kHistogramBins = 20;
using Histogram = std::array<std::size_t, kHistogramBins>;

// Fixed-width bins over [0, 1]; probability 1 falls in the last bin.
Histogram probability_histogram(const std::vector<double>& probabilities);

// evaluator,generator_type,bin_low,bin_high,count rows for every
// (evaluator, type) pair present in the verdicts.
std::string histogram_csv(const std::vector<GeneratedConcept>& concepts, const std::vector<RelevancyVerdict>& verdicts);

std::string verdicts_csv(const std::vector<RelevancyVerdict>& verdicts);
std::vector<RelevancyVerdict> parse_verdicts_csv(std::string_view text);

}  // namespace bidforge
