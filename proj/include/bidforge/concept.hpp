#pragma once

#include "bidforge/backend.hpp"
#include "bidforge/datagen.hpp"
#include "bidforge/error.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bidforge {

// Problem-space representations, loosest first.
struct Type1Spec {
    std::vector<std::string> applications;
    bool operator==(const Type1Spec&) const = default;
};
struct Type2Spec {
    std::vector<std::string> benefits;
    std::vector<std::string> applications;
    bool operator==(const Type2Spec&) const = default;
};
struct Type3Spec {
    std::string challenge;
    bool operator==(const Type3Spec&) const = default;
};

using ProblemSpec = std::variant<Type1Spec, Type2Spec, Type3Spec>;

int generator_type(const ProblemSpec& spec) noexcept;  // 1, 2 or 3
ModelKind generator_kind(const ProblemSpec& spec) noexcept;

// Throws Precondition if a list is empty or contains blanks, or the challenge is blank.
void validate_spec(const ProblemSpec& spec);

std::string render_prompt(const ProblemSpec& spec);

enum class SourceCategory { Bird, Insect, Mammal, Fish, Reptile, Plant, Microorganism, Other };

std::string_view source_category_name(SourceCategory category) noexcept;
std::optional<SourceCategory> parse_source_category(std::string_view name) noexcept;

struct GeneratedConcept {
    std::string id;
    ProblemSpec spec;
    std::string biomimicry;
    std::string innovation;
    std::string raw_completion;
    std::string model;
    double temperature = 0.0;
    std::string created_at;  // ISO-8601 UTC
    std::optional<SourceCategory> source_category;

    bool operator==(const GeneratedConcept&) const = default;
};

// ---- completion parsing ----------------------------------------------------

enum class Section { Biomimicry, Innovation };

class MissingSection : public Error {
public:
    explicit MissingSection(Section which);
    Section which() const noexcept { return which_; }

private:
    Section which_;
};

struct ParsedCompletion {
    std::string biomimicry;
    std::string innovation;
};

// Splits on the first "Biomimicry:" and first "Innovation:" headers after
// dropping a trailing stop marker. Throws MissingSection when a header is
// absent or its body is blank, and Error{OutOfOrder} when Innovation comes first.
ParsedCompletion parse_completion(std::string_view text);

// ---- generation ------------------------------------------------------------

struct GenerationParams {
    std::string model;
    double temperature = 0.8;
    int max_tokens = 400;
    std::size_t budget = 0;  // total attempts allowed; 0 means 2n
    std::string id_prefix = "concept";
    std::string created_at;
};

struct Reject {
    std::size_t attempt = 0;
    std::string reason;
    std::string raw_completion;

    bool operator==(const Reject&) const = default;
};

struct GenerationResult {
    std::vector<GeneratedConcept> concepts;  // ordered by sample index
    std::vector<Reject> rejects;
    std::size_t attempts = 0;
};

class BudgetExhausted : public Error {
public:
    BudgetExhausted(GenerationResult partial, std::size_t requested);

    const GenerationResult& partial() const noexcept { return partial_; }
    std::size_t obtained() const noexcept { return partial_.concepts.size(); }
    std::size_t requested() const noexcept { return requested_; }

private:
    GenerationResult partial_;
    std::size_t requested_;
};

// Samples one completion per attempt (sample index = attempt number), parses
// it, and keeps drawing in waves until n concepts parse or the budget is spent.
GenerationResult generate_concepts(const ProblemSpec& spec, std::size_t n, Backend& backend,
                                   const GenerationParams& params);

// ---- source categorization -------------------------------------------------

struct Lexicon {
    // Category order is the tie-break order.
    std::vector<std::pair<SourceCategory, std::vector<std::string>>> entries;

    bool empty() const noexcept { return entries.empty(); }
};

// Lines of "category: term, term, ..."; '#' starts a comment.
Lexicon parse_lexicon(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);

// Case-insensitive, longest-match, whole-word scan (a plural "s"/"es" suffix
// is accepted); the category with the most hits wins, ties go to the earlier
// lexicon category, no hits gives Other.
SourceCategory categorize_text(std::string_view text, const Lexicon& lexicon);
SourceCategory categorize_source(const GeneratedConcept& generated, const Lexicon& lexicon);

// ---- concept store (JSON-lines) --------------------------------------------

std::string concept_to_json_line(const GeneratedConcept& generated);
GeneratedConcept concept_from_json_line(std::string_view line);

void write_concept_store(const std::filesystem::path& path, const std::vector<GeneratedConcept>& concepts);
std::vector<GeneratedConcept> read_concept_store(const std::filesystem::path& path);

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

}  // namespace bidforge
