#pragma once

#include "bidforge/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

class Backend;

// The seven fine-tuned models: three concept generators of decreasing
// problem-space looseness, the random-innovation generator used to build
// negatives, and three domain-relevancy evaluators.
enum class ModelKind { Gen1, Gen2, Gen3, RandomInno, EvalBio, EvalBen, EvalCha };

inline constexpr std::array<ModelKind, 7> kAllModelKinds = {
    ModelKind::Gen1,    ModelKind::Gen2,    ModelKind::Gen3,   ModelKind::RandomInno,
    ModelKind::EvalBio, ModelKind::EvalBen, ModelKind::EvalCha};

// "gen1", "gen2", "gen3", "random_inno", "eval_bio", "eval_ben", "eval_cha"
std::string_view model_kind_name(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

constexpr bool is_evaluator(ModelKind kind) noexcept {
    return kind == ModelKind::EvalBio || kind == ModelKind::EvalBen || kind == ModelKind::EvalCha;
}
constexpr bool is_concept_generator(ModelKind kind) noexcept {
    return kind == ModelKind::Gen1 || kind == ModelKind::Gen2 || kind == ModelKind::Gen3;
}

enum class Label { Related, Unrelated };
std::string_view label_name(Label label) noexcept;

inline constexpr std::string_view kPromptSeparator = "\n\n###\n\n";
inline constexpr std::string_view kStopMarker = "\n[END]";
inline constexpr std::string_view kBiomimicryHeader = "Biomimicry:";
inline constexpr std::string_view kInnovationHeader = "Innovation:";

struct FineTuneExample {
    std::string prompt;
    std::string completion;
    std::optional<Label> label;  // present only in evaluator datasets
    std::string source_record_id;

    bool operator==(const FineTuneExample&) const = default;
};

// ---- markers ---------------------------------------------------------------

enum class MarkerTag { Bio, Inno, Ben, Cha };

std::string_view marker_token(MarkerTag tag) noexcept;  // "[Bio]", ...

// True if the text contains any of the four marker literals.
bool contains_marker(std::string_view text) noexcept;

// "[T]" + text + "[T]". Throws EmptyText for empty input and MarkerInText if
// the text already contains a marker literal.
std::string wrap_markers(std::string_view text, MarkerTag tag);

// Inverse of wrap_markers; throws Parse if the text is not exactly one
// wrapped segment of the given tag.
std::string parse_markers(std::string_view wrapped, MarkerTag tag);

struct MarkedSegment {
    MarkerTag tag;
    std::string text;
};

// Splits an evaluator prompt into its marked segments, ignoring the trailing
// separator. Throws Parse on unbalanced or unknown markers.
std::vector<MarkedSegment> parse_marked_segments(std::string_view prompt);

// ---- templates -------------------------------------------------------------

std::string application_prompt(const std::vector<std::string>& applications);
std::string benefits_application_prompt(const std::vector<std::string>& benefits,
                                        const std::vector<std::string>& applications);
std::string challenge_prompt(std::string_view challenge);

std::string concept_completion(std::string_view biomimicry, std::string_view innovation);
std::string innovation_completion(std::string_view innovation);
std::string label_completion(Label label);

// Generator-dataset completion for a record (biomimicry, then innovation).
std::string render_completion(const InnovationRecord& record);

struct EvaluatorSegments {
    std::string biomimicry;
    std::string innovation;
    std::vector<std::string> benefits;
    std::string challenge;
};

// EvalBio: [Bio]..[Bio][Inno]..[Inno]; EvalBen: [Inno]..[Inno][Ben]..[Ben];
// EvalCha: [Cha]..[Cha][Inno]..[Inno]; each followed by the separator.
std::string evaluator_prompt(ModelKind kind, const EvaluatorSegments& segments);

// Innovation text of a RandomInno completion ("Innovation:" header optional,
// stop marker stripped). Throws EmptyCompletion if nothing remains.
std::string extract_innovation(std::string_view completion);

// ---- dataset builders ------------------------------------------------------

struct DatasetBuild {
    ModelKind kind;
    std::vector<FineTuneExample> examples;
    std::vector<std::string> skipped_ids;  // records lacking a field the kind needs
};

// One example per eligible record. Throws EmptyDataset when nothing is
// eligible and ReservedText when a record's text would not survive the
// completion template round trip.
DatasetBuild build_generator_dataset(const Corpus& corpus, ModelKind kind);

using NegativeMap = std::map<std::string, std::string>;

struct NegativeSampleOptions {
    double temperature = 0.8;
    int max_tokens = 400;
};

// One random innovation per record, generated from the record's applications
// only. Calls fan out under the backend's in-flight limit.
NegativeMap build_negative_samples(const Corpus& corpus, Backend& backend, const std::string& random_inno_model,
                                   const NegativeSampleOptions& options = {});

// A positive (true innovation) and a negative (random innovation) example per
// eligible record, in corpus order. Only the innovation differs between them.
DatasetBuild build_evaluator_dataset(const Corpus& corpus, const NegativeMap& negatives, ModelKind kind);

// ---- splitting -------------------------------------------------------------

struct Fraction {
    std::int64_t numerator = 4;
    std::int64_t denominator = 5;
};

struct SplitConfig {
    Fraction train_fraction{};
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<FineTuneExample> train;
    std::vector<FineTuneExample> validation;
};

// Stratified by label; each stratum contributes round-half-up(fraction * size)
// examples to train after a seeded Fisher-Yates shuffle.
Split split(const std::vector<FineTuneExample>& dataset, const SplitConfig& config);

struct LabeledDataset {
    ModelKind kind;
    std::vector<FineTuneExample> train;
    std::vector<FineTuneExample> validation;
};

LabeledDataset make_labeled_dataset(ModelKind kind, const std::vector<FineTuneExample>& examples,
                                    const SplitConfig& config);

// max(1, round(0.002 * n_train)).
std::size_t batch_size_rule(std::size_t n_train);

// ---- JSON-lines ------------------------------------------------------------

std::string to_jsonl(const std::vector<FineTuneExample>& dataset);
std::size_t export_jsonl(const std::vector<FineTuneExample>& dataset, const std::filesystem::path& path);

// Labels are recovered from evaluator completions; source ids are not stored.
std::vector<FineTuneExample> parse_jsonl(std::string_view text);
std::vector<FineTuneExample> import_jsonl(const std::filesystem::path& path);

}  // namespace bidforge
