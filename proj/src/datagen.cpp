#include "bidforge/datagen.hpp"

#include "bidforge/backend.hpp"
#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/parallel.hpp"
#include "bidforge/text.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

namespace bidforge {

namespace {

constexpr std::array<MarkerTag, 4> kAllTags = {MarkerTag::Bio, MarkerTag::Inno, MarkerTag::Ben, MarkerTag::Cha};

void require_marker_free(std::string_view text, std::string_view what, std::string_view record_id) {
    if (contains_marker(text)) {
        throw Error(ErrorKind::MarkerInText,
                    "record " + std::string(record_id) + ": " + std::string(what) + " contains a marker literal");
    }
}

bool eligible(const InnovationRecord& record, ModelKind kind) {
    switch (kind) {
        case ModelKind::Gen1:
        case ModelKind::RandomInno: return !record.applications.empty();
        case ModelKind::Gen2: return !record.applications.empty() && !record.benefits.empty();
        case ModelKind::Gen3: return !record.challenge.empty();
        case ModelKind::EvalBio: return true;
        case ModelKind::EvalBen: return !record.benefits.empty();
        case ModelKind::EvalCha: return !record.challenge.empty();
    }
    return false;
}

std::string generator_prompt(const InnovationRecord& record, ModelKind kind) {
    switch (kind) {
        case ModelKind::Gen1:
        case ModelKind::RandomInno: return application_prompt(record.applications);
        case ModelKind::Gen2: return benefits_application_prompt(record.benefits, record.applications);
        case ModelKind::Gen3: return challenge_prompt(record.challenge);
        default: break;
    }
    throw Error(ErrorKind::Precondition, std::string(model_kind_name(kind)) + " is not a generator kind");
}

// Texts that would make the completion parse differently from what was rendered.
void require_round_trip_safe(const InnovationRecord& record, ModelKind kind) {
    auto reject = [&](std::string_view field, std::string_view literal) {
        throw Error(ErrorKind::ReservedText, "record " + record.id + ": " + std::string(field) + " contains reserved text '" +
                                                 std::string(literal) + "'");
    };
    if (record.innovation.find(kStopMarker) != std::string::npos) reject("innovation", "\\n[END]");
    if (kind == ModelKind::RandomInno) return;
    if (record.biomimicry.find(kStopMarker) != std::string::npos) reject("biomimicry", "\\n[END]");
    if (record.biomimicry.find(kInnovationHeader) != std::string::npos) reject("biomimicry", kInnovationHeader);
}

std::int64_t round_half_up_fraction(std::int64_t count, const Fraction& f) {
    return (2 * f.numerator * count + f.denominator) / (2 * f.denominator);
}

template <class T>
void shuffle(std::vector<T>& items, SeededRng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Gen1: return "gen1";
        case ModelKind::Gen2: return "gen2";
        case ModelKind::Gen3: return "gen3";
        case ModelKind::RandomInno: return "random_inno";
        case ModelKind::EvalBio: return "eval_bio";
        case ModelKind::EvalBen: return "eval_ben";
        case ModelKind::EvalCha: return "eval_cha";
    }
    return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
    for (auto kind : kAllModelKinds) {
        if (model_kind_name(kind) == name) return kind;
    }
    return std::nullopt;
}

std::string_view label_name(Label label) noexcept {
    return label == Label::Related ? "related" : "unrelated";
}

// ---- markers ---------------------------------------------------------------

std::string_view marker_token(MarkerTag tag) noexcept {
    switch (tag) {
        case MarkerTag::Bio: return "[Bio]";
        case MarkerTag::Inno: return "[Inno]";
        case MarkerTag::Ben: return "[Ben]";
        case MarkerTag::Cha: return "[Cha]";
    }
    return "";
}

bool contains_marker(std::string_view text) noexcept {
    return std::any_of(kAllTags.begin(), kAllTags.end(),
                       [&](MarkerTag tag) { return text.find(marker_token(tag)) != std::string_view::npos; });
}

std::string wrap_markers(std::string_view text, MarkerTag tag) {
    if (text.empty()) throw Error(ErrorKind::EmptyText, "cannot wrap empty text in " + std::string(marker_token(tag)));
    if (contains_marker(text)) throw Error(ErrorKind::MarkerInText, "text already contains a marker literal");
    const auto token = marker_token(tag);
    std::string out;
    out.reserve(text.size() + 2 * token.size());
    out.append(token).append(text).append(token);
    return out;
}

std::string parse_markers(std::string_view wrapped, MarkerTag tag) {
    const auto token = marker_token(tag);
    if (wrapped.size() < 2 * token.size() || !wrapped.starts_with(token) || !wrapped.ends_with(token))
        throw ParseError("text is not wrapped in " + std::string(token), 0);
    auto inner = wrapped.substr(token.size(), wrapped.size() - 2 * token.size());
    if (contains_marker(inner)) throw ParseError("wrapped text contains a nested marker", 0);
    return std::string(inner);
}

std::vector<MarkedSegment> parse_marked_segments(std::string_view prompt) {
    if (prompt.ends_with(kPromptSeparator)) prompt.remove_suffix(kPromptSeparator.size());
    std::vector<MarkedSegment> segments;
    std::size_t pos = 0;
    while (pos < prompt.size()) {
        const auto rest = prompt.substr(pos);
        const auto it = std::find_if(kAllTags.begin(), kAllTags.end(),
                                     [&](MarkerTag tag) { return rest.starts_with(marker_token(tag)); });
        if (it == kAllTags.end()) throw ParseError("expected a marker at offset " + std::to_string(pos), 0);
        const auto token = marker_token(*it);
        const auto close = prompt.find(token, pos + token.size());
        if (close == std::string_view::npos) throw ParseError("unterminated " + std::string(token) + " segment", 0);
        segments.push_back({*it, std::string(prompt.substr(pos + token.size(), close - pos - token.size()))});
        pos = close + token.size();
    }
    return segments;
}

// ---- templates -------------------------------------------------------------

std::string application_prompt(const std::vector<std::string>& applications) {
    return "Application: " + join(applications, ", ") + std::string(kPromptSeparator);
}

std::string benefits_application_prompt(const std::vector<std::string>& benefits,
                                        const std::vector<std::string>& applications) {
    return "Benefits: " + join(benefits, ", ") + "\nApplication: " + join(applications, ", ") +
           std::string(kPromptSeparator);
}

std::string challenge_prompt(std::string_view challenge) {
    return "Challenge: " + std::string(challenge) + std::string(kPromptSeparator);
}

std::string concept_completion(std::string_view biomimicry, std::string_view innovation) {
    return " Biomimicry: " + std::string(biomimicry) + "\n\nInnovation: " + std::string(innovation) +
           std::string(kStopMarker);
}

std::string innovation_completion(std::string_view innovation) {
    return " Innovation: " + std::string(innovation) + std::string(kStopMarker);
}

std::string label_completion(Label label) {
    return " " + std::string(label_name(label)) + std::string(kStopMarker);
}

std::string render_completion(const InnovationRecord& record) {
    return concept_completion(record.biomimicry, record.innovation);
}

std::string evaluator_prompt(ModelKind kind, const EvaluatorSegments& s) {
    std::string out;
    switch (kind) {
        case ModelKind::EvalBio:
            out = wrap_markers(s.biomimicry, MarkerTag::Bio) + wrap_markers(s.innovation, MarkerTag::Inno);
            break;
        case ModelKind::EvalBen:
            out = wrap_markers(s.innovation, MarkerTag::Inno) + wrap_markers(join(s.benefits, ", "), MarkerTag::Ben);
            break;
        case ModelKind::EvalCha:
            out = wrap_markers(s.challenge, MarkerTag::Cha) + wrap_markers(s.innovation, MarkerTag::Inno);
            break;
        default:
            throw Error(ErrorKind::Precondition, std::string(model_kind_name(kind)) + " is not an evaluator kind");
    }
    return out + std::string(kPromptSeparator);
}

std::string extract_innovation(std::string_view completion) {
    if (const auto stop = completion.find(kStopMarker); stop != std::string_view::npos)
        completion = completion.substr(0, stop);
    if (const auto header = completion.find(kInnovationHeader); header != std::string_view::npos)
        completion = completion.substr(header + kInnovationHeader.size());
    auto text = trim(completion);
    if (text.empty()) throw Error(ErrorKind::EmptyCompletion, "completion contains no innovation text");
    return text;
}

// ---- dataset builders ------------------------------------------------------

DatasetBuild build_generator_dataset(const Corpus& corpus, ModelKind kind) {
    if (!is_concept_generator(kind) && kind != ModelKind::RandomInno)
        throw Error(ErrorKind::Precondition, std::string(model_kind_name(kind)) + " is not a generator kind");
    DatasetBuild build{kind, {}, {}};
    for (const auto& record : corpus.records) {
        if (!eligible(record, kind)) {
            build.skipped_ids.push_back(record.id);
            continue;
        }
        require_round_trip_safe(record, kind);
        FineTuneExample example;
        example.prompt = generator_prompt(record, kind);
        example.completion = kind == ModelKind::RandomInno ? innovation_completion(record.innovation)
                                                           : render_completion(record);
        example.source_record_id = record.id;
        build.examples.push_back(std::move(example));
    }
    if (build.examples.empty()) {
        throw Error(ErrorKind::EmptyDataset, std::string(model_kind_name(kind)) + ": no eligible records (" +
                                                 std::to_string(build.skipped_ids.size()) + " skipped)");
    }
    return build;
}

NegativeMap build_negative_samples(const Corpus& corpus, Backend& backend, const std::string& random_inno_model,
                                   const NegativeSampleOptions& options) {
    const auto texts = parallel_map(corpus.size(), backend.max_in_flight(), [&](std::size_t i) {
        const auto& record = corpus.records[i];
        CompletionRequest request;
        request.model = random_inno_model;
        request.prompt = application_prompt(record.applications);
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        try {
            auto response = backend.complete(request);
            if (response.texts.empty()) throw Error(ErrorKind::EmptyCompletion, "backend returned no text");
            return extract_innovation(response.texts.front());
        } catch (const Error& e) {
            throw Error(e.kind(), "record " + record.id + ": " + e.what());
        }
    });
    NegativeMap negatives;
    for (std::size_t i = 0; i < corpus.size(); ++i) negatives.emplace(corpus.records[i].id, texts[i]);
    return negatives;
}

DatasetBuild build_evaluator_dataset(const Corpus& corpus, const NegativeMap& negatives, ModelKind kind) {
    if (!is_evaluator(kind))
        throw Error(ErrorKind::Precondition, std::string(model_kind_name(kind)) + " is not an evaluator kind");
    DatasetBuild build{kind, {}, {}};
    for (const auto& record : corpus.records) {
        if (!eligible(record, kind)) {
            build.skipped_ids.push_back(record.id);
            continue;
        }
        const auto negative = negatives.find(record.id);
        if (negative == negatives.end())
            throw Error(ErrorKind::MissingNegative, "no random innovation for record " + record.id);

        require_marker_free(record.innovation, "innovation", record.id);
        require_marker_free(negative->second, "random innovation", record.id);
        require_marker_free(record.biomimicry, "biomimicry", record.id);
        require_marker_free(record.challenge, "challenge", record.id);
        for (const auto& b : record.benefits) require_marker_free(b, "benefits", record.id);

        EvaluatorSegments segments{record.biomimicry, record.innovation, record.benefits, record.challenge};
        build.examples.push_back({evaluator_prompt(kind, segments), label_completion(Label::Related), Label::Related, record.id});
        segments.innovation = negative->second;
        build.examples.push_back(
            {evaluator_prompt(kind, segments), label_completion(Label::Unrelated), Label::Unrelated, record.id});
    }
    if (build.examples.empty())
        throw Error(ErrorKind::EmptyDataset, std::string(model_kind_name(kind)) + ": no eligible records");
    return build;
}

// ---- splitting -------------------------------------------------------------

Split split(const std::vector<FineTuneExample>& dataset, const SplitConfig& config) {
    const auto& f = config.train_fraction;
    if (f.denominator <= 0 || f.numerator <= 0 || f.numerator >= f.denominator)
        throw Error(ErrorKind::Precondition, "train fraction must lie strictly between 0 and 1");
    if (dataset.empty()) throw Error(ErrorKind::Precondition, "cannot split an empty dataset");

    // Strata in a fixed order: related, unrelated, unlabeled.
    std::array<std::vector<std::size_t>, 3> strata;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& label = dataset[i].label;
        strata[!label ? 2 : (*label == Label::Related ? 0 : 1)].push_back(i);
    }

    SeededRng rng(config.seed);
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> validation_idx;
    for (auto& stratum : strata) {
        shuffle(stratum, rng);
        const auto n_train = static_cast<std::size_t>(round_half_up_fraction(static_cast<std::int64_t>(stratum.size()), f));
        train_idx.insert(train_idx.end(), stratum.begin(), stratum.begin() + static_cast<std::ptrdiff_t>(n_train));
        validation_idx.insert(validation_idx.end(), stratum.begin() + static_cast<std::ptrdiff_t>(n_train), stratum.end());
    }
    shuffle(train_idx, rng);
    shuffle(validation_idx, rng);

    Split out;
    out.train.reserve(train_idx.size());
    out.validation.reserve(validation_idx.size());
    for (auto i : train_idx) out.train.push_back(dataset[i]);
    for (auto i : validation_idx) out.validation.push_back(dataset[i]);
    return out;
}

LabeledDataset make_labeled_dataset(ModelKind kind, const std::vector<FineTuneExample>& examples,
                                    const SplitConfig& config) {
    auto parts = split(examples, config);
    if (is_evaluator(kind)) {
        auto balanced = [](const std::vector<FineTuneExample>& xs) {
            const auto pos = std::count_if(xs.begin(), xs.end(), [](const auto& x) { return x.label == Label::Related; });
            const auto neg = static_cast<std::ptrdiff_t>(xs.size()) - pos;
            return std::abs(pos - neg) <= 1;
        };
        if (!balanced(parts.train) || !balanced(parts.validation))
            throw Error(ErrorKind::Validation, std::string(model_kind_name(kind)) + ": labels are not balanced");
    }
    return {kind, std::move(parts.train), std::move(parts.validation)};
}

std::size_t batch_size_rule(std::size_t n_train) {
    if (n_train == 0) throw Error(ErrorKind::Precondition, "batch size needs at least one training example");
    // round(0.002 * n) == round(n / 500), halves rounded up.
    return std::max<std::size_t>(1, (n_train + 250) / 500);
}

// ---- JSON-lines ------------------------------------------------------------

std::string to_jsonl(const std::vector<FineTuneExample>& dataset) {
    std::string out;
    for (const auto& example : dataset) {
        nlohmann::ordered_json line;
        line["prompt"] = example.prompt;
        line["completion"] = example.completion;
        out += line.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
        out.push_back('\n');
    }
    return out;
}

std::size_t export_jsonl(const std::vector<FineTuneExample>& dataset, const std::filesystem::path& path) {
    write_file(path, to_jsonl(dataset));
    return dataset.size();
}

std::vector<FineTuneExample> parse_jsonl(std::string_view text) {
    std::vector<FineTuneExample> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    const auto related = label_completion(Label::Related);
    const auto unrelated = label_completion(Label::Unrelated);
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        nlohmann::json object;
        try {
            object = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(number) + ": " + e.what(), number);
        }
        if (!object.is_object() || !object.contains("prompt") || !object.contains("completion") ||
            !object["prompt"].is_string() || !object["completion"].is_string())
            throw ParseError("line " + std::to_string(number) + ": expected string prompt and completion", number);
        FineTuneExample example;
        example.prompt = object["prompt"].get<std::string>();
        example.completion = object["completion"].get<std::string>();
        if (example.completion == related) example.label = Label::Related;
        if (example.completion == unrelated) example.label = Label::Unrelated;
        out.push_back(std::move(example));
    }
    return out;
}

std::vector<FineTuneExample> import_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_file(path));
}

}  // namespace bidforge
