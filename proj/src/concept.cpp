#include "bidforge/concept.hpp"

#include "bidforge/parallel.hpp"
#include "bidforge/text.hpp"

#include <algorithm>
#include <array>
#include <json.hpp>
#include <sstream>

namespace bidforge {

namespace {

using ordered_json = nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_keywords(const std::vector<std::string>& list, const char* field) {
    if (list.empty()) throw Error(ErrorKind::Precondition, std::string(field) + " must not be empty");
    for (const auto& item : list) {
        if (trim(item).empty()) throw Error(ErrorKind::Precondition, std::string(field) + " contains a blank keyword");
    }
}

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

ordered_json spec_to_json(const ProblemSpec& spec) {
    return std::visit(overloaded{
                          [](const Type1Spec& s) { return ordered_json{{"type", 1}, {"applications", s.applications}}; },
                          [](const Type2Spec& s) {
                              return ordered_json{{"type", 2}, {"benefits", s.benefits}, {"applications", s.applications}};
                          },
                          [](const Type3Spec& s) { return ordered_json{{"type", 3}, {"challenge", s.challenge}}; },
                      },
                      spec);
}

ProblemSpec spec_from_json(const nlohmann::json& j) {
    switch (j.at("type").get<int>()) {
        case 1: return Type1Spec{j.at("applications").get<std::vector<std::string>>()};
        case 2:
            return Type2Spec{j.at("benefits").get<std::vector<std::string>>(),
                             j.at("applications").get<std::vector<std::string>>()};
        case 3: return Type3Spec{j.at("challenge").get<std::string>()};
        default: break;
    }
    throw Error(ErrorKind::Parse, "spec type must be 1, 2 or 3");
}

}  // namespace

int generator_type(const ProblemSpec& spec) noexcept {
    return static_cast<int>(spec.index()) + 1;
}

ModelKind generator_kind(const ProblemSpec& spec) noexcept {
    switch (spec.index()) {
        case 0: return ModelKind::Gen1;
        case 1: return ModelKind::Gen2;
        default: return ModelKind::Gen3;
    }
}

void validate_spec(const ProblemSpec& spec) {
    std::visit(overloaded{
                   [](const Type1Spec& s) { require_keywords(s.applications, "applications"); },
                   [](const Type2Spec& s) {
                       require_keywords(s.benefits, "benefits");
                       require_keywords(s.applications, "applications");
                   },
                   [](const Type3Spec& s) {
                       if (trim(s.challenge).empty()) throw Error(ErrorKind::Precondition, "challenge must not be empty");
                   },
               },
               spec);
}

std::string render_prompt(const ProblemSpec& spec) {
    return std::visit(overloaded{
                          [](const Type1Spec& s) { return application_prompt(s.applications); },
                          [](const Type2Spec& s) { return benefits_application_prompt(s.benefits, s.applications); },
                          [](const Type3Spec& s) { return challenge_prompt(s.challenge); },
                      },
                      spec);
}

std::string_view source_category_name(SourceCategory category) noexcept {
    switch (category) {
        case SourceCategory::Bird: return "bird";
        case SourceCategory::Insect: return "insect";
        case SourceCategory::Mammal: return "mammal";
        case SourceCategory::Fish: return "fish";
        case SourceCategory::Reptile: return "reptile";
        case SourceCategory::Plant: return "plant";
        case SourceCategory::Microorganism: return "microorganism";
        case SourceCategory::Other: return "other";
    }
    return "other";
}

std::optional<SourceCategory> parse_source_category(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(SourceCategory::Other); ++i) {
        const auto category = static_cast<SourceCategory>(i);
        if (source_category_name(category) == name) return category;
    }
    return std::nullopt;
}

// ---- completion parsing ----------------------------------------------------

MissingSection::MissingSection(Section which)
    : Error(ErrorKind::MissingSection,
            std::string("completion has no ") + (which == Section::Biomimicry ? "biomimicry" : "innovation") + " section"),
      which_(which) {}

ParsedCompletion parse_completion(std::string_view text) {
    if (const auto stop = text.find(kStopMarker); stop != std::string_view::npos) text = text.substr(0, stop);
    const auto bio = text.find(kBiomimicryHeader);
    const auto inno = text.find(kInnovationHeader);
    if (bio == std::string_view::npos) throw MissingSection(Section::Biomimicry);
    if (inno == std::string_view::npos) throw MissingSection(Section::Innovation);
    if (inno < bio) throw Error(ErrorKind::OutOfOrder, "Innovation section precedes Biomimicry section");

    const auto bio_start = bio + kBiomimicryHeader.size();
    ParsedCompletion parsed{trim(text.substr(bio_start, inno - bio_start)),
                            trim(text.substr(inno + kInnovationHeader.size()))};
    if (parsed.biomimicry.empty()) throw MissingSection(Section::Biomimicry);
    if (parsed.innovation.empty()) throw MissingSection(Section::Innovation);
    return parsed;
}

// ---- generation ------------------------------------------------------------

BudgetExhausted::BudgetExhausted(GenerationResult partial, std::size_t requested)
    : Error(ErrorKind::BudgetExhausted, "obtained " + std::to_string(partial.concepts.size()) + " of " +
                                            std::to_string(requested) + " concepts after " +
                                            std::to_string(partial.attempts) + " attempts"),
      partial_(std::move(partial)),
      requested_(requested) {}

GenerationResult generate_concepts(const ProblemSpec& spec, std::size_t n, Backend& backend,
                                   const GenerationParams& params) {
    if (n == 0) throw Error(ErrorKind::Precondition, "n must be at least 1");
    validate_spec(spec);
    if (params.model.empty())
        throw Error(ErrorKind::Precondition, "no model configured for " + std::string(model_kind_name(generator_kind(spec))));

    const std::size_t budget = params.budget == 0 ? 2 * n : params.budget;
    const auto prompt = render_prompt(spec);
    GenerationResult result;

    while (result.concepts.size() < n && result.attempts < budget) {
        const auto wave = std::min(n - result.concepts.size(), budget - result.attempts);
        const auto first_attempt = result.attempts;
        const auto texts = parallel_map(wave, backend.max_in_flight(), [&](std::size_t i) {
            CompletionRequest request;
            request.model = params.model;
            request.prompt = prompt;
            request.temperature = params.temperature;
            request.max_tokens = params.max_tokens;
            request.sample_offset = first_attempt + i;
            auto response = backend.complete(request);
            if (response.texts.empty()) throw Error(ErrorKind::Backend, "backend returned no completion");
            return std::move(response.texts.front());
        });
        result.attempts += wave;

        for (std::size_t i = 0; i < texts.size(); ++i) {
            try {
                auto parsed = parse_completion(texts[i]);
                GeneratedConcept generated;
                char suffix[16];
                std::snprintf(suffix, sizeof suffix, "-%04zu", result.concepts.size() + 1);
                generated.id = params.id_prefix + suffix;
                generated.spec = spec;
                generated.biomimicry = std::move(parsed.biomimicry);
                generated.innovation = std::move(parsed.innovation);
                generated.raw_completion = texts[i];
                generated.model = params.model;
                generated.temperature = params.temperature;
                generated.created_at = params.created_at;
                result.concepts.push_back(std::move(generated));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::MissingSection && e.kind() != ErrorKind::OutOfOrder) throw;
                result.rejects.push_back({first_attempt + i, e.what(), texts[i]});
            }
        }
    }

    if (result.concepts.size() < n) throw BudgetExhausted(std::move(result), n);
    return result;
}

// ---- source categorization -------------------------------------------------

Lexicon parse_lexicon(std::string_view text) {
    Lexicon lexicon;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError("lexicon line " + std::to_string(number) + ": expected 'category: terms'", number);
        const auto name = to_lower(trim(std::string_view(line).substr(0, colon)));
        const auto category = parse_source_category(name);
        if (!category) throw ParseError("lexicon line " + std::to_string(number) + ": unknown category '" + name + "'", number);

        auto entry = std::find_if(lexicon.entries.begin(), lexicon.entries.end(),
                                  [&](const auto& e) { return e.first == *category; });
        if (entry == lexicon.entries.end()) {
            lexicon.entries.push_back({*category, {}});
            entry = std::prev(lexicon.entries.end());
        }
        for (const auto& term : split(std::string_view(line).substr(colon + 1), ",")) {
            auto cleaned = to_lower(trim(term));
            if (!cleaned.empty()) entry->second.push_back(std::move(cleaned));
        }
    }
    return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    return parse_lexicon(read_file(path));
}

SourceCategory categorize_text(std::string_view text, const Lexicon& lexicon) {
    struct Term {
        std::string_view text;
        std::size_t category_rank;
    };
    std::vector<Term> terms;
    for (std::size_t rank = 0; rank < lexicon.entries.size(); ++rank) {
        for (const auto& term : lexicon.entries[rank].second) terms.push_back({term, rank});
    }
    std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.text.size() > b.text.size(); });

    const auto lowered = to_lower(text);
    const std::string_view haystack = lowered;
    std::vector<std::size_t> hits(lexicon.entries.size(), 0);
    constexpr std::array<std::string_view, 3> kSuffixes = {"es", "s", ""};

    std::size_t i = 0;
    while (i < haystack.size()) {
        if (i > 0 && is_word_char(haystack[i - 1])) {
            ++i;
            continue;
        }
        std::size_t advance = 0;
        for (const auto& term : terms) {
            if (haystack.compare(i, term.text.size(), term.text) != 0) continue;
            const auto end = i + term.text.size();
            for (auto suffix : kSuffixes) {
                if (haystack.compare(end, suffix.size(), suffix) != 0) continue;
                const auto stop = end + suffix.size();
                if (stop == haystack.size() || !is_word_char(haystack[stop])) {
                    advance = stop - i;
                    break;
                }
            }
            if (advance > 0) {
                ++hits[term.category_rank];
                break;
            }
        }
        i += advance > 0 ? advance : 1;
    }

    std::size_t best = 0;
    for (std::size_t rank = 1; rank < hits.size(); ++rank) {
        if (hits[rank] > hits[best]) best = rank;
    }
    if (hits.empty() || hits[best] == 0) return SourceCategory::Other;
    return lexicon.entries[best].first;
}

SourceCategory categorize_source(const GeneratedConcept& generated, const Lexicon& lexicon) {
    return categorize_text(generated.biomimicry, lexicon);
}

// ---- concept store ---------------------------------------------------------

std::string concept_to_json_line(const GeneratedConcept& c) {
    ordered_json j;
    j["id"] = c.id;
    j["spec"] = spec_to_json(c.spec);
    j["biomimicry"] = c.biomimicry;
    j["innovation"] = c.innovation;
    j["raw_completion"] = c.raw_completion;
    j["model"] = c.model;
    j["temperature"] = c.temperature;
    j["created_at"] = c.created_at;
    j["source_category"] = c.source_category ? ordered_json(std::string(source_category_name(*c.source_category)))
                                             : ordered_json(nullptr);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

GeneratedConcept concept_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        GeneratedConcept c;
        c.id = j.at("id").get<std::string>();
        c.spec = spec_from_json(j.at("spec"));
        c.biomimicry = j.at("biomimicry").get<std::string>();
        c.innovation = j.at("innovation").get<std::string>();
        c.raw_completion = j.at("raw_completion").get<std::string>();
        c.model = j.at("model").get<std::string>();
        c.temperature = j.at("temperature").get<double>();
        c.created_at = j.at("created_at").get<std::string>();
        if (j.contains("source_category") && !j["source_category"].is_null()) {
            const auto name = j["source_category"].get<std::string>();
            c.source_category = parse_source_category(name);
            if (!c.source_category) throw Error(ErrorKind::Parse, "unknown source category '" + name + "'");
        }
        if (c.biomimicry.empty() || c.innovation.empty()) throw Error(ErrorKind::Parse, "concept " + c.id + " has an empty section");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed concept: ") + e.what());
    }
}

void write_concept_store(const std::filesystem::path& path, const std::vector<GeneratedConcept>& concepts) {
    std::string out;
    for (const auto& c : concepts) {
        out += concept_to_json_line(c);
        out.push_back('\n');
    }
    write_file(path, out);
}

std::vector<GeneratedConcept> read_concept_store(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<GeneratedConcept> concepts;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        try {
            concepts.push_back(concept_from_json_line(line));
        } catch (const Error& e) {
            throw ParseError(path.string() + ": line " + std::to_string(number) + ": " + e.what(), number);
        }
    }
    return concepts;
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
    std::string out;
    for (const auto& r : rejects) {
        ordered_json j;
        j["attempt"] = r.attempt;
        j["reason"] = r.reason;
        j["raw_completion"] = r.raw_completion;
        out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out.push_back('\n');
    }
    write_file(path, out);
}

}  // namespace bidforge
