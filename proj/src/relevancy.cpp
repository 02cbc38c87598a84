#include "bidforge/relevancy.hpp"

#include "bidforge/csv.hpp"
#include "bidforge/parallel.hpp"
#include "bidforge/text.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace bidforge {

namespace {

std::string format_rate(double rate) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", rate);
    return buffer;
}

std::string format_percent(std::size_t pass, std::size_t total) {
    char buffer[48];
    std::snprintf(buffer, sizeof buffer, "%.1f%% (%zu/%zu)", 100.0 * static_cast<double>(pass) / static_cast<double>(total),
                  pass, total);
    return buffer;
}

RelevancyVerdict to_verdict(const GeneratedConcept& generated, Evaluator evaluator, const ClassificationResult& result) {
    return {generated.id, evaluator, result.probability, result.label == Label::Related};
}

const char* type_heading(int type) {
    switch (type) {
        case 1: return "Type-1 (Application)";
        case 2: return "Type-2 (Benefits & Application)";
        default: return "Type-3 (Challenge)";
    }
}

}  // namespace

std::string_view evaluator_name(Evaluator evaluator) noexcept {
    switch (evaluator) {
        case Evaluator::NatureSolution: return "nature_solution";
        case Evaluator::ProblemSolutionBenefits: return "problem_solution_benefits";
        case Evaluator::ProblemSolutionChallenge: return "problem_solution_challenge";
    }
    return "unknown";
}

std::optional<Evaluator> parse_evaluator(std::string_view name) noexcept {
    for (auto e : {Evaluator::NatureSolution, Evaluator::ProblemSolutionBenefits, Evaluator::ProblemSolutionChallenge}) {
        if (evaluator_name(e) == name) return e;
    }
    return std::nullopt;
}

std::string nature_solution_prompt(const GeneratedConcept& generated) {
    return evaluator_prompt(ModelKind::EvalBio, {generated.biomimicry, generated.innovation, {}, {}});
}

std::optional<std::string> problem_solution_prompt(const GeneratedConcept& generated) {
    if (const auto* s = std::get_if<Type2Spec>(&generated.spec))
        return evaluator_prompt(ModelKind::EvalBen, {{}, generated.innovation, s->benefits, {}});
    if (const auto* s = std::get_if<Type3Spec>(&generated.spec))
        return evaluator_prompt(ModelKind::EvalCha, {{}, generated.innovation, {}, s->challenge});
    return std::nullopt;
}

RelevancyVerdict evaluate_nature_solution(const GeneratedConcept& generated, Backend& backend, const std::string& model) {
    return to_verdict(generated, Evaluator::NatureSolution, backend.classify(model, nature_solution_prompt(generated)));
}

std::optional<RelevancyVerdict> evaluate_problem_solution(const GeneratedConcept& generated, Backend& backend,
                                                          const EvaluatorModels& models) {
    const auto prompt = problem_solution_prompt(generated);
    if (!prompt) return std::nullopt;
    const bool benefits = std::holds_alternative<Type2Spec>(generated.spec);
    const auto& model = benefits ? models.eval_ben : models.eval_cha;
    return to_verdict(generated,
                      benefits ? Evaluator::ProblemSolutionBenefits : Evaluator::ProblemSolutionChallenge,
                      backend.classify(model, *prompt));
}

std::vector<RelevancyVerdict> evaluate_concepts(const std::vector<GeneratedConcept>& concepts, Backend& backend,
                                                const EvaluatorModels& models) {
    auto per_concept = parallel_map(concepts.size(), backend.max_in_flight(), [&](std::size_t i) {
        const auto& generated = concepts[i];
        try {
            std::vector<RelevancyVerdict> out{evaluate_nature_solution(generated, backend, models.eval_bio)};
            if (auto problem = evaluate_problem_solution(generated, backend, models)) out.push_back(std::move(*problem));
            return out;
        } catch (const Error& e) {
            throw Error(e.kind(), "concept " + generated.id + ": " + e.what());
        }
    });
    std::vector<RelevancyVerdict> verdicts;
    for (auto& group : per_concept) {
        for (auto& v : group) verdicts.push_back(std::move(v));
    }
    return verdicts;
}

MissingVerdict::MissingVerdict(std::string concept_id, Evaluator evaluator)
    : Error(ErrorKind::MissingVerdict,
            "concept " + concept_id + " has no " + std::string(evaluator_name(evaluator)) + " verdict"),
      concept_id_(std::move(concept_id)),
      evaluator_(evaluator) {}

double PassRateRow::nature_solution_rate() const noexcept {
    return static_cast<double>(nature_solution_pass) / static_cast<double>(concepts);
}

std::optional<double> PassRateRow::problem_solution_rate() const noexcept {
    if (!problem_solution_pass) return std::nullopt;
    return static_cast<double>(*problem_solution_pass) / static_cast<double>(concepts);
}

double PassRateRow::overall_rate() const noexcept {
    return static_cast<double>(overall_pass) / static_cast<double>(concepts);
}

const PassRateRow* PassRateTable::row(int generator_type) const noexcept {
    for (const auto& r : rows) {
        if (r.generator_type == generator_type) return &r;
    }
    return nullptr;
}

PassRateTable pass_rate_table(const std::vector<GeneratedConcept>& concepts,
                              const std::vector<RelevancyVerdict>& verdicts) {
    std::map<std::pair<std::string, Evaluator>, bool> lookup;
    for (const auto& v : verdicts) lookup[{v.concept_id, v.evaluator}] = v.related;

    auto find = [&](const std::string& id, Evaluator e) {
        const auto it = lookup.find({id, e});
        if (it == lookup.end()) throw MissingVerdict(id, e);
        return it->second;
    };

    std::map<int, PassRateRow> rows;
    for (const auto& c : concepts) {
        const int type = generator_type(c.spec);
        auto& row = rows[type];
        row.generator_type = type;
        ++row.concepts;
        const bool nature = find(c.id, Evaluator::NatureSolution);
        bool overall = nature;
        if (nature) ++row.nature_solution_pass;
        if (type != 1) {
            const auto e = type == 2 ? Evaluator::ProblemSolutionBenefits : Evaluator::ProblemSolutionChallenge;
            const bool problem = find(c.id, e);
            row.problem_solution_pass = row.problem_solution_pass.value_or(0) + (problem ? 1 : 0);
            overall = overall && problem;
        }
        if (overall) ++row.overall_pass;
    }

    PassRateTable table;
    for (auto& [_, row] : rows) table.rows.push_back(row);
    return table;
}

std::string pass_rate_csv(const PassRateTable& table) {
    std::string out = csv_line({"generator_type", "concepts", "nature_solution_pass", "nature_solution_rate",
                                "problem_solution_pass", "problem_solution_rate", "overall_pass", "overall_rate"});
    for (const auto& r : table.rows) {
        const auto problem_rate = r.problem_solution_rate();
        out += csv_line({std::to_string(r.generator_type), std::to_string(r.concepts),
                         std::to_string(r.nature_solution_pass), format_rate(r.nature_solution_rate()),
                         r.problem_solution_pass ? std::to_string(*r.problem_solution_pass) : "",
                         problem_rate ? format_rate(*problem_rate) : "", std::to_string(r.overall_pass),
                         format_rate(r.overall_rate())});
    }
    return out;
}

std::string pass_rate_text(const PassRateTable& table) {
    constexpr int kLabelWidth = 18;
    constexpr int kCellWidth = 34;
    std::ostringstream out;
    char cell[128];

    std::snprintf(cell, sizeof cell, "%-*s", kLabelWidth, "");
    out << cell;
    for (const auto& r : table.rows) {
        std::snprintf(cell, sizeof cell, "%-*s", kCellWidth, type_heading(r.generator_type));
        out << cell;
    }
    out << '\n';

    auto line = [&](const char* label, auto&& value_of) {
        std::snprintf(cell, sizeof cell, "%-*s", kLabelWidth, label);
        out << cell;
        for (const auto& r : table.rows) {
            std::snprintf(cell, sizeof cell, "%-*s", kCellWidth, value_of(r).c_str());
            out << cell;
        }
        out << '\n';
    };
    line("Nature-Solution", [](const PassRateRow& r) { return format_percent(r.nature_solution_pass, r.concepts); });
    line("Problem-Solution", [](const PassRateRow& r) {
        return r.problem_solution_pass ? format_percent(*r.problem_solution_pass, r.concepts) : std::string("N/A");
    });
    line("Overall", [](const PassRateRow& r) { return format_percent(r.overall_pass, r.concepts); });
    auto text = out.str();
    // Trailing padding is noise in diffs.
    std::string trimmed;
    for (const auto& l : split(text, "\n")) {
        auto end = l.find_last_not_of(' ');
        if (end != std::string::npos) trimmed += l.substr(0, end + 1) + "\n";
    }
    return trimmed;
}

Histogram probability_histogram(const std::vector<double>& probabilities) {
    Histogram bins{};
    for (double p : probabilities) {
        auto bin = static_cast<std::size_t>(p * static_cast<double>(kHistogramBins));
        if (bin >= kHistogramBins) bin = kHistogramBins - 1;
        ++bins[bin];
    }
    return bins;
}

std::string histogram_csv(const std::vector<GeneratedConcept>& concepts, const std::vector<RelevancyVerdict>& verdicts) {
    std::map<std::string, int> type_of;
    for (const auto& c : concepts) type_of[c.id] = generator_type(c.spec);
    std::map<std::pair<Evaluator, int>, std::vector<double>> groups;
    for (const auto& v : verdicts) {
        const auto it = type_of.find(v.concept_id);
        if (it == type_of.end()) throw Error(ErrorKind::UnknownConcept, "verdict for unknown concept " + v.concept_id);
        groups[{v.evaluator, it->second}].push_back(v.probability);
    }
    std::string out = csv_line({"evaluator", "generator_type", "bin_low", "bin_high", "count"});
    for (const auto& [key, values] : groups) {
        const auto bins = probability_histogram(values);
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            const double low = static_cast<double>(b) / kHistogramBins;
            const double high = static_cast<double>(b + 1) / kHistogramBins;
            out += csv_line({std::string(evaluator_name(key.first)), std::to_string(key.second), format_double(low),
                             format_double(high), std::to_string(bins[b])});
        }
    }
    return out;
}

std::string verdicts_csv(const std::vector<RelevancyVerdict>& verdicts) {
    std::string out = csv_line({"concept_id", "evaluator", "probability", "related"});
    for (const auto& v : verdicts) {
        out += csv_line({v.concept_id, std::string(evaluator_name(v.evaluator)), format_double(v.probability),
                         v.related ? "true" : "false"});
    }
    return out;
}

std::vector<RelevancyVerdict> parse_verdicts_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().fields != std::vector<std::string>{"concept_id", "evaluator", "probability", "related"})
        throw ParseError("verdicts file must start with concept_id,evaluator,probability,related", 1);
    std::vector<RelevancyVerdict> verdicts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto where = "line " + std::to_string(row.line) + ": ";
        if (row.fields.size() != 4) throw ParseError(where + "expected 4 fields", row.line);
        RelevancyVerdict v;
        v.concept_id = row.fields[0];
        const auto evaluator = parse_evaluator(row.fields[1]);
        if (!evaluator) throw ParseError(where + "unknown evaluator '" + row.fields[1] + "'", row.line);
        v.evaluator = *evaluator;
        try {
            std::size_t used = 0;
            v.probability = std::stod(row.fields[2], &used);
            if (used != row.fields[2].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError(where + "bad probability '" + row.fields[2] + "'", row.line);
        }
        if (row.fields[3] != "true" && row.fields[3] != "false")
            throw ParseError(where + "related must be true or false", row.line);
        v.related = row.fields[3] == "true";
        if (!(v.probability >= 0.0 && v.probability <= 1.0) || v.related != (v.probability >= kRelevancyThreshold))
            throw ParseError(where + "verdict violates the 0.5 threshold rule", row.line);
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace bidforge
