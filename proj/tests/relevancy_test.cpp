#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/mock_backend.hpp"
#include "bidforge/relevancy.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace bidforge;
using bidforge::testing::synthetic_corpus;

namespace {

GeneratedConcept make_concept(const std::string& id, ProblemSpec spec, std::string bio = "Owls have serrated feathers.",
                              std::string inno = "A quiet fan blade.") {
    GeneratedConcept c;
    c.id = id;
    c.spec = std::move(spec);
    c.biomimicry = std::move(bio);
    c.innovation = std::move(inno);
    c.raw_completion = concept_completion(c.biomimicry, c.innovation);
    return c;
}

RelevancyVerdict verdict(const std::string& id, Evaluator e, bool related) {
    return {id, e, related ? 0.9 : 0.1, related};
}

std::unique_ptr<MockBackend> make_mock() {
    auto m = std::make_unique<MockBackend>(std::make_shared<const Corpus>(synthetic_corpus(10, 1)), MockOptions{});
    for (auto kind : kAllModelKinds) m->register_model("mock-" + std::string(model_kind_name(kind)), kind);
    return m;
}

const EvaluatorModels kModels{"mock-eval_bio", "mock-eval_ben", "mock-eval_cha"};

}  // namespace

TEST(Prompts, NatureSolutionOrdering) {
    const auto c = make_concept("c1", Type1Spec{{"Fans"}});
    EXPECT_EQ(nature_solution_prompt(c), "[Bio]Owls have serrated feathers.[Bio][Inno]A quiet fan blade.[Inno]\n\n###\n\n");
}

TEST(Prompts, ProblemSolutionPerType) {
    EXPECT_FALSE(problem_solution_prompt(make_concept("a", Type1Spec{{"Flying car"}})).has_value());

    const auto two = problem_solution_prompt(make_concept("b", Type2Spec{{"Lightweight"}, {"Flying car"}}));
    ASSERT_TRUE(two.has_value());
    const auto inno = two->find("[Inno]A quiet fan blade.[Inno]");
    const auto ben = two->find("[Ben]Lightweight[Ben]");
    ASSERT_NE(inno, std::string::npos);
    ASSERT_NE(ben, std::string::npos);
    EXPECT_LT(inno, ben);

    const auto three = problem_solution_prompt(make_concept("c", Type3Spec{"Lightweight design is a challenge for flying cars."}));
    ASSERT_TRUE(three.has_value());
    EXPECT_TRUE(three->starts_with("[Cha]"));
}

TEST(Evaluate, MockVerdictsFollowOverlap) {
    const auto m_owner = make_mock();
    auto& m = *m_owner;
    const auto same = make_concept("s", Type1Spec{{"Fans"}}, "Owl feathers muffle turbulent noise.",
                                   "Owl feathers muffle turbulent noise.");
    const auto v = evaluate_nature_solution(same, m, "mock-eval_bio");
    EXPECT_TRUE(v.related);
    EXPECT_GT(v.probability, 0.9);

    const auto apart = make_concept("d", Type1Spec{{"Fans"}}, "Owl feathers muffle turbulent noise.",
                                    "Concrete slabs store heat.");
    const auto w = evaluate_nature_solution(apart, m, "mock-eval_bio");
    EXPECT_FALSE(w.related);
    EXPECT_NEAR(w.probability, 1.0 / (1.0 + std::exp(1.0)), 1e-12);
}

TEST(Evaluate, VerdictCountsPerType) {
    const auto m_owner = make_mock();
    auto& m = *m_owner;
    const std::vector<GeneratedConcept> cs = {make_concept("a", Type1Spec{{"Fans"}}),
                                              make_concept("b", Type2Spec{{"Quiet"}, {"Fans"}}),
                                              make_concept("c", Type3Spec{"Fans are loud."})};
    const auto vs = evaluate_concepts(cs, m, kModels);
    ASSERT_EQ(vs.size(), 5u);
    EXPECT_EQ(vs[0].concept_id, "a");
    EXPECT_EQ(vs[2].evaluator, Evaluator::ProblemSolutionBenefits);
    EXPECT_EQ(vs[4].evaluator, Evaluator::ProblemSolutionChallenge);
    for (const auto& v : vs) EXPECT_EQ(v.related, v.probability >= 0.5);
}

TEST(Evaluate, ErrorNamesConcept) {
    const auto m_owner = make_mock();
    auto& m = *m_owner;
    try {
        evaluate_concepts({make_concept("zz-9", Type1Spec{{"Fans"}})}, m, {"missing", "", ""});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("zz-9"), std::string::npos);
    }
}

TEST(PassRates, FortyOfFiftyTypeOne) {
    std::vector<GeneratedConcept> cs;
    std::vector<RelevancyVerdict> vs;
    for (int i = 0; i < 50; ++i) {
        cs.push_back(make_concept("t1-" + std::to_string(i), Type1Spec{{"Flying car"}}));
        vs.push_back(verdict(cs.back().id, Evaluator::NatureSolution, i < 40));
    }
    const auto table = pass_rate_table(cs, vs);
    ASSERT_EQ(table.rows.size(), 1u);
    const auto* row = table.row(1);
    ASSERT_NE(row, nullptr);
    EXPECT_DOUBLE_EQ(row->nature_solution_rate(), 0.8);
    EXPECT_DOUBLE_EQ(row->overall_rate(), 0.8);
    EXPECT_FALSE(row->problem_solution_rate().has_value());
    EXPECT_EQ(table.row(2), nullptr);
}

TEST(PassRates, OverallIsConjunction) {
    const auto spec = Type2Spec{{"Lightweight"}, {"Flying car"}};
    const std::vector<GeneratedConcept> cs = {make_concept("x", spec), make_concept("y", spec)};
    const std::vector<RelevancyVerdict> vs = {
        verdict("x", Evaluator::NatureSolution, true), verdict("x", Evaluator::ProblemSolutionBenefits, true),
        verdict("y", Evaluator::NatureSolution, true), verdict("y", Evaluator::ProblemSolutionBenefits, false)};
    const auto table = pass_rate_table(cs, vs);
    const auto* row = table.row(2);
    ASSERT_NE(row, nullptr);
    EXPECT_DOUBLE_EQ(row->nature_solution_rate(), 1.0);
    EXPECT_DOUBLE_EQ(*row->problem_solution_rate(), 0.5);
    EXPECT_DOUBLE_EQ(row->overall_rate(), 0.5);
}

TEST(PassRates, MissingVerdictNamesConceptAndEvaluator) {
    const std::vector<GeneratedConcept> cs = {make_concept("q", Type3Spec{"Heat."})};
    try {
        pass_rate_table(cs, {verdict("q", Evaluator::NatureSolution, true)});
        FAIL();
    } catch (const MissingVerdict& e) {
        EXPECT_EQ(e.concept_id(), "q");
        EXPECT_EQ(e.evaluator(), Evaluator::ProblemSolutionChallenge);
    }
}

TEST(PassRates, OverallNeverExceedsAnyEvaluator) {
    SeededRng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<GeneratedConcept> cs;
        std::vector<RelevancyVerdict> vs;
        for (int i = 0; i < 30; ++i) {
            const auto id = "c" + std::to_string(i);
            const int type = 1 + static_cast<int>(rng.below(3));
            ProblemSpec spec = type == 1 ? ProblemSpec(Type1Spec{{"a"}})
                                         : type == 2 ? ProblemSpec(Type2Spec{{"b"}, {"a"}}) : ProblemSpec(Type3Spec{"c"});
            cs.push_back(make_concept(id, spec));
            auto p = rng.unit();
            vs.push_back({id, Evaluator::NatureSolution, p, p >= 0.5});
            if (type != 1) {
                p = rng.unit();
                vs.push_back({id, type == 2 ? Evaluator::ProblemSolutionBenefits : Evaluator::ProblemSolutionChallenge, p,
                              p >= 0.5});
            }
        }
        for (const auto& row : pass_rate_table(cs, vs).rows) {
            EXPECT_LE(row.overall_rate(), row.nature_solution_rate());
            if (row.problem_solution_rate()) {
                EXPECT_LE(row.overall_rate(), *row.problem_solution_rate());
            }
            EXPECT_EQ(row.problem_solution_pass.has_value(), row.generator_type != 1);
        }
    }
}

TEST(PassRates, CsvAndTextMarkTypeOneAsNotApplicable) {
    const std::vector<GeneratedConcept> cs = {make_concept("a", Type1Spec{{"x"}}), make_concept("b", Type3Spec{"y"})};
    const std::vector<RelevancyVerdict> vs = {verdict("a", Evaluator::NatureSolution, true),
                                              verdict("b", Evaluator::NatureSolution, true),
                                              verdict("b", Evaluator::ProblemSolutionChallenge, false)};
    const auto table = pass_rate_table(cs, vs);
    const auto csv = pass_rate_csv(table);
    EXPECT_NE(csv.find("\n1,1,1,1.000000,,,1,1.000000\n"), std::string::npos) << csv;
    EXPECT_NE(pass_rate_text(table).find("N/A"), std::string::npos);
}

TEST(Histogram, BinsCoverUnitInterval) {
    const auto h = probability_histogram({0.0, 0.049, 0.05, 0.5, 0.999, 1.0});
    EXPECT_EQ(h[0], 2u);
    EXPECT_EQ(h[1], 1u);
    EXPECT_EQ(h[10], 1u);
    EXPECT_EQ(h[19], 2u);
    EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), 6u);
}

TEST(Histogram, CsvGroupsByEvaluatorAndType) {
    const std::vector<GeneratedConcept> cs = {make_concept("a", Type1Spec{{"x"}}), make_concept("b", Type2Spec{{"y"}, {"x"}})};
    const std::vector<RelevancyVerdict> vs = {verdict("a", Evaluator::NatureSolution, true),
                                              verdict("b", Evaluator::NatureSolution, false),
                                              verdict("b", Evaluator::ProblemSolutionBenefits, true)};
    const auto csv = histogram_csv(cs, vs);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 20);
}

TEST(VerdictCsv, RoundTripAndThresholdCheck) {
    const std::vector<RelevancyVerdict> vs = {{"a", Evaluator::NatureSolution, 0.5, true},
                                              {"b", Evaluator::ProblemSolutionChallenge, 0.26894142136999510, false}};
    EXPECT_EQ(parse_verdicts_csv(verdicts_csv(vs)), vs);
    EXPECT_THROW(parse_verdicts_csv("concept_id,evaluator,probability,related\na," +
                                    std::string(evaluator_name(Evaluator::NatureSolution)) + ",0.4,true\n"),
                 ParseError);
}

TEST(Threshold, ThousandSyntheticOutputs) {
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        const auto c = classification_from_probability(p);
        ASSERT_EQ(c.label == Label::Related, p >= 0.5) << p;
    }
}
