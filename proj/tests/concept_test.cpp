#include "bidforge/concept.hpp"
#include "bidforge/error.hpp"
#include "bidforge/mock_backend.hpp"
#include "bidforge/text.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace bidforge;
using bidforge::testing::data_dir;
using bidforge::testing::scratch_dir;
using bidforge::testing::synthetic_corpus;

namespace {

std::unique_ptr<MockBackend> make_mock(std::uint64_t seed, unsigned malformed = 0) {
    auto m = std::make_unique<MockBackend>(std::make_shared<const Corpus>(synthetic_corpus(40, 6)),
                                           MockOptions{.seed = seed, .malformed_permille = malformed});
    for (auto kind : kAllModelKinds) m->register_model("mock-" + std::string(model_kind_name(kind)), kind);
    return m;
}

GenerationParams params_for(const ProblemSpec& spec) {
    GenerationParams p;
    p.model = "mock-" + std::string(model_kind_name(generator_kind(spec)));
    p.created_at = "2023-01-01T00:00:00Z";
    return p;
}

const Lexicon& lexicon() {
    static const Lexicon lex = load_lexicon(data_dir() / "lexicon.txt");
    return lex;
}

}  // namespace

TEST(ParseCompletion, TemplateInverse) {
    const auto p = parse_completion(" Biomimicry: A\n\nInnovation: B\n[END]");
    EXPECT_EQ(p.biomimicry, "A");
    EXPECT_EQ(p.innovation, "B");
}

TEST(ParseCompletion, MissingAndOutOfOrderSections) {
    try {
        parse_completion("Innovation: B");
        FAIL();
    } catch (const MissingSection& e) {
        EXPECT_EQ(e.which(), Section::Biomimicry);
    }
    try {
        parse_completion(" Biomimicry: A\n\nInnovation:   \n[END]");
        FAIL();
    } catch (const MissingSection& e) {
        EXPECT_EQ(e.which(), Section::Innovation);
    }
    try {
        parse_completion("Innovation: B\nBiomimicry: A");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfOrder);
    }
}

TEST(ParseCompletion, RenderedRecordsRoundTrip) {
    for (const auto& r : synthetic_corpus(221, 12).records) {
        const auto p = parse_completion(render_completion(r));
        ASSERT_EQ(p.biomimicry, r.biomimicry);
        ASSERT_EQ(p.innovation, r.innovation);
    }
}

TEST(Spec, PromptsAndValidation) {
    EXPECT_EQ(render_prompt(Type1Spec{{"Flying car"}}), "Application: Flying car\n\n###\n\n");
    EXPECT_EQ(generator_type(Type3Spec{"x"}), 3);
    EXPECT_EQ(generator_kind(Type2Spec{{"a"}, {"b"}}), ModelKind::Gen2);
    EXPECT_THROW(validate_spec(Type1Spec{{}}), Error);
    EXPECT_THROW(validate_spec(Type2Spec{{"Lightweight"}, {" "}}), Error);
    EXPECT_THROW(validate_spec(Type3Spec{"  "}), Error);
}

TEST(Generate, FiftyFlyingCarConcepts) {
    auto backend = make_mock(7);
    const ProblemSpec spec = Type1Spec{{"Flying car"}};
    const auto result = generate_concepts(spec, 50, *backend, params_for(spec));
    ASSERT_EQ(result.concepts.size(), 50u);
    std::set<std::string> ids;
    for (const auto& c : result.concepts) {
        EXPECT_FALSE(c.biomimicry.empty());
        EXPECT_FALSE(c.innovation.empty());
        EXPECT_EQ(c.spec, spec);
        const auto again = parse_completion(c.raw_completion);
        EXPECT_EQ(again.biomimicry, c.biomimicry);
        EXPECT_EQ(again.innovation, c.innovation);
        ids.insert(c.id);
    }
    EXPECT_EQ(ids.size(), 50u);
    EXPECT_EQ(result.concepts.front().id, "concept-0001");
}

TEST(Generate, ZeroIsPrecondition) {
    auto backend = make_mock(7);
    const ProblemSpec spec = Type1Spec{{"Flying car"}};
    try {
        generate_concepts(spec, 0, *backend, params_for(spec));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Precondition);
    }
}

TEST(Generate, SameSeedSameConcepts) {
    const ProblemSpec spec = Type3Spec{"Lightweight design is a challenge for flying cars."};
    auto a = make_mock(11);
    auto b = make_mock(11);
    EXPECT_EQ(generate_concepts(spec, 10, *a, params_for(spec)).concepts,
              generate_concepts(spec, 10, *b, params_for(spec)).concepts);
}

TEST(Generate, RejectsAreRetriedWithinBudget) {
    auto backend = make_mock(4, 300);
    const ProblemSpec spec = Type2Spec{{"Lightweight"}, {"Flying car"}};
    auto p = params_for(spec);
    p.budget = 200;
    const auto result = generate_concepts(spec, 20, *backend, p);
    EXPECT_EQ(result.concepts.size(), 20u);
    EXPECT_FALSE(result.rejects.empty());
    EXPECT_EQ(result.attempts, 20u + result.rejects.size());
    for (const auto& r : result.rejects) EXPECT_EQ(r.raw_completion.find("Innovation:"), std::string::npos);
}

TEST(Generate, BudgetExhaustedKeepsPartialResult) {
    auto backend = make_mock(4, 1000);
    const ProblemSpec spec = Type1Spec{{"Robotics"}};
    try {
        generate_concepts(spec, 5, *backend, params_for(spec));
        FAIL();
    } catch (const BudgetExhausted& e) {
        EXPECT_EQ(e.requested(), 5u);
        EXPECT_EQ(e.obtained(), 0u);
        EXPECT_EQ(e.partial().attempts, 10u);
        EXPECT_EQ(e.partial().rejects.size(), 10u);
    }
}

TEST(Lexicon, CaseStudyAnalogies) {
    EXPECT_EQ(categorize_text("Pterosaurs had membrane wings stretched over a long finger.", lexicon()),
              SourceCategory::Reptile);
    EXPECT_EQ(categorize_text("Hummingbirds are lightweight and hover with ease.", lexicon()), SourceCategory::Bird);
    EXPECT_EQ(categorize_text("Carbon fibre is stiff.", lexicon()), SourceCategory::Other);
}

TEST(Lexicon, LongestMatchWholeWordAndTies) {
    const auto lex = parse_lexicon("bird: bird\ninsect: fruit fly, fly\nmammal: cat\n");
    EXPECT_EQ(categorize_text("A fruit fly and a bird", lex), SourceCategory::Bird);
    EXPECT_EQ(categorize_text("A fly, a fruit fly and a bird", lex), SourceCategory::Insect);
    EXPECT_EQ(categorize_text("the category of catalysts", lex), SourceCategory::Other);
    EXPECT_THROW(parse_lexicon("dragon: wyrm\n"), ParseError);
    EXPECT_THROW(parse_lexicon("no colon here\n"), ParseError);
}

TEST(Store, RoundTripAndRejects) {
    const auto dir = scratch_dir("store");
    auto backend = make_mock(2);
    const ProblemSpec spec = Type2Spec{{"Lightweight"}, {"Flying car"}};
    auto concepts = generate_concepts(spec, 5, *backend, params_for(spec)).concepts;
    concepts[0].source_category = SourceCategory::Fish;
    write_concept_store(dir / "c.jsonl", concepts);
    EXPECT_EQ(read_concept_store(dir / "c.jsonl"), concepts);

    write_file(dir / "bad.jsonl", concept_to_json_line(concepts[0]) + "\n{\"id\":\"x\"}\n");
    try {
        read_concept_store(dir / "bad.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
