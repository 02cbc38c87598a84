#include "bidforge/concept.hpp"
#include "bidforge/datagen.hpp"
#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/mock_backend.hpp"
#include "bidforge/text.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace bidforge;
using bidforge::testing::scratch_dir;
using bidforge::testing::synthetic_corpus;

namespace {

ErrorKind kind_of_failure(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::Usage;
}

NegativeMap mock_negatives(const Corpus& corpus, std::uint64_t seed) {
    auto shared = std::make_shared<const Corpus>(corpus);
    MockBackend backend(shared, {.seed = seed});
    backend.register_model("mock-random_inno", ModelKind::RandomInno);
    return build_negative_samples(corpus, backend, "mock-random_inno");
}

std::size_t count_label(const std::vector<FineTuneExample>& xs, Label label) {
    return static_cast<std::size_t>(std::count_if(xs.begin(), xs.end(), [&](const auto& x) { return x.label == label; }));
}

}  // namespace

TEST(Markers, WrapExamples) {
    EXPECT_EQ(wrap_markers("Octopus tentacles have suckers", MarkerTag::Bio), "[Bio]Octopus tentacles have suckers[Bio]");
    EXPECT_EQ(wrap_markers("x", MarkerTag::Cha), "[Cha]x[Cha]");
    EXPECT_EQ(kind_of_failure([] { wrap_markers("", MarkerTag::Inno); }), ErrorKind::EmptyText);
    EXPECT_EQ(kind_of_failure([] { wrap_markers("a [Ben] b", MarkerTag::Inno); }), ErrorKind::MarkerInText);
}

TEST(Markers, RandomStringsRoundTrip) {
    SeededRng rng(17);
    const std::string alphabet = "abcBIONnoe[]Cha \n\t,.;\"'";
    const std::array<MarkerTag, 4> tags = {MarkerTag::Bio, MarkerTag::Inno, MarkerTag::Ben, MarkerTag::Cha};
    int checked = 0;
    while (checked < 1000) {
        std::string s(1 + rng.below(40), ' ');
        for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
        if (contains_marker(s)) continue;
        const auto tag = tags[rng.below(4)];
        ASSERT_EQ(parse_markers(wrap_markers(s, tag), tag), s);
        ++checked;
    }
}

TEST(Markers, ParseRejectsWrongTag) {
    EXPECT_THROW(parse_markers("[Bio]x[Bio]", MarkerTag::Inno), ParseError);
    EXPECT_THROW(parse_markers("[Bio]x", MarkerTag::Bio), ParseError);
}

TEST(Markers, SegmentsOfAnEvaluatorPrompt) {
    const auto segs = parse_marked_segments("[Cha]hot[Cha][Inno]fins[Inno]\n\n###\n\n");
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_EQ(segs[0].tag, MarkerTag::Cha);
    EXPECT_EQ(segs[1].text, "fins");
    EXPECT_THROW(parse_marked_segments("[Cha]open"), ParseError);
}

TEST(Templates, BitExactForms) {
    EXPECT_EQ(application_prompt({"Flying car"}), "Application: Flying car\n\n###\n\n");
    EXPECT_EQ(benefits_application_prompt({"Lightweight"}, {"Flying car"}),
              "Benefits: Lightweight\nApplication: Flying car\n\n###\n\n");
    EXPECT_EQ(challenge_prompt("Heat."), "Challenge: Heat.\n\n###\n\n");
    EXPECT_EQ(concept_completion("A", "B"), " Biomimicry: A\n\nInnovation: B\n[END]");
    EXPECT_EQ(innovation_completion("B"), " Innovation: B\n[END]");
    EXPECT_EQ(label_completion(Label::Related), " related\n[END]");
    EXPECT_EQ(label_completion(Label::Unrelated), " unrelated\n[END]");
}

TEST(Templates, RenderedCompletionParsesBackExactly) {
    for (const auto& record : synthetic_corpus(221, 3).records) {
        const auto parsed = parse_completion(render_completion(record));
        ASSERT_EQ(parsed.biomimicry, record.biomimicry);
        ASSERT_EQ(parsed.innovation, record.innovation);
    }
}

TEST(Templates, ExtractInnovation) {
    EXPECT_EQ(extract_innovation(" Innovation: A wing.\n[END]"), "A wing.");
    EXPECT_EQ(extract_innovation(" A wing."), "A wing.");
    EXPECT_EQ(kind_of_failure([] { extract_innovation(" Innovation:\n[END]"); }), ErrorKind::EmptyCompletion);
}

TEST(GeneratorDataset, Gen1FlyingCarPrompt) {
    Corpus c = synthetic_corpus(1, 1);
    c.records[0].applications = {"Flying car"};
    const auto build = build_generator_dataset(c, ModelKind::Gen1);
    ASSERT_EQ(build.examples.size(), 1u);
    EXPECT_EQ(build.examples[0].prompt, "Application: Flying car\n\n###\n\n");
    EXPECT_FALSE(build.examples[0].label.has_value());
}

TEST(GeneratorDataset, Gen3SkipsRecordWithoutChallenge) {
    Corpus c = synthetic_corpus(3, 1);
    c.records[1].challenge.clear();
    const auto build = build_generator_dataset(c, ModelKind::Gen3);
    EXPECT_EQ(build.examples.size(), 2u);
    EXPECT_EQ(build.skipped_ids, std::vector<std::string>{"rec-002"});
}

TEST(GeneratorDataset, Gen2OnFullCorpus) {
    const auto build = build_generator_dataset(synthetic_corpus(221, 2), ModelKind::Gen2);
    ASSERT_EQ(build.examples.size(), 221u);
    for (const auto& x : build.examples) {
        EXPECT_NE(x.prompt.find("Benefits: "), std::string::npos);
        EXPECT_NE(x.prompt.find("\nApplication: "), std::string::npos);
    }
}

TEST(GeneratorDataset, ExampleInvariants) {
    const auto corpus = synthetic_corpus(30, 4);
    for (auto kind : {ModelKind::Gen1, ModelKind::Gen2, ModelKind::Gen3, ModelKind::RandomInno}) {
        for (const auto& x : build_generator_dataset(corpus, kind).examples) {
            EXPECT_TRUE(x.prompt.ends_with(kPromptSeparator));
            EXPECT_TRUE(x.completion.starts_with(" "));
            EXPECT_FALSE(x.completion.starts_with("  "));
            EXPECT_TRUE(x.completion.ends_with(kStopMarker));
        }
    }
}

TEST(GeneratorDataset, RandomInnoCompletionHasInnovationOnly) {
    const auto corpus = synthetic_corpus(1, 1);
    const auto build = build_generator_dataset(corpus, ModelKind::RandomInno);
    EXPECT_EQ(build.examples[0].completion, " Innovation: " + corpus.records[0].innovation + "\n[END]");
}

TEST(GeneratorDataset, ReservedTextAndEmptyDataset) {
    Corpus c = synthetic_corpus(2, 1);
    c.records[0].biomimicry += " Innovation: trick";
    EXPECT_EQ(kind_of_failure([&] { build_generator_dataset(c, ModelKind::Gen1); }), ErrorKind::ReservedText);
    Corpus none = synthetic_corpus(2, 1);
    for (auto& r : none.records) r.challenge.clear();
    EXPECT_EQ(kind_of_failure([&] { build_generator_dataset(none, ModelKind::Gen3); }), ErrorKind::EmptyDataset);
}

TEST(Negatives, OnePerRecordAndDeterministic) {
    const auto corpus = synthetic_corpus(221, 8);
    const auto a = mock_negatives(corpus, 3);
    EXPECT_EQ(a.size(), 221u);
    EXPECT_EQ(a, mock_negatives(corpus, 3));
    for (const auto& [id, text] : a) EXPECT_FALSE(text.empty()) << id;
}

TEST(Negatives, EmptyCorpusGivesEmptyMap) {
    EXPECT_TRUE(mock_negatives(Corpus{}, 1).empty());
}

TEST(EvaluatorDataset, FullCorpusCounts) {
    const auto corpus = synthetic_corpus(221, 8);
    const auto negatives = mock_negatives(corpus, 3);
    for (auto kind : {ModelKind::EvalBio, ModelKind::EvalBen, ModelKind::EvalCha}) {
        const auto build = build_evaluator_dataset(corpus, negatives, kind);
        ASSERT_EQ(build.examples.size(), 442u);
        EXPECT_EQ(count_label(build.examples, Label::Related), 221u);
        for (std::size_t i = 0; i < build.examples.size(); i += 2) {
            EXPECT_EQ(build.examples[i].source_record_id, build.examples[i + 1].source_record_id);
            EXPECT_EQ(build.examples[i].label, Label::Related);
            EXPECT_EQ(build.examples[i + 1].label, Label::Unrelated);
        }
    }
}

TEST(EvaluatorDataset, BenefitsFollowInnovation) {
    const auto corpus = synthetic_corpus(1, 2);
    const auto& r = corpus.records[0];
    const auto build = build_evaluator_dataset(corpus, {{r.id, "A random drone."}}, ModelKind::EvalBen);
    EXPECT_EQ(build.examples[0].prompt,
              "[Inno]" + r.innovation + "[Inno][Ben]" + join(r.benefits, ", ") + "[Ben]\n\n###\n\n");
    EXPECT_EQ(build.examples[1].prompt,
              "[Inno]A random drone.[Inno][Ben]" + join(r.benefits, ", ") + "[Ben]\n\n###\n\n");
}

TEST(EvaluatorDataset, OrderingForBioAndCha) {
    const auto corpus = synthetic_corpus(1, 2);
    const auto& r = corpus.records[0];
    const NegativeMap neg = {{r.id, "N"}};
    EXPECT_EQ(build_evaluator_dataset(corpus, neg, ModelKind::EvalBio).examples[0].prompt,
              "[Bio]" + r.biomimicry + "[Bio][Inno]" + r.innovation + "[Inno]\n\n###\n\n");
    EXPECT_EQ(build_evaluator_dataset(corpus, neg, ModelKind::EvalCha).examples[1].prompt,
              "[Cha]" + r.challenge + "[Cha][Inno]N[Inno]\n\n###\n\n");
}

TEST(EvaluatorDataset, IdenticalNegativeIsNotDeduplicated) {
    const auto corpus = synthetic_corpus(1, 2);
    const auto& r = corpus.records[0];
    const auto build = build_evaluator_dataset(corpus, {{r.id, r.innovation}}, ModelKind::EvalBio);
    ASSERT_EQ(build.examples.size(), 2u);
    EXPECT_EQ(build.examples[0].prompt, build.examples[1].prompt);
    EXPECT_NE(build.examples[0].completion, build.examples[1].completion);
}

TEST(EvaluatorDataset, MissingNegative) {
    EXPECT_EQ(kind_of_failure([] { build_evaluator_dataset(synthetic_corpus(2, 1), {}, ModelKind::EvalBio); }),
              ErrorKind::MissingNegative);
}

TEST(Split, BalancedEvaluatorDataset) {
    const auto corpus = synthetic_corpus(221, 8);
    const auto build = build_evaluator_dataset(corpus, mock_negatives(corpus, 1), ModelKind::EvalCha);
    const auto parts = split(build.examples, {{4, 5}, 11});
    EXPECT_EQ(parts.train.size(), 354u);
    EXPECT_EQ(parts.validation.size(), 88u);
    EXPECT_EQ(count_label(parts.train, Label::Related), 177u);
    EXPECT_EQ(count_label(parts.validation, Label::Related), 44u);

    // Enumerate the arithmetic: every stratum of size s gets round-half-up(0.8 s).
    for (std::int64_t s = 1; s <= 300; ++s) {
        const auto expected = static_cast<std::int64_t>(std::floor(0.8 * static_cast<double>(s) + 0.5 + 1e-12));
        std::vector<FineTuneExample> xs(static_cast<std::size_t>(s), FineTuneExample{"p", " c\n[END]", Label::Related, ""});
        EXPECT_EQ(static_cast<std::int64_t>(split(xs, {{4, 5}, 0}).train.size()), expected) << s;
    }
}

TEST(Split, PartitionIsAPermutationAndSeedStable) {
    std::vector<FineTuneExample> xs;
    for (int i = 0; i < 57; ++i) xs.push_back({"p" + std::to_string(i), " c\n[END]", std::nullopt, ""});
    const auto a = split(xs, {{4, 5}, 99});
    const auto b = split(xs, {{4, 5}, 99});
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.validation, b.validation);
    std::multiset<std::string> seen;
    for (const auto& x : a.train) seen.insert(x.prompt);
    for (const auto& x : a.validation) seen.insert(x.prompt);
    EXPECT_EQ(seen.size(), 57u);
    EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), 57u);
    EXPECT_NE(a.train, split(xs, {{4, 5}, 100}).train);
}

TEST(Split, SingleExampleGoesToTrain) {
    const std::vector<FineTuneExample> one = {{"p", " c\n[END]", std::nullopt, ""}};
    const auto parts = split(one, {});
    EXPECT_EQ(parts.train.size(), 1u);
    EXPECT_TRUE(parts.validation.empty());
}

TEST(Split, RejectsBadFractionAndEmptyInput) {
    const std::vector<FineTuneExample> one = {{"p", " c\n[END]", std::nullopt, ""}};
    EXPECT_EQ(kind_of_failure([&] { split(one, SplitConfig{{1, 1}, 0}); }), ErrorKind::Precondition);
    EXPECT_EQ(kind_of_failure([&] { split(one, SplitConfig{{0, 5}, 0}); }), ErrorKind::Precondition);
    EXPECT_EQ(kind_of_failure([&] { split(std::vector<FineTuneExample>{}, SplitConfig{}); }), ErrorKind::Precondition);
}

TEST(BatchSize, Rule) {
    EXPECT_EQ(batch_size_rule(221), 1u);
    EXPECT_EQ(batch_size_rule(354), 1u);
    EXPECT_EQ(batch_size_rule(1000), 2u);
    EXPECT_EQ(batch_size_rule(1), 1u);
    EXPECT_EQ(batch_size_rule(1250), 3u);
}

TEST(Jsonl, ExportImport) {
    const auto dir = scratch_dir("jsonl");
    const auto corpus = synthetic_corpus(221, 8);
    const auto build = build_evaluator_dataset(corpus, mock_negatives(corpus, 1), ModelKind::EvalBio);
    EXPECT_EQ(export_jsonl(build.examples, dir / "eval.jsonl"), 442u);
    const auto text = read_file(dir / "eval.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 442);
    const auto back = import_jsonl(dir / "eval.jsonl");
    ASSERT_EQ(back.size(), 442u);
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].prompt, build.examples[i].prompt);
        EXPECT_EQ(back[i].completion, build.examples[i].completion);
        EXPECT_EQ(back[i].label, build.examples[i].label);
    }

    EXPECT_EQ(export_jsonl({}, dir / "empty.jsonl"), 0u);
    EXPECT_TRUE(read_file(dir / "empty.jsonl").empty());
}

TEST(Jsonl, BadLineReportsNumber) {
    try {
        parse_jsonl("{\"prompt\":\"a\",\"completion\":\"b\"}\n{\"prompt\":1}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ModelKinds, SevenNamedKinds) {
    std::set<std::string> names;
    for (auto kind : kAllModelKinds) {
        names.insert(std::string(model_kind_name(kind)));
        EXPECT_EQ(parse_model_kind(model_kind_name(kind)), kind);
    }
    EXPECT_EQ(names.size(), 7u);
    EXPECT_FALSE(parse_model_kind("gen4").has_value());
}
