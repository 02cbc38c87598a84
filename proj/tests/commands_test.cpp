#include "bidforge/commands.hpp"
#include "bidforge/error.hpp"
#include "bidforge/text.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>

using namespace bidforge;
using bidforge::testing::fixture_vocabulary;
using bidforge::testing::mock_config_text;
using bidforge::testing::scratch_dir;
using bidforge::testing::synthetic_corpus;
using bidforge::testing::synthetic_embeddings;

namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path root;
    PipelineConfig config;
    std::shared_ptr<const Corpus> corpus;
};

// Corpus, embeddings and a mock config written under a fresh directory.
Workspace workspace(const std::string& name, const Corpus& corpus, bool with_embeddings = true,
                    std::uint64_t seed = 11) {
    Workspace w;
    w.root = scratch_dir(name);
    save_corpus(corpus, w.root / "corpus.json", CorpusFormat::Json);
    fs::path embeddings;
    if (with_embeddings) {
        embeddings = w.root / "vectors.txt";
        write_file(embeddings, embeddings_to_text(synthetic_embeddings(fixture_vocabulary(), 8, 5)));
    }
    write_file(w.root / "run.conf", mock_config_text(w.root / "corpus.json", embeddings, w.root / "out", seed));
    w.config = load_config(w.root / "run.conf");
    w.corpus = std::make_shared<const Corpus>(load_config_corpus(w.config));
    return w;
}

std::string file_or_empty(const fs::path& p) {
    return fs::exists(p) ? read_file(p) : std::string{};
}

int run_cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(BIDFORGE_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, MockRunWritesManifestAndOutputs) {
    auto w = workspace("pipe-basic", synthetic_corpus(20, 3));
    auto backend = make_backend(w.config, w.corpus);
    PipelineRequest request;
    request.n = 5;
    const auto report = cmd_pipeline(w.config, *w.corpus, *backend, request);

    ASSERT_TRUE(report.pass_rates);
    ASSERT_TRUE(report.diversity);
    EXPECT_EQ(report.diversity->generated_count(), 15u);
    EXPECT_EQ(report.diversity->baseline_count(), 19u);

    const auto manifest = parse_manifest(read_file(report.manifest_path));
    ASSERT_EQ(manifest.stages.size(), 3u);
    std::size_t files = 0;
    for (const auto& stage : manifest.stages) {
        EXPECT_EQ(stage.status, "ok") << stage.name;
        for (const auto& p : stage.outputs) EXPECT_TRUE(fs::exists(w.config.output_dir / p)) << p;
        files += stage.outputs.size();
    }
    EXPECT_GE(files, 5u);
    EXPECT_EQ(manifest.seed, 11u);
    EXPECT_EQ(manifest.config_hash, config_hash(w.config));

    const auto store = read_concept_store(w.config.output_dir / "concepts.jsonl");
    ASSERT_EQ(store.size(), 15u);
    EXPECT_EQ(store.front().id, "t1-0001");
    EXPECT_EQ(store.back().id, "t3-0005");
    EXPECT_EQ(store.front().created_at, "2023-01-01T00:00:00Z");
}

TEST(Pipeline, MissingEmbeddingsFailsOnlyTheWmdStage) {
    auto w = workspace("pipe-noemb", synthetic_corpus(10, 4), false);
    auto backend = make_backend(w.config, w.corpus);
    PipelineRequest request;
    request.n = 3;
    try {
        cmd_pipeline(w.config, *w.corpus, *backend, request);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
    const auto manifest = parse_manifest(read_file(w.config.output_dir / "manifest.json"));
    ASSERT_EQ(manifest.stages.size(), 3u);
    EXPECT_EQ(manifest.stages[0].status, "ok");
    EXPECT_EQ(manifest.stages[1].status, "ok");
    EXPECT_EQ(manifest.stages[2].status, "failed");
    EXPECT_TRUE(manifest.stages[2].error.starts_with("ConfigError: ")) << manifest.stages[2].error;
    EXPECT_TRUE(fs::exists(w.config.output_dir / "verdicts.csv"));
}

TEST(Pipeline, SameSeedSameBytesAndResumeReuses) {
    const auto corpus = synthetic_corpus(20, 8);
    auto a = workspace("pipe-twice", corpus);
    auto b = a;
    set_output_dir(b.config, a.root / "second");
    PipelineRequest request;
    request.n = 4;
    request.sample_ids = {corpus.records[2].id, corpus.records[7].id};
    auto ba = make_backend(a.config, a.corpus);
    auto bb = make_backend(b.config, b.corpus);
    const auto ra = cmd_pipeline(a.config, *a.corpus, *ba, request);
    const auto rb = cmd_pipeline(b.config, *b.corpus, *bb, request);

    EXPECT_EQ(ra.manifest.run_id, rb.manifest.run_id);
    ASSERT_EQ(ra.manifest.stages.size(), rb.manifest.stages.size());
    for (std::size_t s = 0; s < ra.manifest.stages.size(); ++s) {
        EXPECT_EQ(ra.manifest.stages[s].outputs, rb.manifest.stages[s].outputs);
        for (const auto& p : ra.manifest.stages[s].outputs)
            EXPECT_EQ(read_file(a.config.output_dir / p), read_file(b.config.output_dir / p)) << p;
    }
    EXPECT_EQ(ra.diversity->generated_count(), 2u * 3u * 4u);
    EXPECT_EQ(ra.diversity->baseline_count(), 2u * 19u);

    // Resuming an identical run reuses every stage; a different seed reuses none.
    request.resume = true;
    const auto again = cmd_pipeline(a.config, *a.corpus, *ba, request);
    for (const auto& stage : again.manifest.stages) EXPECT_EQ(stage.status, "reused") << stage.name;
    auto reseeded = a.config;
    set_seed(reseeded, 12);
    auto br = make_backend(reseeded, a.corpus);
    const auto fresh = cmd_pipeline(reseeded, *a.corpus, *br, request);
    for (const auto& stage : fresh.manifest.stages) EXPECT_EQ(stage.status, "ok") << stage.name;
}

TEST(Pipeline, SampleWithoutChallengeIsPrecondition) {
    auto corpus = synthetic_corpus(5, 1);
    corpus.records[1].challenge.clear();
    auto w = workspace("pipe-nochal", corpus);
    auto backend = make_backend(w.config, w.corpus);
    PipelineRequest request;
    request.sample_ids = {corpus.records[1].id};
    try {
        cmd_pipeline(w.config, *w.corpus, *backend, request);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Precondition);
        EXPECT_NE(std::string(e.what()).find("Type-3"), std::string::npos);
    }
}

TEST(BuildDatasets, FullCorpusSplitsAndIsReproducible) {
    auto w = workspace("build-full", synthetic_corpus(221, 2));
    auto backend = make_backend(w.config, w.corpus);
    const auto report = cmd_build_datasets(w.config, *w.corpus, *backend);
    ASSERT_TRUE(report.all_ok());
    ASSERT_EQ(report.outcomes.size(), 7u);
    for (const auto& o : report.outcomes) {
        if (o.kind == ModelKind::EvalBio) {
            EXPECT_EQ(o.examples, 442u);
            EXPECT_EQ(o.train, 354u);
            EXPECT_EQ(o.validation, 88u);
            EXPECT_EQ(o.batch_size, 1u);
        }
        if (o.kind == ModelKind::Gen1) {
            EXPECT_EQ(o.examples, 221u);
        }
    }
    const auto dir = w.config.output_dir / "datasets";
    const auto first = read_file(dir / "eval_bio.train.jsonl");
    const auto negatives = read_file(dir / "negatives.json");
    EXPECT_EQ(nlohmann::json::parse(negatives).size(), 221u);

    auto again = make_backend(w.config, w.corpus);
    cmd_build_datasets(w.config, *w.corpus, *again);
    EXPECT_EQ(read_file(dir / "eval_bio.train.jsonl"), first);
    EXPECT_EQ(read_file(dir / "negatives.json"), negatives);
}

TEST(BuildDatasets, NoChallengesFailsOnlyChallengeKinds) {
    auto corpus = synthetic_corpus(12, 6);
    for (auto& r : corpus.records) r.challenge.clear();
    auto w = workspace("build-nochal", corpus);
    auto backend = make_backend(w.config, w.corpus);
    const auto report = cmd_build_datasets(w.config, *w.corpus, *backend);
    EXPECT_FALSE(report.all_ok());
    for (const auto& o : report.outcomes) {
        const bool challenge_kind = o.kind == ModelKind::Gen3 || o.kind == ModelKind::EvalCha;
        EXPECT_EQ(o.status, challenge_kind ? "failed" : "ok") << model_kind_name(o.kind);
        if (challenge_kind) {
            EXPECT_TRUE(o.error.starts_with("EmptyDataset")) << o.error;
        }
    }
    const auto manifest = nlohmann::json::parse(read_file(report.manifest));
    EXPECT_EQ(manifest["datasets"].size(), 7u);
    EXPECT_EQ(manifest["train_fraction"], "4/5");
}

TEST(BuildDatasets, EvaluatorsSkippedWithoutRandomInno) {
    auto w = workspace("build-norandom", synthetic_corpus(10, 6));
    w.config.models.erase(ModelKind::RandomInno);
    auto backend = make_backend(w.config, w.corpus);
    const auto report = cmd_build_datasets(w.config, *w.corpus, *backend);
    for (const auto& o : report.outcomes) EXPECT_EQ(o.status, is_evaluator(o.kind) ? "skipped" : "ok");
}

TEST(Finetune, MockJobsSucceedAndEmitModelsConfig) {
    auto w = workspace("finetune", synthetic_corpus(30, 9));
    auto backend = make_backend(w.config, w.corpus);
    cmd_build_datasets(w.config, *w.corpus, *backend);
    const auto report = cmd_finetune(w.config, *backend, w.config.output_dir / "datasets");
    ASSERT_EQ(report.jobs.size(), 7u);
    for (const auto& [kind, job] : report.jobs) {
        EXPECT_EQ(job.status, JobStatus::Succeeded);
        EXPECT_EQ(job.per_epoch_validation_accuracy.size(), is_evaluator(kind) ? 4u : 0u);
    }
    const auto models = read_file(report.models_config);
    EXPECT_EQ(std::count(models.begin(), models.end(), '\n'), 7);
    EXPECT_NE(models.find("models.eval_cha = classifier:ft-eval_cha-"), std::string::npos);

    EXPECT_THROW(cmd_finetune(w.config, *backend, w.root / "nowhere"), Error);
}

TEST(Commands, IngestGenerateEvaluateWmdRatings) {
    const auto corpus = synthetic_corpus(15, 12);
    auto w = workspace("commands", corpus);
    auto backend = make_backend(w.config, w.corpus);

    const auto ingest = cmd_ingest(w.config, {}, w.root / "canonical.json");
    EXPECT_EQ(ingest.records, 15u);
    EXPECT_EQ(load_corpus(w.root / "canonical.json").records, corpus.records);

    const auto store = w.root / "t2.jsonl";
    const auto gen = cmd_generate(w.config, *backend, Type2Spec{{"Lightweight"}, {"Flying car"}}, 6, store);
    EXPECT_EQ(gen.obtained, 6u);
    EXPECT_TRUE(fs::exists(w.root / "t2.rejects.jsonl"));

    const auto eval = cmd_evaluate(w.config, *backend, store, w.root / "eval");
    ASSERT_EQ(eval.outputs.size(), 4u);
    ASSERT_EQ(eval.table.rows.size(), 1u);
    EXPECT_EQ(eval.table.rows[0].concepts, 6u);
    const auto verdicts = parse_verdicts_csv(read_file(w.root / "eval" / "verdicts.csv"));
    EXPECT_EQ(verdicts.size(), 12u);

    const auto concepts = read_concept_store(store);
    const auto wmd = cmd_wmd(w.config, concepts, {corpus.records[0]}, corpus.records, w.root / "div");
    EXPECT_EQ(wmd.report.generated_count(), 6u);
    EXPECT_EQ(wmd.report.baseline_count(), 14u);
    EXPECT_EQ(wmd.outputs.size(), 3u);
    // Two originals and a spec that matches neither.
    EXPECT_THROW(cmd_wmd(w.config, concepts, {corpus.records[0], corpus.records[1]}, corpus.records, w.root / "x"),
                 Error);

    std::string ratings = "concept_id,rater_id,feasibility,novelty\n";
    for (const auto& c : concepts) ratings += c.id + ",r1,4,2\n";
    write_file(w.root / "ratings.csv", ratings);
    const auto summary = cmd_ratings(w.root / "ratings.csv", store, w.root);
    ASSERT_EQ(summary.summary.types.size(), 1u);
    EXPECT_EQ(summary.summary.types[0].generator_type, 2);
    EXPECT_TRUE(fs::exists(w.root / "ratings_summary.json"));
}

TEST(Commands, GenerateKeepsPartialStoreOnBudgetExhaustion) {
    auto w = workspace("budget", synthetic_corpus(8, 2));
    w.config.mock_malformed_permille = 1000;
    w.config.budget = 4;
    auto backend = make_backend(w.config, w.corpus);
    const auto store = w.root / "t1.jsonl";
    EXPECT_THROW(cmd_generate(w.config, *backend, Type1Spec{{"Flying car"}}, 3, store), BudgetExhausted);
    EXPECT_TRUE(fs::exists(store));
    EXPECT_TRUE(read_concept_store(store).empty());
    const auto rejects = file_or_empty(w.root / "t1.rejects.jsonl");
    EXPECT_EQ(std::count(rejects.begin(), rejects.end(), '\n'), 4);
}

TEST(Cli, ExitCodesAndErrorLines) {
    auto w = workspace("cli", synthetic_corpus(10, 5));
    const auto err = w.root / "stderr.txt";

    EXPECT_EQ(run_cli("frobnicate", err), 2);
    EXPECT_TRUE(read_file(err).starts_with("UsageError: "));

    EXPECT_EQ(run_cli("--config " + (w.root / "missing.conf").string() + " build-datasets", err), 1);
    const auto line = read_file(err);
    EXPECT_TRUE(line.starts_with("ConfigError: ")) << line;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);

    const auto conf = "--config " + (w.root / "run.conf").string();
    EXPECT_EQ(run_cli(conf + " pipeline -n 2", err), 0) << read_file(err);
    EXPECT_TRUE(fs::exists(w.config.output_dir / "diversity" / "summary.json"));

    EXPECT_EQ(run_cli(conf + " pipeline --sample-ids nope", err), 1);
    EXPECT_TRUE(read_file(err).starts_with("PreconditionViolation: ")) << read_file(err);

    EXPECT_EQ(run_cli(conf + " generate --type 4", err), 2);
}
