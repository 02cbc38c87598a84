#include "bidforge/commands.hpp"

#include "bidforge/hash.hpp"
#include "bidforge/mock_backend.hpp"
#include "bidforge/remote_backend.hpp"
#include "bidforge/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

namespace bidforge {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---- shared plumbing -------------------------------------------------------

Corpus load_config_corpus(const PipelineConfig& config) {
    if (config.corpus_path.empty()) throw Error(ErrorKind::Config, "corpus.path is not configured");
    return config.corpus_format ? load_corpus(config.corpus_path, *config.corpus_format) : load_corpus(config.corpus_path);
}

StopwordSet load_config_stopwords(const PipelineConfig& config) {
    return config.stopwords_path.empty() ? default_stopwords() : load_stopwords(config.stopwords_path);
}

EmbeddingStore load_config_embeddings(const PipelineConfig& config, const std::vector<const std::string*>& texts) {
    if (config.embeddings_path.empty()) throw Error(ErrorKind::Config, "embeddings.path is not configured");
    std::unordered_set<std::string> vocabulary;
    for (const auto* text : texts) {
        for (auto& token : alpha_tokens(*text)) vocabulary.insert(std::move(token));
    }
    EmbeddingLoadOptions options;
    options.keep = &vocabulary;
    const auto format = config.embeddings_format.value_or(embedding_format_for(config.embeddings_path));
    return load_embeddings(config.embeddings_path, format, options);
}

std::unique_ptr<Backend> make_backend(const PipelineConfig& config, std::shared_ptr<const Corpus> corpus) {
    if (config.backend == BackendKind::Mock) {
        if (!corpus || corpus->empty()) throw Error(ErrorKind::Config, "the mock backend needs a non-empty corpus");
        MockOptions options;
        options.seed = config.seed;
        options.malformed_permille = config.mock_malformed_permille;
        options.finetune_delay = std::chrono::milliseconds(config.mock_finetune_delay_ms);
        options.in_flight = config.in_flight;
        auto backend = std::make_unique<MockBackend>(std::move(corpus), options);
        for (const auto& [kind, id] : config.models) backend->register_model(id, kind);
        return backend;
    }
    if (config.api_key.empty()) throw Error(ErrorKind::Config, "BIDFORGE_API_KEY is not set");
    RemoteOptions options;
    options.base_url = config.api_base_url;
    options.api_key = config.api_key;
    options.endpoints = config.endpoints;
    options.generator_base_model = config.generator_base;
    options.classifier_base_model = config.classifier_base;
    options.in_flight = config.in_flight;
    options.timeout_s = config.timeout_s;
    return std::make_unique<RemoteBackend>(options);
}

namespace {

std::string relative_to(const fs::path& path, const fs::path& base) {
    return path.lexically_relative(base).generic_string();
}

std::string creation_time(const PipelineConfig& config) {
    return config.timestamp.empty() ? utc_timestamp_now() : config.timestamp;
}

std::string fraction_text(const Fraction& f) {
    return std::to_string(f.numerator) + "/" + std::to_string(f.denominator);
}

}  // namespace

// ---- ingest ----------------------------------------------------------------

IngestReport cmd_ingest(const PipelineConfig& config, const fs::path& input, const fs::path& output) {
    PipelineConfig source = config;
    if (!input.empty()) {
        source.corpus_path = input;
        source.corpus_format.reset();
    }
    const auto corpus = load_config_corpus(source);
    IngestReport report;
    report.records = corpus.size();
    for (const auto& r : corpus.records) {
        report.without_challenge += r.challenge.empty();
        report.without_benefits += r.benefits.empty();
    }
    report.output = output;
    save_corpus(corpus, output, CorpusFormat::Json);
    return report;
}

// ---- build-datasets --------------------------------------------------------

bool BuildDatasetsReport::all_ok() const noexcept {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.status == "ok"; });
}

BuildDatasetsReport cmd_build_datasets(const PipelineConfig& config, const Corpus& corpus, Backend& backend) {
    const auto dir = config.output_dir / "datasets";
    fs::create_directories(dir);
    const SplitConfig split_config{config.train_fraction, config.seed};

    std::optional<NegativeMap> negatives;
    std::string negatives_error;
    if (const auto* random_inno = config.model(ModelKind::RandomInno)) {
        try {
            negatives = build_negative_samples(corpus, backend, *random_inno, {config.temperature, config.max_tokens});
            ordered_json j = ordered_json::object();
            for (const auto& [id, text] : *negatives) j[id] = text;
            write_file(dir / "negatives.json", j.dump(2) + "\n");
        } catch (const Error& e) {
            negatives_error = error_line(e);
        }
    }

    BuildDatasetsReport report;
    ordered_json entries = ordered_json::array();
    for (const auto kind : kAllModelKinds) {
        DatasetOutcome outcome;
        outcome.kind = kind;
        const std::string name(model_kind_name(kind));
        ordered_json entry{{"kind", name}};
        try {
            DatasetBuild build{kind, {}, {}};
            if (!is_evaluator(kind)) {
                build = build_generator_dataset(corpus, kind);
            } else if (!negatives && negatives_error.empty()) {
                outcome.status = "skipped";
                outcome.error = "models.random_inno is not configured, so no negatives exist";
            } else if (!negatives) {
                outcome.status = "failed";
                outcome.error = negatives_error;
            } else {
                build = build_evaluator_dataset(corpus, *negatives, kind);
            }
            if (outcome.status.empty()) {
                const auto labeled = make_labeled_dataset(kind, build.examples, split_config);
                export_jsonl(build.examples, dir / (name + ".jsonl"));
                export_jsonl(labeled.train, dir / (name + ".train.jsonl"));
                export_jsonl(labeled.validation, dir / (name + ".validation.jsonl"));
                outcome.status = "ok";
                outcome.examples = build.examples.size();
                outcome.train = labeled.train.size();
                outcome.validation = labeled.validation.size();
                outcome.batch_size = batch_size_rule(labeled.train.size());
                outcome.skipped_records = build.skipped_ids.size();
            }
        } catch (const Error& e) {
            outcome.status = "failed";
            outcome.error = error_line(e);
        }
        entry["status"] = outcome.status;
        if (outcome.status == "ok") {
            entry["path"] = name + ".jsonl";
            entry["train_path"] = name + ".train.jsonl";
            entry["validation_path"] = name + ".validation.jsonl";
            entry["examples"] = outcome.examples;
            entry["train"] = outcome.train;
            entry["validation"] = outcome.validation;
            entry["batch_size"] = outcome.batch_size;
            entry["skipped_records"] = outcome.skipped_records;
        } else {
            entry["error"] = outcome.error;
        }
        entries.push_back(std::move(entry));
        report.outcomes.push_back(std::move(outcome));
    }

    ordered_json manifest{{"corpus_records", corpus.size()},
                          {"seed", config.seed},
                          {"train_fraction", fraction_text(config.train_fraction)},
                          {"datasets", std::move(entries)}};
    report.manifest = dir / "manifest.json";
    write_file(report.manifest, manifest.dump(2) + "\n");
    return report;
}

// ---- finetune --------------------------------------------------------------

FinetuneReport cmd_finetune(const PipelineConfig& config, Backend& backend, const fs::path& datasets_dir) {
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(read_file(datasets_dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "datasets manifest: " + std::string(e.what()));
    }

    FinetuneReport report;
    for (const auto& entry : manifest.at("datasets")) {
        if (entry.value("status", "") != "ok") continue;
        const auto kind = parse_model_kind(entry.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorKind::Parse, "datasets manifest names an unknown kind");
        FineTuneJob job;
        job.base_model = is_evaluator(*kind) ? BaseModelClass::Classifier : BaseModelClass::Generator;
        job.dataset_path = datasets_dir / entry.at("train_path").get<std::string>();
        job.validation_path = datasets_dir / entry.at("validation_path").get<std::string>();
        job.epochs = config.finetune_epochs;
        job.batch_size = entry.at("batch_size").get<std::size_t>();
        job.job_id = backend.submit_finetune(job);
        report.jobs.push_back({*kind, job});
    }

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(config.finetune_max_wait_s);
    auto finished = [](const FineTuneJob& j) { return j.status == JobStatus::Succeeded || j.status == JobStatus::Failed; };
    while (true) {
        bool pending = false;
        for (auto& outcome : report.jobs) {
            if (!finished(outcome.job)) outcome.job = backend.poll_finetune(outcome.job.job_id);
            pending = pending || !finished(outcome.job);
        }
        if (!pending || std::chrono::steady_clock::now() >= deadline) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(config.finetune_poll_ms));
    }

    ordered_json jobs = ordered_json::array();
    std::string models;
    for (const auto& [kind, job] : report.jobs) {
        ordered_json j{{"kind", model_kind_name(kind)},
                       {"job_id", job.job_id},
                       {"status", job_status_name(job.status)},
                       {"base_model", base_model_class_name(job.base_model)},
                       {"epochs", job.epochs},
                       {"batch_size", job.batch_size}};
        if (!job.fine_tuned_model.empty()) j["fine_tuned_model"] = job.fine_tuned_model;
        if (!job.per_epoch_validation_accuracy.empty()) j["per_epoch_validation_accuracy"] = job.per_epoch_validation_accuracy;
        if (!job.failure_reason.empty()) j["failure_reason"] = job.failure_reason;
        jobs.push_back(std::move(j));
        if (!job.fine_tuned_model.empty())
            models += "models." + std::string(model_kind_name(kind)) + " = " + job.fine_tuned_model + "\n";
    }
    fs::create_directories(config.output_dir);
    report.summary = config.output_dir / "finetune.json";
    write_file(report.summary, ordered_json{{"jobs", std::move(jobs)}}.dump(2) + "\n");
    report.models_config = config.output_dir / "models.conf";
    write_file(report.models_config, models);

    for (const auto& [kind, job] : report.jobs) {
        if (job.status == JobStatus::Failed)
            throw Error(ErrorKind::Backend, std::string(model_kind_name(kind)) + " fine-tune failed: " + job.failure_reason);
        if (!finished(job))
            throw Error(ErrorKind::Timeout, std::string(model_kind_name(kind)) + " fine-tune still " +
                                                std::string(job_status_name(job.status)) + " after finetune.max_wait_s");
    }
    return report;
}

// ---- generate --------------------------------------------------------------

namespace {

void tag_sources(std::vector<GeneratedConcept>& concepts, const std::optional<Lexicon>& lexicon) {
    if (!lexicon) return;
    for (auto& c : concepts) c.source_category = categorize_source(c, *lexicon);
}

fs::path rejects_path_for(const fs::path& store) {
    auto p = store;
    p.replace_extension(".rejects.jsonl");
    return p;
}

}  // namespace

GenerationResult generate_for_spec(const PipelineConfig& config, Backend& backend, const ProblemSpec& spec,
                                   std::size_t n, const std::string& id_prefix, const std::string& created_at) {
    GenerationParams params;
    params.model = config.require_model(generator_kind(spec));
    params.temperature = config.temperature;
    params.max_tokens = config.max_tokens;
    params.budget = config.budget;
    params.id_prefix = id_prefix;
    params.created_at = created_at;
    std::optional<Lexicon> lexicon;
    if (!config.lexicon_path.empty()) lexicon = load_lexicon(config.lexicon_path);
    try {
        auto result = generate_concepts(spec, n, backend, params);
        tag_sources(result.concepts, lexicon);
        return result;
    } catch (const BudgetExhausted& e) {
        auto partial = e.partial();
        tag_sources(partial.concepts, lexicon);
        throw BudgetExhausted(std::move(partial), e.requested());
    }
}

GenerateReport cmd_generate(const PipelineConfig& config, Backend& backend, const ProblemSpec& spec, std::size_t n,
                            const fs::path& store) {
    const auto prefix = "t" + std::to_string(generator_type(spec));
    GenerateReport report;
    report.store = store;
    report.requested = n;
    try {
        const auto result = generate_for_spec(config, backend, spec, n, prefix, creation_time(config));
        write_concept_store(store, result.concepts);
        write_rejects(rejects_path_for(store), result.rejects);
        report.obtained = result.concepts.size();
        report.rejects = result.rejects.size();
        report.attempts = result.attempts;
    } catch (const BudgetExhausted& e) {
        write_concept_store(store, e.partial().concepts);
        write_rejects(rejects_path_for(store), e.partial().rejects);
        throw;
    }
    return report;
}

// ---- evaluate --------------------------------------------------------------

namespace {

EvaluateReport evaluate_and_write(const PipelineConfig& config, Backend& backend,
                                  const std::vector<GeneratedConcept>& concepts, const fs::path& out_dir) {
    EvaluatorModels models;
    bool type2 = false;
    bool type3 = false;
    for (const auto& c : concepts) {
        type2 = type2 || generator_type(c.spec) == 2;
        type3 = type3 || generator_type(c.spec) == 3;
    }
    if (!concepts.empty()) models.eval_bio = config.require_model(ModelKind::EvalBio);
    if (type2) models.eval_ben = config.require_model(ModelKind::EvalBen);
    if (type3) models.eval_cha = config.require_model(ModelKind::EvalCha);

    const auto verdicts = evaluate_concepts(concepts, backend, models);
    EvaluateReport report;
    report.table = pass_rate_table(concepts, verdicts);
    fs::create_directories(out_dir);
    const std::vector<std::pair<std::string, std::string>> files{
        {"verdicts.csv", verdicts_csv(verdicts)},
        {"pass_rates.csv", pass_rate_csv(report.table)},
        {"pass_rates.txt", pass_rate_text(report.table)},
        {"probability_histogram.csv", histogram_csv(concepts, verdicts)},
    };
    for (const auto& [name, contents] : files) {
        write_file(out_dir / name, contents);
        report.outputs.push_back(out_dir / name);
    }
    return report;
}

}  // namespace

EvaluateReport cmd_evaluate(const PipelineConfig& config, Backend& backend, const fs::path& store,
                            const fs::path& out_dir) {
    return evaluate_and_write(config, backend, read_concept_store(store), out_dir);
}

// ---- wmd -------------------------------------------------------------------

std::optional<ProblemSpec> spec_from_record(const InnovationRecord& record, int type) {
    switch (type) {
        case 1:
            if (record.applications.empty()) return std::nullopt;
            return Type1Spec{record.applications};
        case 2:
            if (record.applications.empty() || record.benefits.empty()) return std::nullopt;
            return Type2Spec{record.benefits, record.applications};
        case 3:
            if (record.challenge.empty()) return std::nullopt;
            return Type3Spec{record.challenge};
        default:
            return std::nullopt;
    }
}

GeneratedBySample assign_concepts(const std::vector<InnovationRecord>& originals,
                                  const std::vector<GeneratedConcept>& concepts) {
    if (originals.empty()) throw Error(ErrorKind::Precondition, "no original samples given");
    GeneratedBySample generated;
    for (const auto& c : concepts) {
        const int type = generator_type(c.spec);
        const InnovationRecord* owner = originals.size() == 1 ? &originals.front() : nullptr;
        for (std::size_t k = 0; !owner && k < originals.size(); ++k) {
            if (spec_from_record(originals[k], type) == std::optional<ProblemSpec>(c.spec)) owner = &originals[k];
        }
        if (!owner)
            throw Error(ErrorKind::Precondition, "concept '" + c.id + "' matches the problem spec of no original sample");
        generated[{owner->id, type}].push_back(c);
    }
    return generated;
}

namespace {

WmdCommandReport diversity_and_write(const PipelineConfig& config, const GeneratedBySample& generated,
                                     const std::vector<InnovationRecord>& originals,
                                     const std::vector<InnovationRecord>& pool, const fs::path& out_dir) {
    std::vector<const std::string*> texts;
    for (const auto& [key, concepts] : generated) {
        for (const auto& c : concepts) texts.push_back(&c.innovation);
    }
    for (const auto& r : originals) texts.push_back(&r.innovation);
    for (const auto& r : pool) texts.push_back(&r.innovation);

    const auto store = load_config_embeddings(config, texts);
    const auto stopwords = load_config_stopwords(config);
    DiversityOptions options;
    options.metric = config.ground_metric;

    WmdCommandReport result;
    result.report = diversity_report(originals, generated, pool, store, stopwords, options);
    fs::create_directories(out_dir);
    const std::vector<std::pair<std::string, std::string>> files{
        {"distances.csv", distances_csv(result.report)},
        {"summary.json", summary_json(result.report)},
        {"histogram.csv", histogram_csv(distance_histogram(result.report))},
    };
    for (const auto& [name, contents] : files) {
        write_file(out_dir / name, contents);
        result.outputs.push_back(out_dir / name);
    }
    return result;
}

}  // namespace

WmdCommandReport cmd_wmd(const PipelineConfig& config, const std::vector<GeneratedConcept>& concepts,
                         const std::vector<InnovationRecord>& originals, const std::vector<InnovationRecord>& pool,
                         const fs::path& out_dir) {
    return diversity_and_write(config, assign_concepts(originals, concepts), originals, pool, out_dir);
}

// ---- ratings ---------------------------------------------------------------

RatingsReport cmd_ratings(const fs::path& ratings_csv, const fs::path& store, const fs::path& out_dir) {
    const auto ratings = parse_ratings_csv(read_file(ratings_csv));
    RatingsReport report;
    report.summary = summarize_ratings(ratings, read_concept_store(store));
    report.output = out_dir / "ratings_summary.json";
    write_file(report.output, ratings_summary_json(report.summary));
    return report;
}

// ---- pipeline --------------------------------------------------------------

std::string manifest_json(const RunManifest& manifest) {
    ordered_json stages = ordered_json::array();
    for (const auto& s : manifest.stages) {
        ordered_json j{{"name", s.name}, {"status", s.status}, {"outputs", s.outputs}, {"duration_ms", s.duration_ms}};
        if (!s.error.empty()) j["error"] = s.error;
        stages.push_back(std::move(j));
    }
    ordered_json root{{"run_id", manifest.run_id},
                      {"config_hash", manifest.config_hash},
                      {"seed", manifest.seed},
                      {"stages", std::move(stages)}};
    return root.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view text) {
    try {
        const auto root = nlohmann::json::parse(text);
        RunManifest manifest;
        manifest.run_id = root.at("run_id").get<std::string>();
        manifest.config_hash = root.at("config_hash").get<std::string>();
        manifest.seed = root.at("seed").get<std::uint64_t>();
        for (const auto& s : root.at("stages")) {
            StageRecord stage;
            stage.name = s.at("name").get<std::string>();
            stage.status = s.at("status").get<std::string>();
            stage.outputs = s.at("outputs").get<std::vector<std::string>>();
            stage.duration_ms = s.at("duration_ms").get<std::uint64_t>();
            stage.error = s.value("error", "");
            manifest.stages.push_back(std::move(stage));
        }
        return manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "run manifest: " + std::string(e.what()));
    }
}

std::vector<ProblemSpec> case_study_specs() {
    return {Type1Spec{{"Flying car"}}, Type2Spec{{"Lightweight"}, {"Flying car"}},
            Type3Spec{"Lightweight design is a challenge for flying cars."}};
}

namespace {

struct GenerationJob {
    std::string sample_id;  // diversity original this job is measured against
    ProblemSpec spec;
    std::string prefix;
};

std::vector<GenerationJob> plan_jobs(const Corpus& corpus, const PipelineRequest& request) {
    std::vector<GenerationJob> jobs;
    if (!request.sample_ids.empty()) {
        for (const auto& id : request.sample_ids) {
            const auto* record = corpus.find(id);
            if (!record) throw Error(ErrorKind::Precondition, "sample '" + id + "' is not in the corpus");
            for (int type = 1; type <= 3; ++type) {
                auto spec = spec_from_record(*record, type);
                if (!spec)
                    throw Error(ErrorKind::Precondition,
                                "sample '" + id + "' lacks the fields for a Type-" + std::to_string(type) + " spec");
                jobs.push_back({id, std::move(*spec), id + "-t" + std::to_string(type)});
            }
        }
        return jobs;
    }
    if (corpus.empty()) throw Error(ErrorKind::Precondition, "corpus is empty");
    const auto reference = request.reference_id.empty() ? corpus.records.front().id : request.reference_id;
    if (!corpus.find(reference)) throw Error(ErrorKind::Precondition, "reference '" + reference + "' is not in the corpus");
    const auto specs = request.specs.empty() ? case_study_specs() : request.specs;
    std::map<int, int> per_type;
    for (const auto& spec : specs) ++per_type[generator_type(spec)];
    for (std::size_t k = 0; k < specs.size(); ++k) {
        validate_spec(specs[k]);
        const int type = generator_type(specs[k]);
        auto prefix = "t" + std::to_string(type);
        if (per_type[type] > 1) prefix = "s" + std::to_string(k + 1) + "-" + prefix;
        jobs.push_back({reference, specs[k], prefix});
    }
    return jobs;
}

bool outputs_exist(const StageRecord& stage, const fs::path& out) {
    return std::all_of(stage.outputs.begin(), stage.outputs.end(), [&](const auto& p) { return fs::exists(out / p); });
}

}  // namespace

PipelineReport cmd_pipeline(const PipelineConfig& config, const Corpus& corpus, Backend& backend,
                            const PipelineRequest& request) {
    const auto out = config.output_dir;
    fs::create_directories(out);
    const std::size_t n = request.n ? request.n : config.generation_n;
    const auto jobs = plan_jobs(corpus, request);

    PipelineReport report;
    auto& manifest = report.manifest;
    manifest.config_hash = config_hash(config);
    manifest.seed = config.seed;
    StableHasher run_hasher;
    run_hasher.add(manifest.config_hash).add(config.seed).add(static_cast<std::uint64_t>(n));
    for (const auto& job : jobs) run_hasher.add(job.sample_id).add(job.prefix).add(render_prompt(job.spec));
    manifest.run_id = to_hex(run_hasher.digest());
    report.manifest_path = out / "manifest.json";

    std::map<std::string, StageRecord> previous;
    if (request.resume && fs::exists(report.manifest_path)) {
        const auto old = parse_manifest(read_file(report.manifest_path));
        if (old.run_id == manifest.run_id) {
            for (const auto& s : old.stages) {
                if ((s.status == "ok" || s.status == "reused") && outputs_exist(s, out)) previous[s.name] = s;
            }
        }
    }

    auto save = [&] { write_file(report.manifest_path, manifest_json(manifest)); };
    auto run_stage = [&](const std::string& name, auto&& body) {
        StageRecord stage;
        stage.name = name;
        const auto start = std::chrono::steady_clock::now();
        try {
            stage.outputs = body(stage.status);
            if (stage.status.empty()) stage.status = "ok";
        } catch (const Error& e) {
            stage.status = "failed";
            stage.error = error_line(e);
            stage.duration_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                               std::chrono::steady_clock::now() - start)
                                                               .count());
            manifest.stages.push_back(stage);
            save();
            throw;
        }
        stage.duration_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
        manifest.stages.push_back(std::move(stage));
        save();
    };

    // Stage 1: generation.
    std::vector<GeneratedConcept> concepts;
    GeneratedBySample generated;
    const auto store_path = out / "concepts.jsonl";
    const auto rejects = out / "rejects.jsonl";
    // A stage is reused only if every stage before it was reused too.
    bool reusing = true;
    auto reuse = [&](const std::string& name, std::string& status) -> const StageRecord* {
        reusing = reusing && previous.count(name);
        if (!reusing) return nullptr;
        status = "reused";
        return &previous.at(name);
    };
    run_stage("generate", [&](std::string& status) {
        if (const auto* old = reuse("generate", status)) {
            status = "reused";
            concepts = read_concept_store(store_path);
            for (const auto& c : concepts) {
                const auto cut = c.id.rfind('-');
                const auto prefix = c.id.substr(0, cut);
                const auto job = std::find_if(jobs.begin(), jobs.end(), [&](const auto& j) { return j.prefix == prefix; });
                if (job == jobs.end()) throw Error(ErrorKind::Precondition, "stored concept '" + c.id + "' fits no job");
                generated[{job->sample_id, generator_type(c.spec)}].push_back(c);
            }
            return old->outputs;
        }
        const auto created_at = creation_time(config);
        std::vector<Reject> all_rejects;
        for (const auto& job : jobs) {
            try {
                auto result = generate_for_spec(config, backend, job.spec, n, job.prefix, created_at);
                for (auto& r : result.rejects) r.reason = job.prefix + ": " + r.reason;
                all_rejects.insert(all_rejects.end(), result.rejects.begin(), result.rejects.end());
                auto& bucket = generated[{job.sample_id, generator_type(job.spec)}];
                bucket.insert(bucket.end(), result.concepts.begin(), result.concepts.end());
                concepts.insert(concepts.end(), result.concepts.begin(), result.concepts.end());
            } catch (const BudgetExhausted& e) {
                concepts.insert(concepts.end(), e.partial().concepts.begin(), e.partial().concepts.end());
                all_rejects.insert(all_rejects.end(), e.partial().rejects.begin(), e.partial().rejects.end());
                write_concept_store(store_path, concepts);
                write_rejects(rejects, all_rejects);
                throw;
            }
        }
        write_concept_store(store_path, concepts);
        write_rejects(rejects, all_rejects);
        return std::vector<std::string>{relative_to(store_path, out), relative_to(rejects, out)};
    });

    // Stage 2: relevancy evaluation.
    run_stage("evaluate", [&](std::string& status) {
        if (const auto* old = reuse("evaluate", status)) return old->outputs;
        auto evaluated = evaluate_and_write(config, backend, concepts, out);
        report.pass_rates = std::move(evaluated.table);
        std::vector<std::string> outputs;
        for (const auto& p : evaluated.outputs) outputs.push_back(relative_to(p, out));
        return outputs;
    });

    // Stage 3: diversity.
    run_stage("wmd", [&](std::string& status) {
        if (const auto* old = reuse("wmd", status)) return old->outputs;
        std::vector<InnovationRecord> originals;
        for (const auto& job : jobs) {
            const bool seen = std::any_of(originals.begin(), originals.end(),
                                          [&](const auto& r) { return r.id == job.sample_id; });
            if (!seen) originals.push_back(*corpus.find(job.sample_id));
        }
        std::vector<InnovationRecord> pool = corpus.records;
        if (!config.baseline_path.empty()) pool = load_corpus(config.baseline_path).records;
        auto result = diversity_and_write(config, generated, originals, pool, out / "diversity");
        report.diversity = std::move(result.report);
        std::vector<std::string> outputs;
        for (const auto& p : result.outputs) outputs.push_back(relative_to(p, out));
        return outputs;
    });

    return report;
}

}  // namespace bidforge
