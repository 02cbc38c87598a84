#pragma once

#include "bidforge/backend.hpp"
#include "bidforge/concept.hpp"
#include "bidforge/config.hpp"
#include "bidforge/corpus.hpp"
#include "bidforge/diversity.hpp"
#include "bidforge/ratings.hpp"
#include "bidforge/relevancy.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bidforge {

// ---- shared plumbing -------------------------------------------------------

Corpus load_config_corpus(const PipelineConfig& config);
StopwordSet load_config_stopwords(const PipelineConfig& config);

// Loads only the vocabulary needed by `texts` (the whole file is validated).
EmbeddingStore load_config_embeddings(const PipelineConfig& config, const std::vector<const std::string*>& texts);

// Mock backends get every configured model id registered under its kind.
std::unique_ptr<Backend> make_backend(const PipelineConfig& config, std::shared_ptr<const Corpus> corpus);

// ---- ingest ----------------------------------------------------------------

struct IngestReport {
    std::size_t records = 0;
    std::size_t without_challenge = 0;
    std::size_t without_benefits = 0;
    std::filesystem::path output;
};

// Validates a corpus file and writes it in canonical JSON form.
IngestReport cmd_ingest(const PipelineConfig& config, const std::filesystem::path& input,
                        const std::filesystem::path& output);

// ---- build-datasets --------------------------------------------------------

struct DatasetOutcome {
    ModelKind kind = ModelKind::Gen1;
    std::string status;  // "ok", "failed" or "skipped"
    std::string error;   // "<Category> message" when not ok
    std::size_t examples = 0;
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t batch_size = 0;
    std::size_t skipped_records = 0;
};

struct BuildDatasetsReport {
    std::vector<DatasetOutcome> outcomes;  // one per model kind
    std::filesystem::path manifest;

    bool all_ok() const noexcept;
};

// Writes <out>/datasets/<kind>.jsonl plus .train/.validation splits and a
// manifest.json. A kind that fails is reported and the rest still build.
// Evaluator kinds are skipped when models.random_inno is not configured.
BuildDatasetsReport cmd_build_datasets(const PipelineConfig& config, const Corpus& corpus, Backend& backend);

// ---- finetune --------------------------------------------------------------

struct FinetuneOutcome {
    ModelKind kind = ModelKind::Gen1;
    FineTuneJob job;
};

struct FinetuneReport {
    std::vector<FinetuneOutcome> jobs;
    std::filesystem::path summary;       // finetune.json
    std::filesystem::path models_config; // "models.<kind> = <id>" lines
};

// Submits a job per successfully built dataset and polls until every job
// has finished (or finetune.max_wait_s passes).
FinetuneReport cmd_finetune(const PipelineConfig& config, Backend& backend, const std::filesystem::path& datasets_dir);

// ---- generate --------------------------------------------------------------

struct GenerateReport {
    std::filesystem::path store;
    std::size_t requested = 0;
    std::size_t obtained = 0;
    std::size_t rejects = 0;
    std::size_t attempts = 0;
};

GenerationResult generate_for_spec(const PipelineConfig& config, Backend& backend, const ProblemSpec& spec,
                                   std::size_t n, const std::string& id_prefix, const std::string& created_at);

// Writes the concept store (and <store>.rejects.jsonl). BudgetExhausted is
// rethrown after the partial store has been written.
GenerateReport cmd_generate(const PipelineConfig& config, Backend& backend, const ProblemSpec& spec, std::size_t n,
                            const std::filesystem::path& store);

// ---- evaluate --------------------------------------------------------------

struct EvaluateReport {
    PassRateTable table;
    std::vector<std::filesystem::path> outputs;
};

// Writes verdicts.csv, pass_rates.csv, pass_rates.txt and
// probability_histogram.csv into out_dir.
EvaluateReport cmd_evaluate(const PipelineConfig& config, Backend& backend, const std::filesystem::path& store,
                            const std::filesystem::path& out_dir);

// ---- wmd -------------------------------------------------------------------

// With a single original every concept belongs to it; otherwise a concept
// belongs to the original whose fields reproduce its problem spec.
GeneratedBySample assign_concepts(const std::vector<InnovationRecord>& originals,
                                  const std::vector<GeneratedConcept>& concepts);

// Problem spec of the given type derived from a record's own fields;
// nullopt when the record lacks the field the type needs.
std::optional<ProblemSpec> spec_from_record(const InnovationRecord& record, int generator_type);

struct WmdCommandReport {
    DiversityReport report;
    std::vector<std::filesystem::path> outputs;
};

// Writes distances.csv, summary.json and histogram.csv into out_dir.
WmdCommandReport cmd_wmd(const PipelineConfig& config, const std::vector<GeneratedConcept>& concepts,
                         const std::vector<InnovationRecord>& originals, const std::vector<InnovationRecord>& pool,
                         const std::filesystem::path& out_dir);

// ---- ratings ---------------------------------------------------------------

struct RatingsReport {
    RatingsSummary summary;
    std::filesystem::path output;
};

RatingsReport cmd_ratings(const std::filesystem::path& ratings_csv, const std::filesystem::path& store,
                          const std::filesystem::path& out_dir);

// ---- pipeline --------------------------------------------------------------

struct PipelineRequest {
    // Experiment mode: each listed corpus record seeds all three generator
    // types from its own fields and is its own diversity original.
    std::vector<std::string> sample_ids;
    // Spec mode: explicit specs; diversity is measured against reference_id
    // (first corpus record when empty).
    std::vector<ProblemSpec> specs;
    std::string reference_id;
    std::size_t n = 0;  // 0: generation.n
    bool resume = false;
};

struct StageRecord {
    std::string name;
    std::string status;  // "ok", "failed", "skipped", "reused"
    std::vector<std::string> outputs;  // relative to the output directory
    std::uint64_t duration_ms = 0;
    std::string error;
};

struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<StageRecord> stages;
};

std::string manifest_json(const RunManifest& manifest);
RunManifest parse_manifest(std::string_view text);

struct PipelineReport {
    RunManifest manifest;
    std::filesystem::path manifest_path;
    std::optional<PassRateTable> pass_rates;
    std::optional<DiversityReport> diversity;
};

// generate -> evaluate -> wmd. The manifest is rewritten after every stage;
// on a failing stage it records the error and the error is rethrown.
PipelineReport cmd_pipeline(const PipelineConfig& config, const Corpus& corpus, Backend& backend,
                            const PipelineRequest& request);

// The case-study inputs: "Flying car" / "Lightweight" / a one-line challenge.
std::vector<ProblemSpec> case_study_specs();

}  // namespace bidforge
