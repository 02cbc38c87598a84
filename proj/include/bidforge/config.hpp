#pragma once

#include "bidforge/corpus.hpp"
#include "bidforge/datagen.hpp"
#include "bidforge/embeddings.hpp"
#include "bidforge/remote_backend.hpp"
#include "bidforge/wmd.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace bidforge {

enum class BackendKind { Mock, Remote };

// Settings for every subcommand. Loaded from a flat "key = value" file;
// relative paths resolve against the file's directory.
struct PipelineConfig {
    std::filesystem::path corpus_path;
    std::optional<CorpusFormat> corpus_format;  // by extension when unset

    BackendKind backend = BackendKind::Mock;
    std::string api_base_url = "https://api.openai.com/v1";
    std::string api_key;  // BIDFORGE_API_KEY only, never from the file
    RemoteEndpoints endpoints;
    std::map<ModelKind, std::string> models;
    std::size_t in_flight = 4;
    double timeout_s = 60.0;

    std::size_t generation_n = 50;
    double temperature = 0.8;
    std::size_t budget = 0;  // 0: twice the requested count
    int max_tokens = 400;

    std::filesystem::path embeddings_path;
    std::optional<EmbeddingFormat> embeddings_format;
    std::filesystem::path stopwords_path;  // empty: built-in list
    std::filesystem::path lexicon_path;    // empty: no source tagging
    std::filesystem::path baseline_path;   // empty: the corpus
    GroundMetric ground_metric = GroundMetric::Euclidean;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::string timestamp;  // created_at for generated concepts; empty: current UTC time

    unsigned mock_malformed_permille = 0;
    std::uint64_t mock_finetune_delay_ms = 0;

    int finetune_epochs = 4;
    std::string generator_base = "davinci";
    std::string classifier_base = "curie";
    std::uint64_t finetune_poll_ms = 5000;
    std::uint64_t finetune_max_wait_s = 4 * 3600;

    Fraction train_fraction{};

    // Canonical "key=value" lines of every explicitly set key, sorted.
    std::map<std::string, std::string> entries;

    // The relevancy threshold is fixed; it is exposed read-only.
    static constexpr double threshold() noexcept { return 0.5; }

    const std::string* model(ModelKind kind) const;
    std::string require_model(ModelKind kind) const;  // ConfigError if unset
};

// Throws Error{Config} naming the line for syntax errors, unknown or
// duplicate keys and invalid values.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Picks up BIDFORGE_API_KEY.
void apply_environment(PipelineConfig& config);

void set_seed(PipelineConfig& config, std::uint64_t seed);
void set_output_dir(PipelineConfig& config, const std::filesystem::path& dir);

// Stable hash over the canonical entries (16 hex digits).
std::string config_hash(const PipelineConfig& config);

std::string utc_timestamp_now();

}  // namespace bidforge
