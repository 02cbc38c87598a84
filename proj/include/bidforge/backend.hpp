#pragma once

#include "bidforge/datagen.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

struct CompletionRequest {
    std::string model;
    std::string prompt;
    int max_tokens = 400;
    double temperature = 0.8;
    std::vector<std::string> stop{std::string(kStopMarker)};
    int n = 1;
    // Number of alternatives to report per token; 0 requests no log-probabilities.
    int logprobs = 0;
    // Index of this request's first sample within a larger sampling run. The
    // mock backend keys its output on it; hosted APIs ignore it.
    std::size_t sample_offset = 0;
};

// Throws Precondition unless max_tokens >= 1, n >= 1 and temperature is finite
// and non-negative.
void validate_request(const CompletionRequest& request);

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
    std::map<std::string, double> top;  // alternatives at this position
};

struct CompletionResponse {
    std::vector<std::string> texts;
    std::vector<std::vector<TokenLogprob>> token_logprobs;  // empty unless requested
};

// Cuts the text at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

inline constexpr double kRelevancyThreshold = 0.5;

struct ClassificationResult {
    Label label = Label::Unrelated;
    double probability = 0.0;  // confidence that the label is "related"
};

// Applies the fixed threshold: related iff probability >= 0.5.
ClassificationResult classification_from_probability(double probability);

// Renormalizes the two label-token log-probabilities. Either may be -inf;
// both -inf throws MissingLogprobs.
ClassificationResult classification_from_logprobs(double logprob_related, double logprob_unrelated);

// Looks up " related" / " unrelated" among the first token's alternatives.
ClassificationResult classification_from_first_token(const TokenLogprob& first);

enum class BaseModelClass { Generator, Classifier };
enum class JobStatus { Pending, Running, Succeeded, Failed };

std::string_view base_model_class_name(BaseModelClass base) noexcept;
std::string_view job_status_name(JobStatus status) noexcept;

struct FineTuneJob {
    BaseModelClass base_model = BaseModelClass::Generator;
    std::filesystem::path dataset_path;
    std::filesystem::path validation_path;  // optional
    int epochs = 4;
    std::size_t batch_size = 1;
    std::string job_id;
    JobStatus status = JobStatus::Pending;
    std::vector<double> per_epoch_validation_accuracy;
    std::string fine_tuned_model;  // set once the job has succeeded
    std::string failure_reason;
};

// Throws InvalidDataset unless the file exists and every line is a JSON
// object with string "prompt" and "completion" members. Returns the line count.
std::size_t check_finetune_dataset(const std::filesystem::path& path);

// Text completion, two-label classification and fine-tune job management.
// Implementations are safe for concurrent use.
class Backend {
public:
    virtual ~Backend() = default;

    virtual CompletionResponse complete(const CompletionRequest& request) = 0;

    // Classification runs at temperature 0 with a single-token completion.
    virtual ClassificationResult classify(const std::string& model, const std::string& prompt) = 0;

    virtual std::string submit_finetune(const FineTuneJob& job) = 0;
    virtual FineTuneJob poll_finetune(const std::string& job_id) = 0;

    // Callers size their fan-out by this.
    virtual std::size_t max_in_flight() const noexcept = 0;
};

// One-token completion at temperature 0 with label log-probabilities,
// renormalized over the two label tokens.
ClassificationResult classify_via_completion(Backend& backend, const std::string& model, const std::string& prompt);

// Exponential backoff for rate-limit and 5xx responses.
struct RetryPolicy {
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    int max_attempts = 5;

    // Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay(int retry) const;
    static bool retryable_status(int http_status) noexcept;
};

}  // namespace bidforge
