#pragma once

#include "bidforge/backend.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <string>

namespace bidforge {

// Paths are appended to the path part of the base URL.
struct RemoteEndpoints {
    std::string completions = "/completions";
    std::string files = "/files";
    std::string fine_tunes = "/fine-tunes";
};

struct RemoteOptions {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    RemoteEndpoints endpoints;
    std::string generator_base_model = "davinci";
    std::string classifier_base_model = "curie";
    std::size_t in_flight = 4;
    double timeout_s = 60.0;
    RetryPolicy retry;
    // Replaced in tests to avoid real waiting.
    std::function<void(std::chrono::milliseconds)> sleep;
};

// HTTP+JSON client for a hosted completion / fine-tune API. Requests carry
// an Idempotency-Key derived from the body so retries are safe to repeat.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteOptions options);
    ~RemoteBackend() override;

    CompletionResponse complete(const CompletionRequest& request) override;
    ClassificationResult classify(const std::string& model, const std::string& prompt) override;
    std::string submit_finetune(const FineTuneJob& job) override;
    FineTuneJob poll_finetune(const std::string& job_id) override;
    std::size_t max_in_flight() const noexcept override { return options_.in_flight; }

private:
    struct Impl;
    RemoteOptions options_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bidforge
