#pragma once

#include "bidforge/backend.hpp"
#include "bidforge/corpus.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>

namespace bidforge {

struct MockOptions {
    std::uint64_t seed = 0;
    // Per-mille of generator samples returned without an Innovation section,
    // to exercise parse-reject-retry paths.
    unsigned malformed_permille = 0;
    std::chrono::milliseconds finetune_delay{0};
    std::size_t in_flight = 4;
};

// Jaccard similarity of the lowercased content-word sets of two texts
// (stopwords removed); 0 when both sets are empty.
double content_word_jaccard(std::string_view a, std::string_view b);

// 1 / (1 + exp(-10 (J - 0.1))).
double mock_relatedness(double jaccard);

// Deterministic offline backend. Completions are corpus records chosen by a
// stable hash of (seed, prompt, sample index) and rendered with the template
// of the requested model's kind; classification scores the overlap of the
// prompt's two marked segments. Output depends only on the seed and request.
class MockBackend final : public Backend {
public:
    MockBackend(std::shared_ptr<const Corpus> corpus, MockOptions options);

    void register_model(const std::string& model_id, ModelKind kind);

    CompletionResponse complete(const CompletionRequest& request) override;
    ClassificationResult classify(const std::string& model, const std::string& prompt) override;
    std::string submit_finetune(const FineTuneJob& job) override;
    FineTuneJob poll_finetune(const std::string& job_id) override;
    std::size_t max_in_flight() const noexcept override { return options_.in_flight; }

private:
    struct PendingJob {
        FineTuneJob job;
        ModelKind kind;
        std::chrono::steady_clock::time_point submitted;
    };

    ModelKind kind_of(const std::string& model_id) const;
    std::string sample_text(ModelKind kind, const std::string& prompt, std::size_t sample_index) const;
    std::vector<TokenLogprob> label_logprobs(const std::string& prompt) const;

    std::shared_ptr<const Corpus> corpus_;
    MockOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, ModelKind> models_;
    std::map<std::string, PendingJob> jobs_;
    std::uint64_t job_counter_ = 0;
};

}  // namespace bidforge
