#include "bidforge/mock_backend.hpp"

#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/text.hpp"

#include <cmath>
#include <set>

namespace bidforge {

namespace {

std::set<std::string> content_words(std::string_view text) {
    std::set<std::string> words;
    const auto& stop = default_stopwords();
    for (auto& token : alpha_tokens(text)) {
        if (!stop.count(token)) words.insert(std::move(token));
    }
    return words;
}

ModelKind kind_from_dataset(const std::filesystem::path& path) {
    const auto examples = import_jsonl(path);
    const auto& completion = examples.front().completion;
    if (examples.front().label) {
        const auto& prompt = examples.front().prompt;
        if (prompt.starts_with(marker_token(MarkerTag::Bio))) return ModelKind::EvalBio;
        if (prompt.starts_with(marker_token(MarkerTag::Cha))) return ModelKind::EvalCha;
        return ModelKind::EvalBen;
    }
    if (trim(completion).starts_with(kInnovationHeader)) return ModelKind::RandomInno;
    const auto& prompt = examples.front().prompt;
    if (prompt.starts_with("Benefits:")) return ModelKind::Gen2;
    if (prompt.starts_with("Challenge:")) return ModelKind::Gen3;
    return ModelKind::Gen1;
}

}  // namespace

double content_word_jaccard(std::string_view a, std::string_view b) {
    const auto left = content_words(a);
    const auto right = content_words(b);
    if (left.empty() && right.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& word : left) shared += right.count(word);
    const auto united = left.size() + right.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(united);
}

double mock_relatedness(double jaccard) {
    return 1.0 / (1.0 + std::exp(-10.0 * (jaccard - 0.1)));
}

MockBackend::MockBackend(std::shared_ptr<const Corpus> corpus, MockOptions options)
    : corpus_(std::move(corpus)), options_(options) {
    if (options_.in_flight == 0) options_.in_flight = 1;
}

void MockBackend::register_model(const std::string& model_id, ModelKind kind) {
    std::lock_guard lock(mutex_);
    models_[model_id] = kind;
}

ModelKind MockBackend::kind_of(const std::string& model_id) const {
    std::lock_guard lock(mutex_);
    const auto it = models_.find(model_id);
    if (it == models_.end()) throw Error(ErrorKind::Backend, "http 404: unknown model '" + model_id + "'");
    return it->second;
}

std::string MockBackend::sample_text(ModelKind kind, const std::string& prompt, std::size_t sample_index) const {
    if (!corpus_ || corpus_->empty()) throw Error(ErrorKind::Backend, "mock backend has no corpus to sample from");
    const auto h = StableHasher().add(options_.seed).add(prompt).add(sample_index).digest();
    const auto& record = corpus_->records[h % corpus_->size()];
    if (kind == ModelKind::RandomInno) return innovation_completion(record.innovation);
    if ((h >> 40) % 1000 < options_.malformed_permille) return " Biomimicry: " + record.biomimicry;
    return render_completion(record);
}

std::vector<TokenLogprob> MockBackend::label_logprobs(const std::string& prompt) const {
    std::vector<MarkedSegment> segments;
    try {
        segments = parse_marked_segments(prompt);
    } catch (const Error& e) {
        throw Error(ErrorKind::Backend, std::string("http 400: evaluator prompt malformed: ") + e.what());
    }
    if (segments.size() != 2)
        throw Error(ErrorKind::Backend, "http 400: evaluator prompt needs exactly two marked segments");
    const double p = mock_relatedness(content_word_jaccard(segments[0].text, segments[1].text));
    const double lp_related = std::log(p);
    const double lp_unrelated = std::log1p(-p);
    TokenLogprob first;
    const bool related = p >= kRelevancyThreshold;
    first.token = related ? " related" : " unrelated";
    first.logprob = related ? lp_related : lp_unrelated;
    first.top = {{" related", lp_related}, {" unrelated", lp_unrelated}};
    return {first};
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
    validate_request(request);
    const auto kind = kind_of(request.model);
    CompletionResponse response;
    for (int i = 0; i < request.n; ++i) {
        if (is_evaluator(kind)) {
            auto logprobs = label_logprobs(request.prompt);
            response.texts.push_back(truncate_at_stop(logprobs.front().token, request.stop));
            if (request.logprobs > 0) response.token_logprobs.push_back(std::move(logprobs));
        } else {
            const auto index = request.sample_offset + static_cast<std::size_t>(i);
            response.texts.push_back(truncate_at_stop(sample_text(kind, request.prompt, index), request.stop));
        }
    }
    return response;
}

ClassificationResult MockBackend::classify(const std::string& model, const std::string& prompt) {
    if (!is_evaluator(kind_of(model)))
        throw Error(ErrorKind::Backend, "http 400: model '" + model + "' is not a classifier");
    return classify_via_completion(*this, model, prompt);
}

std::string MockBackend::submit_finetune(const FineTuneJob& job) {
    if (job.epochs < 1) throw Error(ErrorKind::Precondition, "epochs must be at least 1");
    check_finetune_dataset(job.dataset_path);
    if (!job.validation_path.empty()) check_finetune_dataset(job.validation_path);
    const auto kind = kind_from_dataset(job.dataset_path);

    std::lock_guard lock(mutex_);
    const auto number = ++job_counter_;
    const auto digest = StableHasher()
                            .add(options_.seed)
                            .add(read_file(job.dataset_path))
                            .add(static_cast<std::uint64_t>(job.epochs))
                            .add(base_model_class_name(job.base_model))
                            .digest();
    PendingJob pending{job, kind, std::chrono::steady_clock::now()};
    pending.job.job_id = "ftjob-" + to_hex(digest).substr(0, 12) + "-" + std::to_string(number);
    pending.job.status = JobStatus::Pending;
    pending.job.per_epoch_validation_accuracy.clear();
    pending.job.fine_tuned_model.clear();
    const auto id = pending.job.job_id;
    jobs_.emplace(id, std::move(pending));
    return id;
}

FineTuneJob MockBackend::poll_finetune(const std::string& job_id) {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorKind::Backend, "http 404: unknown fine-tune job '" + job_id + "'");
    auto& pending = it->second;
    auto& job = pending.job;
    if (job.status == JobStatus::Succeeded) return job;

    const auto elapsed = std::chrono::steady_clock::now() - pending.submitted;
    if (elapsed < options_.finetune_delay) {
        job.status = elapsed * 2 < options_.finetune_delay ? JobStatus::Pending : JobStatus::Running;
        return job;
    }
    job.status = JobStatus::Succeeded;
    job.fine_tuned_model = std::string(base_model_class_name(job.base_model)) + ":ft-" +
                           std::string(model_kind_name(pending.kind)) + "-" + job_id.substr(6);
    // Placeholder curve: rises monotonically towards 0.95.
    if (is_evaluator(pending.kind)) {
        for (int epoch = 1; epoch <= job.epochs; ++epoch)
            job.per_epoch_validation_accuracy.push_back(0.5 + 0.45 * (1.0 - std::pow(0.5, epoch)));
    }
    models_[job.fine_tuned_model] = pending.kind;
    return job;
}

}  // namespace bidforge
