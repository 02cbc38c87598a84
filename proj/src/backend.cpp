#include "bidforge/backend.hpp"

#include "bidforge/error.hpp"
#include "bidforge/text.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace bidforge {

void validate_request(const CompletionRequest& request) {
    if (request.max_tokens < 1) throw Error(ErrorKind::Precondition, "max_tokens must be at least 1");
    if (request.n < 1) throw Error(ErrorKind::Precondition, "n must be at least 1");
    if (!std::isfinite(request.temperature) || request.temperature < 0.0)
        throw Error(ErrorKind::Precondition, "temperature must be finite and non-negative");
}

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
    auto cut = text.size();
    for (const auto& stop : stops) {
        if (stop.empty()) continue;
        cut = std::min(cut, text.find(stop));
    }
    return std::string(text.substr(0, cut));
}

ClassificationResult classification_from_probability(double probability) {
    if (!(probability >= 0.0 && probability <= 1.0))
        throw Error(ErrorKind::Precondition, "probability outside [0, 1]");
    return {probability >= kRelevancyThreshold ? Label::Related : Label::Unrelated, probability};
}

ClassificationResult classification_from_logprobs(double lp_related, double lp_unrelated) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (std::isnan(lp_related) || std::isnan(lp_unrelated))
        throw Error(ErrorKind::MissingLogprobs, "label log-probability is NaN");
    if (lp_related == kNegInf && lp_unrelated == kNegInf)
        throw Error(ErrorKind::MissingLogprobs, "neither label token has a log-probability");
    // exp(a) / (exp(a) + exp(b)) == 1 / (1 + exp(b - a)), stable for large magnitudes.
    double p;
    if (lp_unrelated == kNegInf) {
        p = 1.0;
    } else if (lp_related == kNegInf) {
        p = 0.0;
    } else {
        p = 1.0 / (1.0 + std::exp(lp_unrelated - lp_related));
    }
    return classification_from_probability(p);
}

ClassificationResult classification_from_first_token(const TokenLogprob& first) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    double related = kNegInf;
    double unrelated = kNegInf;
    auto consider = [&](const std::string& token, double lp) {
        const auto word = trim(token);
        if (word == "related") related = std::max(related, lp);
        if (word == "unrelated") unrelated = std::max(unrelated, lp);
    };
    consider(first.token, first.logprob);
    for (const auto& [token, lp] : first.top) consider(token, lp);
    if (related == kNegInf && unrelated == kNegInf)
        throw Error(ErrorKind::MissingLogprobs, "first token carries no label log-probabilities");
    return classification_from_logprobs(related, unrelated);
}

ClassificationResult classify_via_completion(Backend& backend, const std::string& model, const std::string& prompt) {
    CompletionRequest request;
    request.model = model;
    request.prompt = prompt;
    request.max_tokens = 1;
    request.temperature = 0.0;
    request.logprobs = 2;
    const auto response = backend.complete(request);
    if (response.token_logprobs.empty() || response.token_logprobs.front().empty())
        throw Error(ErrorKind::MissingLogprobs, "response for model " + model + " lacks token log-probabilities");
    return classification_from_first_token(response.token_logprobs.front().front());
}

std::string_view base_model_class_name(BaseModelClass base) noexcept {
    return base == BaseModelClass::Generator ? "generator" : "classifier";
}

std::string_view job_status_name(JobStatus status) noexcept {
    switch (status) {
        case JobStatus::Pending: return "pending";
        case JobStatus::Running: return "running";
        case JobStatus::Succeeded: return "succeeded";
        case JobStatus::Failed: return "failed";
    }
    return "unknown";
}

std::size_t check_finetune_dataset(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw Error(ErrorKind::InvalidDataset, "dataset not readable: " + path.string());
    }
    std::istringstream in(text);
    std::string line;
    std::size_t count = 0;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        try {
            const auto object = nlohmann::json::parse(line);
            if (!object.is_object() || !object.contains("prompt") || !object.contains("completion") ||
                !object["prompt"].is_string() || !object["completion"].is_string())
                throw Error(ErrorKind::InvalidDataset, "");
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidDataset,
                        path.string() + ": line " + std::to_string(number) + " is not a prompt/completion object");
        }
        ++count;
    }
    if (count == 0) throw Error(ErrorKind::InvalidDataset, path.string() + ": no examples");
    return count;
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, std::max(0, retry - 1));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

bool RetryPolicy::retryable_status(int http_status) noexcept {
    return http_status == 429 || (http_status >= 500 && http_status <= 599);
}

}  // namespace bidforge
