#include "bidforge/remote_backend.hpp"

#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <semaphore>
#include <thread>

namespace bidforge {

namespace {

using json = nlohmann::json;

struct BaseUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path part without trailing '/'
};

BaseUrl split_base_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    BaseUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

std::string excerpt(const std::string& body) {
    auto text = body.substr(0, 200);
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

JobStatus parse_status(const std::string& status) {
    if (status == "succeeded") return JobStatus::Succeeded;
    if (status == "running") return JobStatus::Running;
    if (status == "failed" || status == "cancelled") return JobStatus::Failed;
    return JobStatus::Pending;
}

}  // namespace

struct RemoteBackend::Impl {
    explicit Impl(std::size_t limit) : in_flight(static_cast<std::ptrdiff_t>(limit)) {}

    std::counting_semaphore<1024> in_flight;
    std::mutex jobs_mutex;
    std::map<std::string, FineTuneJob> jobs;
};

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
    options_.in_flight = std::clamp<std::size_t>(options_.in_flight, 1, 1024);
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    impl_ = std::make_unique<Impl>(options_.in_flight);
}

RemoteBackend::~RemoteBackend() = default;

namespace {

struct HttpCall {
    std::string method;  // "GET" or "POST"
    std::string path;
    std::string body;
    std::string content_type = "application/json";
    const httplib::MultipartFormDataItems* multipart = nullptr;
};

json perform(const RemoteOptions& options, std::counting_semaphore<1024>& gate, const HttpCall& call) {
    const auto base = split_base_url(options.base_url);
    const auto path = base.prefix + call.path;
    httplib::Headers headers{{"Idempotency-Key", to_hex(StableHasher().add(call.method).add(path).add(call.body).digest())}};
    if (!options.api_key.empty()) headers.emplace("Authorization", "Bearer " + options.api_key);

    const auto seconds = static_cast<time_t>(options.timeout_s);
    const auto micros = static_cast<time_t>((options.timeout_s - static_cast<double>(seconds)) * 1e6);

    for (int attempt = 1;; ++attempt) {
        httplib::Result result{nullptr, httplib::Error::Unknown};
        {
            gate.acquire();
            httplib::Client client(base.origin);
            client.set_connection_timeout(seconds, micros);
            client.set_read_timeout(seconds, micros);
            client.set_write_timeout(seconds, micros);
            if (call.method == "GET") {
                result = client.Get(path, headers);
            } else if (call.multipart) {
                result = client.Post(path, headers, *call.multipart);
            } else {
                result = client.Post(path, headers, call.body, call.content_type);
            }
            gate.release();
        }

        if (!result) {
            const auto error = result.error();
            if (error == httplib::Error::Read || error == httplib::Error::Write ||
                error == httplib::Error::ConnectionTimeout) {
                throw Error(ErrorKind::Timeout, call.method + " " + path + ": " + httplib::to_string(error));
            }
            throw Error(ErrorKind::Backend, call.method + " " + path + ": " + httplib::to_string(error));
        }

        const int status = result->status;
        if (status >= 200 && status < 300) {
            try {
                return json::parse(result->body);
            } catch (const json::parse_error&) {
                throw Error(ErrorKind::Backend, "http " + std::to_string(status) + ": response is not JSON: " +
                                                    excerpt(result->body));
            }
        }
        if (RetryPolicy::retryable_status(status) && attempt < options.retry.max_attempts) {
            options.sleep(options.retry.delay(attempt));
            continue;
        }
        const auto kind = status == 429 ? ErrorKind::RateLimited : ErrorKind::Backend;
        throw Error(kind, "http " + std::to_string(status) + ": " + excerpt(result->body));
    }
}

}  // namespace

CompletionResponse RemoteBackend::complete(const CompletionRequest& request) {
    validate_request(request);
    json body{{"model", request.model},
              {"prompt", request.prompt},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature},
              {"n", request.n},
              {"stop", request.stop}};
    if (request.logprobs > 0) body["logprobs"] = request.logprobs;

    const auto reply = perform(options_, impl_->in_flight,
                               {"POST", options_.endpoints.completions, body.dump(), "application/json", nullptr});
    if (!reply.contains("choices") || !reply["choices"].is_array())
        throw Error(ErrorKind::Backend, "completion response lacks choices");

    const auto& choices = reply["choices"];
    if (choices.size() != static_cast<std::size_t>(request.n))
        throw Error(ErrorKind::Backend, "expected " + std::to_string(request.n) + " choices, got " +
                                            std::to_string(choices.size()));

    std::vector<const json*> ordered(choices.size(), nullptr);
    for (std::size_t i = 0; i < choices.size(); ++i) {
        const auto index = choices[i].value("index", i);
        if (index >= ordered.size() || ordered[index]) throw Error(ErrorKind::Backend, "completion choice indices are inconsistent");
        ordered[index] = &choices[i];
    }

    CompletionResponse response;
    for (const auto* choice : ordered) {
        if (!choice->contains("text") || !(*choice)["text"].is_string())
            throw Error(ErrorKind::Backend, "completion choice lacks text");
        response.texts.push_back(truncate_at_stop((*choice)["text"].get<std::string>(), request.stop));
        if (request.logprobs <= 0) continue;

        std::vector<TokenLogprob> tokens;
        const auto lp = choice->value("logprobs", json());
        if (lp.is_object() && lp.contains("tokens") && lp["tokens"].is_array()) {
            const auto& names = lp["tokens"];
            const auto& values = lp.value("token_logprobs", json::array());
            const auto& tops = lp.value("top_logprobs", json::array());
            for (std::size_t t = 0; t < names.size(); ++t) {
                TokenLogprob token;
                token.token = names[t].get<std::string>();
                if (t < values.size() && values[t].is_number()) token.logprob = values[t].get<double>();
                if (t < tops.size() && tops[t].is_object()) {
                    for (const auto& [alt, value] : tops[t].items()) {
                        if (value.is_number()) token.top[alt] = value.get<double>();
                    }
                }
                tokens.push_back(std::move(token));
            }
        }
        response.token_logprobs.push_back(std::move(tokens));
    }
    return response;
}

ClassificationResult RemoteBackend::classify(const std::string& model, const std::string& prompt) {
    return classify_via_completion(*this, model, prompt);
}

std::string RemoteBackend::submit_finetune(const FineTuneJob& job) {
    if (job.epochs < 1) throw Error(ErrorKind::Precondition, "epochs must be at least 1");
    check_finetune_dataset(job.dataset_path);
    if (!job.validation_path.empty()) check_finetune_dataset(job.validation_path);

    auto upload = [&](const std::filesystem::path& path) {
        const httplib::MultipartFormDataItems items{
            {"purpose", "fine-tune", "", ""},
            {"file", read_file(path), path.filename().string(), "application/jsonl"}};
        HttpCall call{"POST", options_.endpoints.files, read_file(path), "", &items};
        const auto reply = perform(options_, impl_->in_flight, call);
        if (!reply.contains("id")) throw Error(ErrorKind::Backend, "file upload response lacks id");
        return reply["id"].get<std::string>();
    };

    json body{{"training_file", upload(job.dataset_path)},
              {"model", job.base_model == BaseModelClass::Generator ? options_.generator_base_model
                                                                    : options_.classifier_base_model},
              {"n_epochs", job.epochs},
              {"batch_size", job.batch_size}};
    if (!job.validation_path.empty()) body["validation_file"] = upload(job.validation_path);
    if (job.base_model == BaseModelClass::Classifier) {
        body["compute_classification_metrics"] = true;
        body["classification_positive_class"] = label_completion(Label::Related);
    }

    const auto reply = perform(options_, impl_->in_flight,
                               {"POST", options_.endpoints.fine_tunes, body.dump(), "application/json", nullptr});
    if (!reply.contains("id")) throw Error(ErrorKind::Backend, "fine-tune response lacks id");

    FineTuneJob registered = job;
    registered.job_id = reply["id"].get<std::string>();
    registered.status = parse_status(reply.value("status", "pending"));
    std::lock_guard lock(impl_->jobs_mutex);
    impl_->jobs[registered.job_id] = registered;
    return registered.job_id;
}

FineTuneJob RemoteBackend::poll_finetune(const std::string& job_id) {
    const auto reply = perform(options_, impl_->in_flight,
                               {"GET", options_.endpoints.fine_tunes + "/" + job_id, "", "", nullptr});
    std::lock_guard lock(impl_->jobs_mutex);
    auto& job = impl_->jobs[job_id];
    job.job_id = job_id;
    job.status = parse_status(reply.value("status", "pending"));
    if (reply.contains("fine_tuned_model") && reply["fine_tuned_model"].is_string())
        job.fine_tuned_model = reply["fine_tuned_model"].get<std::string>();
    if (reply.contains("validation_accuracy") && reply["validation_accuracy"].is_array()) {
        job.per_epoch_validation_accuracy.clear();
        for (const auto& value : reply["validation_accuracy"]) {
            if (value.is_number()) job.per_epoch_validation_accuracy.push_back(value.get<double>());
        }
    }
    if (job.status == JobStatus::Failed) {
        job.failure_reason = "remote job failed";
        if (reply.contains("error")) {
            const auto& error = reply["error"];
            if (error.is_string()) job.failure_reason = error.get<std::string>();
            else if (error.is_object() && error.contains("message") && error["message"].is_string())
                job.failure_reason = error["message"].get<std::string>();
        }
    }
    return job;
}

}  // namespace bidforge
