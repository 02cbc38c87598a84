#include "bidforge/config.hpp"

#include "bidforge/error.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/text.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>

namespace bidforge {

namespace {

struct BadValue {
    std::string reason;
};

template <class T>
T parse_integer(const std::string& value) {
    T out{};
    const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) throw BadValue{"expected a non-negative integer"};
    return out;
}

double parse_real(const std::string& value) {
    double out = 0.0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size() || !std::isfinite(out))
        throw BadValue{"expected a number"};
    return out;
}

std::size_t parse_count(const std::string& value) {
    return parse_integer<std::size_t>(value);
}

Fraction parse_fraction(const std::string& value) {
    const auto slash = value.find('/');
    if (slash == std::string::npos) throw BadValue{"expected a fraction such as 4/5"};
    Fraction f{parse_integer<std::int64_t>(trim(value.substr(0, slash))),
               parse_integer<std::int64_t>(trim(value.substr(slash + 1)))};
    if (f.denominator <= 0 || f.numerator <= 0 || f.numerator >= f.denominator)
        throw BadValue{"fraction must lie strictly between 0 and 1"};
    return f;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::filesystem::path&)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

Setter model_setter(ModelKind kind) {
    return [kind](PipelineConfig& c, const std::string& v, const std::filesystem::path&) { c.models[kind] = v; };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["corpus.path"] = [](auto& c, const auto& v, const auto& base) { c.corpus_path = resolve(base, v); };
        t["corpus.format"] = [](auto& c, const auto& v, const auto&) {
            if (v == "json") c.corpus_format = CorpusFormat::Json;
            else if (v == "csv") c.corpus_format = CorpusFormat::Csv;
            else throw BadValue{"expected json or csv"};
        };
        t["backend.kind"] = [](auto& c, const auto& v, const auto&) {
            if (v == "mock") c.backend = BackendKind::Mock;
            else if (v == "remote") c.backend = BackendKind::Remote;
            else throw BadValue{"expected mock or remote"};
        };
        t["api_base_url"] = [](auto& c, const auto& v, const auto&) { c.api_base_url = v; };
        t["endpoints.completions"] = [](auto& c, const auto& v, const auto&) { c.endpoints.completions = v; };
        t["endpoints.files"] = [](auto& c, const auto& v, const auto&) { c.endpoints.files = v; };
        t["endpoints.fine_tunes"] = [](auto& c, const auto& v, const auto&) { c.endpoints.fine_tunes = v; };
        for (auto kind : kAllModelKinds) t["models." + std::string(model_kind_name(kind))] = model_setter(kind);
        t["limits.in_flight"] = [](auto& c, const auto& v, const auto&) {
            c.in_flight = parse_count(v);
            if (c.in_flight == 0) throw BadValue{"must be at least 1"};
        };
        t["limits.timeout_s"] = [](auto& c, const auto& v, const auto&) {
            c.timeout_s = parse_real(v);
            if (c.timeout_s <= 0) throw BadValue{"must be positive"};
        };
        t["generation.n"] = [](auto& c, const auto& v, const auto&) {
            c.generation_n = parse_count(v);
            if (c.generation_n == 0) throw BadValue{"must be at least 1"};
        };
        t["generation.temperature"] = [](auto& c, const auto& v, const auto&) {
            c.temperature = parse_real(v);
            if (c.temperature < 0) throw BadValue{"must be non-negative"};
        };
        t["generation.budget"] = [](auto& c, const auto& v, const auto&) { c.budget = parse_count(v); };
        t["generation.max_tokens"] = [](auto& c, const auto& v, const auto&) {
            c.max_tokens = parse_integer<int>(v);
            if (c.max_tokens < 1) throw BadValue{"must be at least 1"};
        };
        t["evaluator.threshold"] = [](auto&, const auto& v, const auto&) {
            if (parse_real(v) != 0.5) throw BadValue{"the relevancy threshold is fixed at 0.5"};
        };
        t["embeddings.path"] = [](auto& c, const auto& v, const auto& base) { c.embeddings_path = resolve(base, v); };
        t["embeddings.format"] = [](auto& c, const auto& v, const auto&) {
            if (v == "text") c.embeddings_format = EmbeddingFormat::Text;
            else if (v == "binary") c.embeddings_format = EmbeddingFormat::Binary;
            else throw BadValue{"expected text or binary"};
        };
        t["stopwords.path"] = [](auto& c, const auto& v, const auto& base) { c.stopwords_path = resolve(base, v); };
        t["lexicon.path"] = [](auto& c, const auto& v, const auto& base) { c.lexicon_path = resolve(base, v); };
        t["diversity.baseline_path"] = [](auto& c, const auto& v, const auto& base) { c.baseline_path = resolve(base, v); };
        t["wmd.ground_metric"] = [](auto& c, const auto& v, const auto&) {
            try {
                c.ground_metric = parse_ground_metric(v);
            } catch (const Error&) {
                throw BadValue{"expected euclidean or cosine"};
            }
        };
        t["output.dir"] = [](auto& c, const auto& v, const auto& base) { c.output_dir = resolve(base, v); };
        t["seed"] = [](auto& c, const auto& v, const auto&) { c.seed = parse_integer<std::uint64_t>(v); };
        t["run.timestamp"] = [](auto& c, const auto& v, const auto&) { c.timestamp = v; };
        t["mock.malformed_permille"] = [](auto& c, const auto& v, const auto&) {
            c.mock_malformed_permille = parse_integer<unsigned>(v);
            if (c.mock_malformed_permille > 1000) throw BadValue{"must be at most 1000"};
        };
        t["mock.finetune_delay_ms"] = [](auto& c, const auto& v, const auto&) {
            c.mock_finetune_delay_ms = parse_integer<std::uint64_t>(v);
        };
        t["finetune.epochs"] = [](auto& c, const auto& v, const auto&) {
            c.finetune_epochs = parse_integer<int>(v);
            if (c.finetune_epochs < 1) throw BadValue{"must be at least 1"};
        };
        t["finetune.generator_base"] = [](auto& c, const auto& v, const auto&) { c.generator_base = v; };
        t["finetune.classifier_base"] = [](auto& c, const auto& v, const auto&) { c.classifier_base = v; };
        t["finetune.poll_interval_ms"] = [](auto& c, const auto& v, const auto&) {
            c.finetune_poll_ms = parse_integer<std::uint64_t>(v);
        };
        t["finetune.max_wait_s"] = [](auto& c, const auto& v, const auto&) {
            c.finetune_max_wait_s = parse_integer<std::uint64_t>(v);
        };
        t["split.train_fraction"] = [](auto& c, const auto& v, const auto&) { c.train_fraction = parse_fraction(v); };
        return t;
    }();
    return table;
}

std::string unquote(std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') return value.substr(1, value.size() - 2);
    return value;
}

}  // namespace

const std::string* PipelineConfig::model(ModelKind kind) const {
    const auto it = models.find(kind);
    return it == models.end() ? nullptr : &it->second;
}

std::string PipelineConfig::require_model(ModelKind kind) const {
    if (const auto* id = model(kind)) return *id;
    throw Error(ErrorKind::Config, "models." + std::string(model_kind_name(kind)) + " is not configured");
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    PipelineConfig config;
    std::size_t line_number = 0;
    for (const auto& raw : split(text, "\n")) {
        ++line_number;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto where = "line " + std::to_string(line_number) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Config, where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = unquote(trim(line.substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw Error(ErrorKind::Config, where + "unknown key '" + key + "'");
        if (config.entries.count(key)) throw Error(ErrorKind::Config, where + "duplicate key '" + key + "'");
        try {
            it->second(config, value, base_dir);
        } catch (const BadValue& bad) {
            throw Error(ErrorKind::Config, where + key + ": " + bad.reason);
        }
        config.entries[key] = value;
    }
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return parse_config(text, std::filesystem::absolute(path).parent_path());
}

void apply_environment(PipelineConfig& config) {
    if (const char* key = std::getenv("BIDFORGE_API_KEY")) config.api_key = key;
}

void set_seed(PipelineConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.entries["seed"] = std::to_string(seed);
}

void set_output_dir(PipelineConfig& config, const std::filesystem::path& dir) {
    config.output_dir = dir;
    config.entries["output.dir"] = dir.string();
}

std::string config_hash(const PipelineConfig& config) {
    StableHasher hasher;
    for (const auto& [key, value] : config.entries) {
        // Where results land does not change what they are.
        if (key == "output.dir") continue;
        hasher.add(key).add(value);
    }
    return to_hex(hasher.digest());
}

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace bidforge
