#include "bidforge/corpus.hpp"

#include "bidforge/csv.hpp"
#include "bidforge/error.hpp"
#include "bidforge/text.hpp"

#include <algorithm>
#include <array>
#include <json.hpp>
#include <map>
#include <unordered_set>

namespace bidforge {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kFields = {
    "id", "benefits", "applications", "challenge", "innovation", "biomimicry"};

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line on which each element of the top-level JSON array starts.
std::vector<std::size_t> element_lines(std::string_view text) {
    std::vector<std::size_t> lines;
    std::size_t line = 1;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    bool expecting_element = false;
    for (char c : text) {
        if (c == '\n') ++line;
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (depth == 1 && expecting_element && c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != ']') {
            lines.push_back(line);
            expecting_element = false;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '[':
            case '{':
                ++depth;
                if (depth == 1) expecting_element = true;
                break;
            case ']':
            case '}': --depth; break;
            case ',':
                if (depth == 1) expecting_element = true;
                break;
            default: break;
        }
    }
    return lines;
}

std::vector<std::string> keyword_list(const ordered_json& value, const std::string& field, std::size_t line) {
    if (!value.is_array()) throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be an array of strings", line);
    std::vector<std::string> out;
    for (const auto& item : value) {
        if (!item.is_string()) throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must contain only strings", line);
        out.push_back(trim(item.get<std::string>()));
    }
    return out;
}

std::string text_field(const ordered_json& value, const std::string& field, std::size_t line) {
    if (value.is_null()) return {};
    if (!value.is_string()) throw ParseError("line " + std::to_string(line) + ": field '" + field + "' must be a string", line);
    return trim(value.get<std::string>());
}

std::vector<InnovationRecord> parse_json_records(std::string_view text) {
    if (trim(text).empty()) throw ParseError("corpus contains no records", 1);
    ordered_json doc;
    try {
        doc = ordered_json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const auto line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError("line " + std::to_string(line) + ": malformed JSON: " + e.what(), line);
    }
    if (!doc.is_array()) throw ParseError("line 1: corpus must be a JSON array of records", 1);
    if (doc.empty()) throw ParseError("corpus contains no records", 1);

    const auto lines = element_lines(text);
    std::vector<InnovationRecord> records;
    records.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& object = doc[i];
        const std::size_t line = i < lines.size() ? lines[i] : 0;
        const auto where = "line " + std::to_string(line) + ": record " + std::to_string(i + 1);
        if (!object.is_object()) throw ParseError(where + " is not an object", line);
        for (const auto& [key, _] : object.items()) {
            if (std::find(kFields.begin(), kFields.end(), key) == kFields.end())
                throw ParseError(where + " has unknown field '" + key + "'", line);
        }
        for (auto field : kFields) {
            if (!object.contains(std::string(field)))
                throw ParseError(where + " is missing field '" + std::string(field) + "'", line);
        }
        InnovationRecord record;
        record.id = text_field(object["id"], "id", line);
        record.benefits = keyword_list(object["benefits"], "benefits", line);
        record.applications = keyword_list(object["applications"], "applications", line);
        record.challenge = text_field(object["challenge"], "challenge", line);
        record.innovation = text_field(object["innovation"], "innovation", line);
        record.biomimicry = text_field(object["biomimicry"], "biomimicry", line);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<std::string> split_keywords(std::string_view cell) {
    if (trim(cell).empty()) return {};
    std::vector<std::string> out;
    for (auto& part : split(cell, ";")) out.push_back(trim(part));
    return out;
}

std::vector<InnovationRecord> parse_csv_records(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw ParseError("corpus contains no records", 1);

    const auto& header = rows.front();
    std::map<std::string, std::size_t> column;
    for (std::size_t c = 0; c < header.fields.size(); ++c) {
        const auto name = trim(header.fields[c]);
        if (std::find(kFields.begin(), kFields.end(), name) == kFields.end())
            throw ParseError("line " + std::to_string(header.line) + ": unknown column '" + name + "'", header.line);
        if (!column.emplace(name, c).second)
            throw ParseError("line " + std::to_string(header.line) + ": duplicate column '" + name + "'", header.line);
    }
    for (auto field : kFields) {
        if (!column.count(std::string(field)))
            throw ParseError("line " + std::to_string(header.line) + ": missing column '" + std::string(field) + "'", header.line);
    }
    if (rows.size() == 1) throw ParseError("corpus contains no records", header.line);

    std::vector<InnovationRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.fields.size()) {
            throw ParseError("line " + std::to_string(row.line) + ": expected " + std::to_string(header.fields.size()) +
                                 " fields, found " + std::to_string(row.fields.size()),
                             row.line);
        }
        auto cell = [&](const char* name) -> const std::string& { return row.fields[column.at(name)]; };
        InnovationRecord record;
        record.id = trim(cell("id"));
        record.benefits = split_keywords(cell("benefits"));
        record.applications = split_keywords(cell("applications"));
        record.challenge = trim(cell("challenge"));
        record.innovation = trim(cell("innovation"));
        record.biomimicry = trim(cell("biomimicry"));
        records.push_back(std::move(record));
    }
    return records;
}

void validate_corpus(const std::vector<InnovationRecord>& records) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& record = records[i];
        const auto label = record.id.empty() ? "#" + std::to_string(i + 1) : record.id;
        const auto violations = validate_record(record);
        if (!violations.empty()) {
            throw Error(ErrorKind::Validation,
                        "record " + label + ": " + violations.front().field + ": " + violations.front().rule);
        }
        if (!seen.insert(record.id).second)
            throw Error(ErrorKind::Validation, "record " + label + ": id: duplicate id");
    }
}

}  // namespace

std::vector<Violation> validate_record(const InnovationRecord& record) {
    std::vector<Violation> violations;
    if (trim(record.id).empty()) violations.push_back({"id", "must be non-empty"});
    for (const auto& keyword : record.benefits) {
        if (trim(keyword).empty()) {
            violations.push_back({"benefits", "keywords must be non-empty"});
            break;
        }
    }
    for (const auto& keyword : record.applications) {
        if (trim(keyword).empty()) {
            violations.push_back({"applications", "keywords must be non-empty"});
            break;
        }
    }
    if (trim(record.innovation).empty()) violations.push_back({"innovation", "must be non-empty"});
    if (trim(record.biomimicry).empty()) violations.push_back({"biomimicry", "must be non-empty"});
    return violations;
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
    return to_lower(path.extension().string()) == ".csv" ? CorpusFormat::Csv : CorpusFormat::Json;
}

const InnovationRecord* Corpus::find(std::string_view id) const noexcept {
    for (const auto& record : records) {
        if (record.id == id) return &record;
    }
    return nullptr;
}

Corpus parse_corpus(std::string_view text, CorpusFormat format, std::string source) {
    Corpus corpus;
    corpus.records = format == CorpusFormat::Json ? parse_json_records(text) : parse_csv_records(text);
    validate_corpus(corpus.records);
    corpus.source_path = std::move(source);
    corpus.loaded_at = std::chrono::system_clock::now();
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    return parse_corpus(read_file(path), format, path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, corpus_format_for(path));
}

std::string serialize_corpus(const std::vector<InnovationRecord>& records, CorpusFormat format) {
    std::string out;
    if (format == CorpusFormat::Json) {
        out = "[\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            ordered_json object;
            object["id"] = r.id;
            object["benefits"] = r.benefits;
            object["applications"] = r.applications;
            object["challenge"] = r.challenge;
            object["innovation"] = r.innovation;
            object["biomimicry"] = r.biomimicry;
            out += "  " + object.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
            out += i + 1 < records.size() ? ",\n" : "\n";
        }
        out += "]\n";
        return out;
    }

    out = csv_line({kFields.begin(), kFields.end()});
    for (const auto& r : records) {
        for (const auto* list : {&r.benefits, &r.applications}) {
            for (const auto& keyword : *list) {
                if (keyword.find(';') != std::string::npos)
                    throw Error(ErrorKind::Validation, "record " + r.id + ": keyword '" + keyword + "' contains ';' and cannot be stored as CSV");
            }
        }
        out += csv_line({r.id, join(r.benefits, "; "), join(r.applications, "; "), r.challenge, r.innovation, r.biomimicry});
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
    write_file(path, serialize_corpus(corpus.records, format));
}

}  // namespace bidforge
