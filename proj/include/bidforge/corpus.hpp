#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

// One innovation sample: the problem description (benefits, applications,
// challenge), the engineered solution, and the biological analogy behind it.
struct InnovationRecord {
    std::string id;
    std::vector<std::string> benefits;
    std::vector<std::string> applications;
    std::string challenge;  // may be empty; sparse entries are allowed at load time
    std::string innovation;
    std::string biomimicry;

    bool operator==(const InnovationRecord&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

// Empty iff the record satisfies every per-record invariant.
std::vector<Violation> validate_record(const InnovationRecord& record);

enum class CorpusFormat { Json, Csv };

// ".csv" selects Csv, anything else Json.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

struct Corpus {
    std::vector<InnovationRecord> records;
    std::string source_path;
    std::chrono::system_clock::time_point loaded_at{};

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    const InnovationRecord* find(std::string_view id) const noexcept;
};

// Loads and validates a corpus file. Field values are trimmed; record order
// follows the file. Throws Error{Io}, ParseError (with line) or
// Error{Validation} naming the first failing record.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path);

Corpus parse_corpus(std::string_view text, CorpusFormat format, std::string source = {});

std::string serialize_corpus(const std::vector<InnovationRecord>& records, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);

}  // namespace bidforge
