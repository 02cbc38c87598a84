#include "bidforge/embeddings.hpp"

#include "bidforge/error.hpp"
#include "bidforge/text.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>

namespace bidforge {

namespace {

struct Header {
    std::size_t count = 0;
    std::size_t dimension = 0;
    std::size_t end = 0;  // offset just past the header line
};

bool is_blank(char c) {
    return c == ' ' || c == '\t' || c == '\r';
}

Header parse_header(std::string_view data) {
    const auto newline = data.find('\n');
    if (newline == std::string_view::npos) throw FormatError("missing header line", 0);
    const auto line = data.substr(0, newline);
    Header header;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end && is_blank(*p)) ++p;
    auto r = std::from_chars(p, end, header.count);
    if (r.ec != std::errc()) throw FormatError("header must start with the entry count", static_cast<std::size_t>(p - data.data()));
    p = r.ptr;
    while (p < end && is_blank(*p)) ++p;
    r = std::from_chars(p, end, header.dimension);
    if (r.ec != std::errc() || header.dimension == 0)
        throw FormatError("header must declare a positive dimension", static_cast<std::size_t>(p - data.data()));
    p = r.ptr;
    while (p < end && is_blank(*p)) ++p;
    if (p != end) throw FormatError("unexpected text after header", static_cast<std::size_t>(p - data.data()));
    header.end = newline + 1;
    return header;
}

class Builder {
public:
    Builder(std::size_t dimension, const EmbeddingLoadOptions& options) : dimension_(dimension), options_(options) {}

    void add(std::string token, std::vector<double>&& values, std::size_t offset) {
        if (!seen_.insert(token).second) throw FormatError("duplicate token '" + token + "'", offset);
        if (options_.keep && !options_.keep->count(token)) return;
        entries_.emplace_back(std::move(token), std::move(values));
    }

    EmbeddingStore build() const { return EmbeddingStore::from_entries(dimension_, entries_); }

private:
    std::size_t dimension_;
    const EmbeddingLoadOptions& options_;
    std::unordered_set<std::string> seen_;
    std::vector<EmbeddingStore::Entry> entries_;
};

float load_le_float(const char* bytes) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes, sizeof raw);
    if constexpr (std::endian::native == std::endian::big) {
        raw = ((raw & 0xffu) << 24) | ((raw & 0xff00u) << 8) | ((raw >> 8) & 0xff00u) | (raw >> 24);
    }
    float value;
    std::memcpy(&value, &raw, sizeof value);
    return value;
}

void store_le_float(float value, std::string& out) {
    std::uint32_t raw;
    std::memcpy(&raw, &value, sizeof raw);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((raw >> (8 * i)) & 0xffu));
}

}  // namespace

EmbeddingFormat embedding_format_for(const std::filesystem::path& path) {
    return to_lower(path.extension().string()) == ".bin" ? EmbeddingFormat::Binary : EmbeddingFormat::Text;
}

EmbeddingStore EmbeddingStore::from_entries(std::size_t dimension, const std::vector<Entry>& entries) {
    EmbeddingStore store;
    store.dimension_ = dimension;
    store.tokens_.reserve(entries.size());
    store.data_.reserve(entries.size() * dimension);
    for (const auto& [token, values] : entries) {
        if (token.empty()) throw FormatError("empty token", 0);
        if (values.size() != dimension) {
            throw Error(ErrorKind::DimensionMismatch, "token '" + token + "' has " + std::to_string(values.size()) +
                                                          " components, expected " + std::to_string(dimension));
        }
        if (!store.index_.emplace(token, store.tokens_.size()).second)
            throw FormatError("duplicate token '" + token + "'", 0);
        store.tokens_.push_back(token);
        store.data_.insert(store.data_.end(), values.begin(), values.end());
    }
    return store;
}

bool EmbeddingStore::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

std::span<const double> EmbeddingStore::vector(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return {};
    return {data_.data() + it->second * dimension_, dimension_};
}

EmbeddingStore EmbeddingStore::scaled(double factor) const {
    EmbeddingStore copy = *this;
    for (auto& value : copy.data_) value *= factor;
    return copy;
}

EmbeddingStore parse_embeddings_text(std::string_view data, const EmbeddingLoadOptions& options) {
    const auto header = parse_header(data);
    Builder builder(header.dimension, options);
    std::size_t pos = header.end;
    std::size_t entries = 0;
    std::size_t line_number = 1;

    while (pos < data.size()) {
        auto newline = data.find('\n', pos);
        if (newline == std::string_view::npos) newline = data.size();
        const auto line = data.substr(pos, newline - pos);
        ++line_number;
        const auto line_offset = pos;
        pos = newline + 1;
        if (trim(line).empty()) continue;
        if (entries == header.count)
            throw FormatError("more entries than the declared " + std::to_string(header.count), line_offset);

        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end && is_blank(*p)) ++p;
        const char* token_begin = p;
        while (p < end && !is_blank(*p)) ++p;
        std::string token(token_begin, p);

        std::vector<double> values;
        values.reserve(header.dimension);
        while (true) {
            while (p < end && is_blank(*p)) ++p;
            if (p == end) break;
            double value = 0.0;
            const auto r = std::from_chars(p, end, value);
            if (r.ec != std::errc())
                throw FormatError("line " + std::to_string(line_number) + ": bad number", static_cast<std::size_t>(p - data.data()));
            values.push_back(value);
            p = r.ptr;
        }
        if (values.size() != header.dimension) {
            throw Error(ErrorKind::DimensionMismatch, "line " + std::to_string(line_number) + ": token '" + token + "' has " +
                                                          std::to_string(values.size()) + " components, expected " +
                                                          std::to_string(header.dimension));
        }
        builder.add(std::move(token), std::move(values), line_offset);
        ++entries;
    }
    if (entries != header.count) {
        throw FormatError("header declares " + std::to_string(header.count) + " entries but file has " +
                              std::to_string(entries),
                          data.size());
    }
    return builder.build();
}

EmbeddingStore parse_embeddings_binary(std::string_view data, const EmbeddingLoadOptions& options) {
    const auto header = parse_header(data);
    Builder builder(header.dimension, options);
    const std::size_t vector_bytes = header.dimension * sizeof(float);
    std::size_t pos = header.end;

    for (std::size_t entry = 0; entry < header.count; ++entry) {
        while (pos < data.size() && (data[pos] == '\n' || is_blank(data[pos]))) ++pos;
        const auto token_start = pos;
        while (pos < data.size() && data[pos] != ' ') ++pos;
        if (pos >= data.size())
            throw FormatError("entry " + std::to_string(entry + 1) + " of " + std::to_string(header.count) + " is truncated",
                              token_start);
        std::string token(data.substr(token_start, pos - token_start));
        ++pos;  // the space separating token and vector
        if (data.size() - pos < vector_bytes)
            throw FormatError("vector of token '" + token + "' is truncated", pos);
        std::vector<double> values(header.dimension);
        for (std::size_t d = 0; d < header.dimension; ++d) values[d] = load_le_float(data.data() + pos + d * sizeof(float));
        builder.add(std::move(token), std::move(values), token_start);
        pos += vector_bytes;
    }
    while (pos < data.size() && (data[pos] == '\n' || is_blank(data[pos]))) ++pos;
    if (pos != data.size()) throw FormatError("trailing data after the declared entries", pos);
    return builder.build();
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               const EmbeddingLoadOptions& options) {
    const auto data = read_file(path);
    return format == EmbeddingFormat::Text ? parse_embeddings_text(data, options)
                                           : parse_embeddings_binary(data, options);
}

std::string embeddings_to_text(const EmbeddingStore& store) {
    std::string out = std::to_string(store.size()) + " " + std::to_string(store.dimension()) + "\n";
    for (const auto& token : store.tokens()) {
        out += token;
        for (double value : store.vector(token)) {
            out.push_back(' ');
            out += format_double(value);
        }
        out.push_back('\n');
    }
    return out;
}

std::string embeddings_to_binary(const EmbeddingStore& store) {
    std::string out = std::to_string(store.size()) + " " + std::to_string(store.dimension()) + "\n";
    for (const auto& token : store.tokens()) {
        out += token;
        out.push_back(' ');
        for (double value : store.vector(token)) store_le_float(static_cast<float>(value), out);
        out.push_back('\n');
    }
    return out;
}

}  // namespace bidforge
