#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace bidforge {

enum class EmbeddingFormat { Text, Binary };

// ".bin" selects Binary, anything else Text.
EmbeddingFormat embedding_format_for(const std::filesystem::path& path);

// Read-only token -> vector table. Vectors are held in double precision so
// that derived stores (scaled copies) are exact to double rounding.
class EmbeddingStore {
public:
    using Entry = std::pair<std::string, std::vector<double>>;

    EmbeddingStore() = default;

    // Throws DimensionMismatch for a vector of the wrong length and Format
    // for a duplicate or empty token.
    static EmbeddingStore from_entries(std::size_t dimension, const std::vector<Entry>& entries);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool contains(std::string_view token) const;

    // Empty span if the token is not in the vocabulary.
    std::span<const double> vector(std::string_view token) const;

    // Tokens in file order.
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    // Copy with every vector multiplied by factor.
    EmbeddingStore scaled(double factor) const;

private:
    std::size_t dimension_ = 0;
    std::vector<std::string> tokens_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingLoadOptions {
    // When set, only these tokens are kept (the rest of the file is still
    // validated). Useful with multi-gigabyte pretrained files.
    const std::unordered_set<std::string>* keep = nullptr;
};

// word2vec text: "<count> <dim>" header, then one "token v1 ... vd" line per entry.
EmbeddingStore parse_embeddings_text(std::string_view data, const EmbeddingLoadOptions& options = {});

// word2vec binary: the same header line, then per entry the token, a space,
// and dim little-endian float32 values, optionally followed by a newline.
EmbeddingStore parse_embeddings_binary(std::string_view data, const EmbeddingLoadOptions& options = {});

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               const EmbeddingLoadOptions& options = {});

std::string embeddings_to_text(const EmbeddingStore& store);
std::string embeddings_to_binary(const EmbeddingStore& store);

}  // namespace bidforge
