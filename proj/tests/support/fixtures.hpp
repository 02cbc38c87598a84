#pragma once

#include "bidforge/config.hpp"
#include "bidforge/corpus.hpp"
#include "bidforge/embeddings.hpp"
#include "bidforge/hash.hpp"
#include "bidforge/wmd.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bidforge::testing {

// Deterministic biology-to-design records with every field populated. Each
// record's biomimicry and innovation share the organism and feature words.
Corpus synthetic_corpus(std::size_t size, std::uint64_t seed, const std::string& id_prefix = "rec");

// Every word the synthetic corpus generator can emit (lowercase, alphabetic).
std::vector<std::string> fixture_vocabulary();

// Pseudo-random vectors keyed by (seed, token); the same token always gets
// the same vector for a given seed.
EmbeddingStore synthetic_embeddings(const std::vector<std::string>& tokens, std::size_t dimension, std::uint64_t seed);

// "w00".."w<count-1>" with synthetic vectors.
EmbeddingStore token_embeddings(std::size_t count, std::size_t dimension, std::uint64_t seed);

// Between 1 and max_tokens distinct store tokens with random positive
// weights summing to one.
NBowDocument random_document(SeededRng& rng, const EmbeddingStore& store, std::size_t max_tokens);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Mock-backend config text with all seven model ids, a fixed timestamp and
// the given paths (absolute).
std::string mock_config_text(const std::filesystem::path& corpus, const std::filesystem::path& embeddings,
                             const std::filesystem::path& out, std::uint64_t seed);

std::filesystem::path data_dir();

}  // namespace bidforge::testing
