#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace bidforge {

using StopwordSet = std::unordered_set<std::string>;

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view separator);
std::vector<std::string> split(std::string_view text, std::string_view separator);

// Lowercased maximal runs of ASCII letters; everything else separates tokens.
std::vector<std::string> alpha_tokens(std::string_view text);

// Built-in English stopword list (the same list ships as data/stopwords_en.txt).
const StopwordSet& default_stopwords();

// One word per line; blank lines and '#' comments ignored; words lowercased.
StopwordSet load_stopwords(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Shortest round-trippable decimal form, stable across platforms.
std::string format_double(double value);

}  // namespace bidforge
