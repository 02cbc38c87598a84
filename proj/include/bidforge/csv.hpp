#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

struct CsvRow {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line
// breaks. Blank lines are skipped. Throws ParseError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);

// Quotes the field only when it needs it.
std::string csv_field(std::string_view value);

std::string csv_line(const std::vector<std::string>& fields);

}  // namespace bidforge
