#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codecause {

using CsvRow = std::vector<std::string>;

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);

/// RFC 4180 reader; quoted fields may span lines. Throws DataError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);

}  // namespace codecause
