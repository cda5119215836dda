#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace codecause {

/// Calendar date (proleptic Gregorian).
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;
  bool operator==(const Date&) const = default;
};

/// Seconds since the Unix epoch, always UTC.
struct Timestamp {
  std::int64_t seconds = 0;

  auto operator<=>(const Timestamp&) const = default;
  bool operator==(const Timestamp&) const = default;
  Date date() const;
};

/// Parses YYYY-MM-DD; throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

/// Parses YYYY-MM-DDTHH:MM:SS with optional fraction and a `Z` or ±HH:MM offset.
Timestamp parse_timestamp(std::string_view text);
/// Always emits YYYY-MM-DDTHH:MM:SSZ.
std::string format_timestamp(const Timestamp& t);
Timestamp timestamp_from_date(const Date& d);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_lines(std::string_view text);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_valid_utf8(std::string_view s);

/// Fixed-point decimal rendering independent of the global locale.
std::string format_fixed(double value, int decimals);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
/// Inverse of format_double; throws DataError on anything else.
double parse_double(std::string_view text);

}  // namespace codecause
