#include <filesystem>

#include "doctest.h"

#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/util.hpp"

using namespace codecause;

TEST_CASE("dates parse, format and reject impossible values") {
  CHECK(parse_date("2022-01-02") == Date{2022, 1, 2});
  CHECK(format_date(Date{2023, 1, 1}) == "2023-01-01");
  CHECK(parse_date("2024-02-29") == Date{2024, 2, 29});
  CHECK_THROWS_AS(parse_date("2023-02-29"), DataError);
  CHECK_THROWS_AS(parse_date("2023-13-01"), DataError);
  CHECK_THROWS_AS(parse_date("23-01-01"), DataError);
}

TEST_CASE("timestamps are UTC seconds") {
  // 2022-01-01T00:00:00Z is 1640995200.
  CHECK(parse_timestamp("2022-01-02T00:00:00Z").seconds == 1640995200 + 86400);
  CHECK(parse_timestamp("2022-01-02T01:30:00+01:30").seconds == 1640995200 + 86400);
  CHECK(parse_timestamp("2022-01-01T23:00:00-02:00").date() == Date{2022, 1, 2});
  CHECK(parse_timestamp("2022-01-02T00:00:00.250Z").seconds == 1640995200 + 86400);
  CHECK(format_timestamp(Timestamp{1640995200}) == "2022-01-01T00:00:00Z");
  CHECK(timestamp_from_date(Date{1970, 1, 2}).seconds == 86400);
  CHECK_THROWS_AS(parse_timestamp("2022-01-02"), DataError);
}

TEST_CASE("sha256 matches the FIPS test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("string helpers") {
  CHECK(split_lines("a\nb\n\nc\n") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(trim("  x y \t") == "x y");
  CHECK(to_lower("AbC") == "abc");
  CHECK(is_valid_utf8("caf\xc3\xa9"));
  CHECK_FALSE(is_valid_utf8("\xff\xfe"));
  CHECK(format_fixed(2.005, 2).size() == 4);
  CHECK(format_fixed(-0.5, 1) == "-0.5");
  CHECK(format_fixed(3.14159, 3) == "3.142");
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 12345.678}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS_AS(parse_double("1.0x"), DataError);
}

TEST_CASE("csv quoting round-trips") {
  const CsvRow row = {"plain", "a,b", "say \"hi\"", "two\nlines", ""};
  const auto parsed = parse_csv(csv_line(row) + csv_line({"x", "y"}));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == row);
  CHECK(parsed[1] == CsvRow{"x", "y"});
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_line({"a", "b"}) == "a,b\n");
  CHECK_THROWS_AS(parse_csv("\"open"), DataError);
}

TEST_CASE("atomic writes replace the whole file") {
  const auto dir = std::filesystem::temp_directory_path() / "codecause_util_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto file = dir / "out.txt";
  write_file_atomic(file, "first version, longer");
  write_file_atomic(file, "second");
  CHECK(read_file(file) == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
}
