#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace faceq::csv {

struct Table {
  std::vector<std::string> header;
  // Data rows in file order; row i came from data line i + 1 (header is line 0).
  std::vector<std::vector<std::string>> rows;
  std::string source;
};

// Comment lines starting with '#' and blank lines are skipped. Fields are not
// quoted; identifiers must not contain commas.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source = "<memory>");

std::vector<std::string> split(std::string_view line);

// Shortest representation that parses back to the identical double.
std::string format(double value);
double parse_double(std::string_view field, const std::string& context);
bool parse_bool(std::string_view field, const std::string& context);

// Throws MalformedRow unless `header` begins with `expected`.
void expect_header(const Table& table, const std::vector<std::string>& expected);

void check_token(std::string_view token, const std::string& what);

void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace faceq::csv
