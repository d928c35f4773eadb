#include "faceq/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "faceq/error.hpp"

namespace faceq::csv {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

Table parse(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (!have_header) {
      table.header = split(line);
      have_header = true;
    } else {
      table.rows.push_back(split(line));
    }
    if (end == text.size()) break;
  }
  if (!have_header) {
    throw Error(ErrorCode::kMalformedRow, table.source + ": missing header row");
  }
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string format(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view field, const std::string& context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto result = std::from_chars(first, last, value);
  if (field.empty() || result.ec != std::errc() || result.ptr != last) {
    throw Error(ErrorCode::kMalformedRow,
                context + ": non-numeric value '" + std::string(field) + "'");
  }
  return value;
}

bool parse_bool(std::string_view field, const std::string& context) {
  if (field == "1" || field == "true" || field == "TRUE" || field == "True") return true;
  if (field == "0" || field == "false" || field == "FALSE" || field == "False") return false;
  throw Error(ErrorCode::kMalformedRow,
              context + ": expected boolean, got '" + std::string(field) + "'");
}

void expect_header(const Table& table, const std::vector<std::string>& expected) {
  bool ok = table.header.size() >= expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = table.header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (const auto& name : expected) want += (want.empty() ? "" : ",") + name;
    throw Error(ErrorCode::kMalformedRow, table.source + ": expected header '" + want + "'");
  }
}

void check_token(std::string_view token, const std::string& what) {
  if (token.empty() || token.find_first_of(",\n\r") != std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                what + " '" + std::string(token) + "' is empty or contains a separator");
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace faceq::csv
