#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace usual::csv {

// A comma-separated table with a header row. Fields are kept as text;
// double quotes around a field are stripped, embedded commas inside
// quotes are honoured.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws SchemaError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read(const std::string& path);
Table parse(std::istream& in, const std::string& source_name = "<stream>");

std::vector<std::string> split_line(std::string_view line);

// Parses a numeric field; throws ValidationError naming the location.
double to_double(const std::string& field, const std::string& where);

// Shortest round-trip decimal representation of a double.
std::string format(double value);

// Writes a header row followed by rows of already formatted fields.
void write(const std::string& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

}  // namespace usual::csv
