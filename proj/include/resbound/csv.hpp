#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace resbound {

inline constexpr const char* kVersion = "0.1.0";

/// Ordered `# key: value` header lines of every CSV the toolkit writes.
using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& os, const Metadata& meta);

/// Splits a line on commas (no quoting; the toolkit never emits quoted fields).
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses "key: value" from a metadata line; false when the line is not one.
bool parse_metadata_line(const std::string& line, std::string& key, std::string& value);

}  // namespace resbound
