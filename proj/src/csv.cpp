#include "resbound/csv.hpp"

#include <ostream>

namespace resbound {

void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << ": " << v << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_metadata_line(const std::string& line, std::string& key, std::string& value) {
  if (line.empty() || line[0] != '#') return false;
  const auto colon = line.find(':');
  if (colon == std::string::npos) return false;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  key = trim(line.substr(1, colon - 1));
  value = trim(line.substr(colon + 1));
  return !key.empty();
}

}  // namespace resbound
