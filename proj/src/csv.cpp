#include "textalpha/csv.hpp"

#include "textalpha/common.hpp"

namespace textalpha::csv {

std::optional<std::vector<std::string>> Reader::next() {
  std::string physical;
  while (true) {
    if (!std::getline(in_, physical)) return std::nullopt;
    ++line_;
    if (!physical.empty() && physical.back() == '\r') physical.pop_back();
    if (physical.empty() || physical.front() == '#') continue;
    break;
  }
  record_line_ = line_;

  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == physical.size()) {
      if (!quoted) break;
      // Line break inside a quoted field.
      if (!std::getline(in_, physical)) {
        throw DataError("unterminated quoted field starting at line " + std::to_string(record_line_));
      }
      ++line_;
      if (!physical.empty() && physical.back() == '\r') physical.pop_back();
      field.push_back('\n');
      i = 0;
      continue;
    }
    const char c = physical[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < physical.size() && physical[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace textalpha::csv
