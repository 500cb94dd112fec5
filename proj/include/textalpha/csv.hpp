#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace textalpha::csv {

/// RFC-4180 record reader. Quoted fields may span lines; `""` escapes a quote.
/// Lines starting with '#' outside a record are skipped (artifact provenance).
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws DataError on an
  /// unterminated quoted field.
  std::optional<std::vector<std::string>> next();

  /// 1-based physical line where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Quote a field if it contains a comma, quote, or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace textalpha::csv
