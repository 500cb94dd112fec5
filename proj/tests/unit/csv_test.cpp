#include <gtest/gtest.h>

#include <sstream>

#include "textalpha/common.hpp"
#include "textalpha/csv.hpp"

using namespace textalpha;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  csv::Reader r(in);
  std::vector<std::vector<std::string>> out;
  while (auto rec = r.next()) out.push_back(*rec);
  return out;
}

}  // namespace

TEST(Csv, QuotedFieldsMaySpanLines) {
  const auto rows = read_all("a,b\n\"x, y\",\"line1\nline2 \"\"q\"\"\"\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "x, y");
  EXPECT_EQ(rows[1][1], "line1\nline2 \"q\"");
}

TEST(Csv, SkipsCommentLinesAndHandlesCrlf) {
  const auto rows = read_all("# provenance\r\na,b\r\n1,2\r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "2"}));
}

TEST(Csv, ReportsRecordStartLine) {
  std::istringstream in("h\n\"multi\nline\"\nlast\n");
  csv::Reader r(in);
  r.next();
  r.next();
  r.next();
  EXPECT_EQ(r.line(), 4u);
}

TEST(Csv, UnterminatedQuoteIsDataError) {
  EXPECT_THROW(read_all("a\n\"open\n"), DataError);
}

TEST(Csv, EscapeJoinRoundTrip) {
  const std::vector<std::string> fields{"plain", "com,ma", "quo\"te", "new\nline", ""};
  const auto rows = read_all(csv::join(fields) + "\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], fields);
}
