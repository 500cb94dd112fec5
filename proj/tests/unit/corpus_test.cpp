#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "textalpha/corpus.hpp"
#include "textalpha/io.hpp"
#include "textalpha/rng.hpp"

using namespace textalpha;

namespace {

const char* kHeader = "ticker,date,source,title,text\n";

Document doc(const std::string& ticker, const std::string& date, SourceKind src, const std::string& text,
             const std::string& id = {}) {
  Document d;
  d.id = id.empty() ? ticker + "-" + date + "-" + text : id;
  d.ticker = ticker;
  d.date = parse_date(date);
  d.source = src;
  d.text = text;
  return d;
}

Corpus coverage_corpus(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<Document> docs;
  for (const auto& [t, n] : counts) {
    for (int i = 0; i < n; ++i) docs.push_back(doc(t, "2015-01-01", i % 2 ? SourceKind::Blog : SourceKind::News, "t" + std::to_string(i)));
  }
  return Corpus(docs);
}

}  // namespace

TEST(LoadDocuments, ThreeRowsThreeDocuments) {
  const auto c = parse_documents(std::string(kHeader) +
                                     "AAPL,2015-03-02,news,Title,Apple beats\n"
                                     "msft,2015-03-03,blogs,,\"Quoted, text\"\n"
                                     "BRK.B,2016-01-04,report,10-K,Item 1.\n",
                                 DocumentFormat::Csv);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.documents()[1].ticker, "MSFT");
  EXPECT_EQ(c.documents()[1].source, SourceKind::Blog);
  EXPECT_EQ(c.documents()[1].text, "Quoted, text");
  EXPECT_EQ(c.documents()[2].source, SourceKind::Report);
  EXPECT_EQ(c.positions_for("AAPL").size(), 1u);
}

TEST(LoadDocuments, IdenticalRowsAreDeduplicated) {
  const auto c = parse_documents(std::string(kHeader) + "AAPL,2015-03-02,news,T,same\nAAPL,2015-03-02,news,T,same\n",
                                 DocumentFormat::Csv);
  EXPECT_EQ(c.size(), 1u);
}

TEST(LoadDocuments, BadDateNamesLine) {
  try {
    parse_documents(std::string(kHeader) + "AAPL,2015-03-02,news,T,ok\nAAPL,2019-13-01,news,T,bad\n",
                    DocumentFormat::Csv);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadDocuments, UnknownSourceIsDataError) {
  EXPECT_THROW(parse_documents(std::string(kHeader) + "AAPL,2015-03-02,tweets,T,x\n", DocumentFormat::Csv), DataError);
}

TEST(LoadDocuments, MissingColumnIsDataError) {
  EXPECT_THROW(parse_documents("ticker,date,source,text\nAAPL,2015-03-02,news,x\n", DocumentFormat::Csv), DataError);
}

TEST(LoadDocuments, InvalidTickerAndEmptyText) {
  EXPECT_THROW(parse_documents(std::string(kHeader) + "TOOLONGX,2015-03-02,news,T,x\n", DocumentFormat::Csv), DataError);
  EXPECT_THROW(parse_documents(std::string(kHeader) + "AAPL,2015-03-02,news,T,\"  \"\n", DocumentFormat::Csv), DataError);
}

TEST(LoadDocuments, JsonLinesWithCommentsAndErrors) {
  const auto c = parse_documents(
      "# provenance\n{\"ticker\":\"IBM\",\"date\":\"2014-05-05\",\"source\":\"news\",\"title\":\"\",\"text\":\"ü text\"}\n",
      DocumentFormat::Jsonl);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.documents()[0].text, "ü text");
  EXPECT_THROW(parse_documents("{not json}\n", DocumentFormat::Jsonl), DataError);
  EXPECT_THROW(parse_documents("{\"ticker\":\"IBM\"}\n", DocumentFormat::Jsonl), DataError);
}

TEST(LoadDocuments, MissingFileIsDataError) {
  EXPECT_THROW(load_documents("/nonexistent/docs.csv", DocumentFormat::Csv), DataError);
  EXPECT_EQ(format_for("a.jsonl"), DocumentFormat::Jsonl);
  EXPECT_THROW(format_for("a.txt"), UsageError);
}

TEST(LoadDocuments, SerializeRoundTripBothFormats) {
  const Corpus c({doc("AAPL", "2015-03-02", SourceKind::News, "line one\nline \"two\", three"),
                  doc("X.Y", "2013-12-31", SourceKind::Report, "para\n\npara", "custom#id")});
  for (auto fmt : {DocumentFormat::Csv, DocumentFormat::Jsonl}) {
    const auto back = parse_documents(serialize_documents(c, fmt), fmt);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& a = c.documents()[i];
      const auto& b = back.documents()[i];
      EXPECT_EQ(a.id, b.id);
      EXPECT_EQ(a.ticker, b.ticker);
      EXPECT_EQ(a.date, b.date);
      EXPECT_EQ(a.source, b.source);
      EXPECT_EQ(a.title, b.title);
      EXPECT_EQ(a.text, b.text);
    }
  }
}

TEST(Corpus, DuplicateIdsRejected) {
  EXPECT_THROW(Corpus({doc("A", "2015-01-01", SourceKind::News, "x", "id"), doc("B", "2015-01-01", SourceKind::News, "y", "id")}),
               DataError);
}

TEST(Paragraphs, BlankLineSeparates) {
  EXPECT_EQ(split_report_paragraphs("A\n\nB", 1), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(split_report_paragraphs("A\nB", 1), (std::vector<std::string>{"A\nB"}));
  EXPECT_EQ(split_report_paragraphs("A\n\n\n\nB\n\n", 1), (std::vector<std::string>{"A", "B"}));
  EXPECT_TRUE(split_report_paragraphs("", 1).empty());
}

TEST(Paragraphs, TenParagraphFixtureDropsThreeShort) {
  std::vector<std::string> paras;
  std::string text;
  for (int i = 0; i < 10; ++i) {
    const bool shortp = i == 1 || i == 4 || i == 8;
    std::string p = "Paragraph " + std::to_string(i) + " ";
    p += std::string(shortp ? 20 : 230, 'a' + static_cast<char>(i));
    if (!shortp) paras.push_back(p);
    text += p;
    if (i < 9) text += "\n\n";
  }
  EXPECT_EQ(split_report_paragraphs(text, 200), paras);
}

TEST(Paragraphs, OutputsAreContiguousSubstrings) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    for (int i = 0; i < 200; ++i) {
      const auto r = rng.below(10);
      text += r < 2 ? '\n' : static_cast<char>('a' + r);
    }
    std::size_t pos = 0;
    for (const auto& p : split_report_paragraphs(text, 3)) {
      const auto at = text.find(p, pos);
      ASSERT_NE(at, std::string::npos);
      pos = at + p.size();
    }
  }
}

TEST(Paragraphs, ExpandReportsKeepsOtherSources) {
  const std::string longp(210, 'x');
  const Corpus c({doc("A", "2015-01-01", SourceKind::News, "news"),
                  doc("A", "2015-03-01", SourceKind::Report, longp + "\n\nshort\n\n" + longp, "r")});
  const auto e = expand_reports(c, 200);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e.documents()[1].id, "r#p0");
  EXPECT_EQ(e.documents()[2].id, "r#p1");
  EXPECT_EQ(e.documents()[2].date, parse_date("2015-03-01"));
}

TEST(Coverage, CountsAndTieBreak) {
  auto sel = select_top_covered(coverage_corpus({{"A", 5}, {"B", 3}, {"C", 1}}), 2, 1);
  EXPECT_EQ(sel.tickers, (std::vector<std::string>{"A", "B"}));
  EXPECT_TRUE(sel.warnings.empty());
  sel = select_top_covered(coverage_corpus({{"B", 2}, {"A", 2}}), 1, 1);
  EXPECT_EQ(sel.tickers, (std::vector<std::string>{"A"}));
}

TEST(Coverage, WarnsBelowFloorAndErrorsWhenTooFew) {
  const auto sel = select_top_covered(coverage_corpus({{"A", 5}, {"B", 3}}), 2, 4);
  ASSERT_EQ(sel.warnings.size(), 1u);
  EXPECT_NE(sel.warnings[0].find("B"), std::string::npos);
  EXPECT_THROW(select_top_covered(coverage_corpus({{"A", 5}}), 2, 1), DataError);
}

TEST(Coverage, ReportsDoNotCount) {
  std::vector<Document> docs{doc("A", "2015-01-01", SourceKind::News, "n"), doc("B", "2015-01-01", SourceKind::Report, "r1"),
                             doc("B", "2016-01-01", SourceKind::Report, "r2")};
  EXPECT_THROW(select_top_covered(Corpus(docs), 2, 1), DataError);
}

TEST(Coverage, IndependentOfDocumentOrderAndIdempotent) {
  auto c = coverage_corpus({{"A", 4}, {"B", 6}, {"C", 4}, {"D", 2}});
  auto docs = c.documents();
  Rng rng(11);
  rng.shuffle(docs);
  const auto a = select_top_covered(c, 3, 1);
  const auto b = select_top_covered(Corpus(docs), 3, 1);
  EXPECT_EQ(a.tickers, b.tickers);
  const auto again = select_top_covered(restrict_tickers(c, {a.tickers.begin(), a.tickers.end()}), 3, 1);
  EXPECT_EQ(again.tickers, a.tickers);
}

TEST(FilterYears, BoundariesInclusive) {
  const Corpus c({doc("A", "2011-12-31", SourceKind::News, "a"), doc("A", "2012-01-01", SourceKind::News, "b"),
                  doc("A", "2019-12-31", SourceKind::News, "c")});
  EXPECT_EQ(filter_years(c, 2012, 2019).size(), 2u);
  EXPECT_TRUE(filter_years(c, 2000, 2001).empty());
  EXPECT_THROW(filter_years(c, 2019, 2012), UsageError);
}

TEST(FilterYears, HundredDocFixtureKeepsForty) {
  std::vector<Document> docs;
  for (int i = 0; i < 100; ++i) {
    const int year = i < 40 ? 2013 + i % 3 : (i % 2 ? 2010 : 2020);
    docs.push_back(doc("A", std::to_string(year) + "-06-15", SourceKind::News, "d" + std::to_string(i)));
  }
  EXPECT_EQ(filter_years(Corpus(docs), 2012, 2019).size(), 40u);
}

TEST(Tickers, Pattern) {
  EXPECT_TRUE(is_valid_ticker("BRK.B"));
  EXPECT_FALSE(is_valid_ticker(""));
  EXPECT_FALSE(is_valid_ticker("abc"));
  EXPECT_FALSE(is_valid_ticker("A1"));
  EXPECT_FALSE(is_valid_ticker("ABCDEFG"));
}
