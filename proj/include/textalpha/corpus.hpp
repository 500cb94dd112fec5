#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "textalpha/common.hpp"

namespace textalpha {

enum class SourceKind { News, Blog, Report };

/// "news" | "blogs" | "report"; throws DataError otherwise.
SourceKind parse_source(std::string_view text);
std::string_view source_name(SourceKind kind);

struct Document {
  std::string id;
  std::string ticker;
  Date date;
  SourceKind source = SourceKind::News;
  std::string title;
  std::string text;

  bool operator==(const Document&) const = default;
};

bool is_valid_ticker(std::string_view ticker);

/// Immutable, ordered document collection with a ticker index.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DataError on duplicate ids or documents violating Document invariants.
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  const Document* find(std::string_view id) const;
  /// Positions into documents(), in collection order.
  const std::vector<std::size_t>& positions_for(const std::string& ticker) const;
  std::vector<std::string> tickers() const;

  template <typename Pred>
  Corpus filter(Pred&& keep) const {
    std::vector<Document> kept;
    for (const auto& d : documents_) {
      if (keep(d)) kept.push_back(d);
    }
    return Corpus(std::move(kept));
  }

 private:
  std::vector<Document> documents_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_ticker_;
};

enum class DocumentFormat { Csv, Jsonl };

/// Format from the file extension (.csv / .jsonl / .json).
DocumentFormat format_for(const std::filesystem::path& path);

/// One Document per row/line; exact (ticker, date, text) duplicates dropped.
/// Rows without an `id` column get `<ticker>-<line>`.
Corpus load_documents(const std::filesystem::path& path, DocumentFormat format);
Corpus parse_documents(std::string_view contents, DocumentFormat format);

std::string serialize_documents(const Corpus& corpus, DocumentFormat format);

/// Paragraphs are maximal runs separated by two or more consecutive newlines;
/// paragraphs shorter than `min_chars` bytes are dropped.
std::vector<std::string> split_report_paragraphs(std::string_view report_text, std::size_t min_chars = 200);

/// Replace every report Document with one Document per retained paragraph
/// (id `<id>#p<k>`, k counting retained paragraphs from 0).
Corpus expand_reports(const Corpus& corpus, std::size_t min_chars = 200);

struct CoverageSelection {
  std::vector<std::string> tickers;  // ranked by coverage, then ticker
  std::map<std::string, std::size_t> coverage;
  std::vector<std::string> warnings;
};

/// The `n` tickers with the most news+blog documents; ties by ticker order.
/// Throws DataError when fewer than `n` tickers have coverage.
CoverageSelection select_top_covered(const Corpus& corpus, std::size_t n, std::size_t min_items = 170);

/// Documents with from_year <= year <= to_year.
Corpus filter_years(const Corpus& corpus, int from_year, int to_year);

Corpus restrict_tickers(const Corpus& corpus, const std::set<std::string>& tickers);

}  // namespace textalpha
