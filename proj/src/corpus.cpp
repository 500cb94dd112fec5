#include "textalpha/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "textalpha/csv.hpp"
#include "textalpha/io.hpp"

namespace textalpha {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

void check_document(const Document& d) {
  if (d.id.empty()) throw DataError("document with empty id");
  if (!is_valid_ticker(d.ticker)) throw DataError("document " + d.id + ": invalid ticker '" + d.ticker + "'");
  if (trim(d.text).empty()) throw DataError("document " + d.id + ": empty text");
}

std::string default_id(const std::string& ticker, Date date, const std::string& text) {
  return ticker + ":" + format_date(date) + ":" + hex64(fnv1a64(text)).substr(0, 10);
}

struct RawRow {
  std::size_t line;
  std::string id, ticker, date, source, title, text;
};

Corpus build(std::vector<RawRow> rows) {
  std::vector<Document> docs;
  std::set<std::tuple<std::string, Date, std::string>> seen;
  std::set<std::string> ids;
  for (auto& row : rows) {
    const auto where = "line " + std::to_string(row.line) + ": ";
    Document d;
    try {
      d.ticker = upper(trim(row.ticker));
      d.date = parse_date(trim(row.date));
      d.source = parse_source(trim(row.source));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    d.title = std::move(row.title);
    d.text = std::move(row.text);
    if (!is_valid_ticker(d.ticker)) throw DataError(where + "invalid ticker '" + d.ticker + "'");
    if (trim(d.text).empty()) throw DataError(where + "empty text");
    if (!seen.emplace(d.ticker, d.date, d.text).second) continue;
    d.id = row.id.empty() ? default_id(d.ticker, d.date, d.text) : row.id;
    if (!ids.insert(d.id).second) {
      if (!row.id.empty()) throw DataError(where + "duplicate id '" + d.id + "'");
      // Hash collision on a generated id.
      std::size_t k = 1;
      while (!ids.insert(d.id + "~" + std::to_string(k)).second) ++k;
      d.id += "~" + std::to_string(k);
    }
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

std::vector<RawRow> read_csv(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw DataError("empty document file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[std::string(trim((*header)[i]))] = i;
  for (const char* required : {"ticker", "date", "source", "title", "text"}) {
    if (!col.count(required)) throw DataError(std::string("missing column '") + required + "'");
  }
  const bool has_id = col.count("id") > 0;
  std::vector<RawRow> rows;
  while (auto rec = reader.next()) {
    if (rec->size() != header->size()) {
      throw DataError("line " + std::to_string(reader.line()) + ": expected " + std::to_string(header->size()) +
                      " fields, got " + std::to_string(rec->size()));
    }
    RawRow r;
    r.line = reader.line();
    if (has_id) r.id = (*rec)[col["id"]];
    r.ticker = (*rec)[col["ticker"]];
    r.date = (*rec)[col["date"]];
    r.source = (*rec)[col["source"]];
    r.title = (*rec)[col["title"]];
    r.text = (*rec)[col["text"]];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RawRow> read_jsonl(std::string_view contents) {
  std::vector<RawRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    auto line = trim(contents.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == contents.size()) break;
      continue;
    }
    const auto where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(where + "expected a JSON object");
    RawRow r;
    r.line = line_no;
    auto field = [&](const char* name, bool required) -> std::string {
      auto it = j.find(name);
      if (it == j.end()) {
        if (required) throw DataError(where + "missing field '" + name + "'");
        return {};
      }
      if (!it->is_string()) throw DataError(where + "field '" + name + "' must be a string");
      return it->get<std::string>();
    };
    r.id = field("id", false);
    r.ticker = field("ticker", true);
    r.date = field("date", true);
    r.source = field("source", true);
    r.title = field("title", true);
    r.text = field("text", true);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

SourceKind parse_source(std::string_view text) {
  if (text == "news") return SourceKind::News;
  if (text == "blogs" || text == "blog") return SourceKind::Blog;
  if (text == "report" || text == "reports") return SourceKind::Report;
  throw DataError("unknown source kind '" + std::string(text) + "'");
}

std::string_view source_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::News: return "news";
    case SourceKind::Blog: return "blogs";
    case SourceKind::Report: return "report";
  }
  return "?";
}

bool is_valid_ticker(std::string_view ticker) {
  if (ticker.empty() || ticker.size() > 6) return false;
  return std::all_of(ticker.begin(), ticker.end(), [](char c) { return (c >= 'A' && c <= 'Z') || c == '.'; });
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& d = documents_[i];
    check_document(d);
    if (!by_id_.emplace(d.id, i).second) throw DataError("duplicate document id '" + d.id + "'");
    by_ticker_[d.ticker].push_back(i);
  }
}

const Document* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &documents_[it->second];
}

const std::vector<std::size_t>& Corpus::positions_for(const std::string& ticker) const {
  static const std::vector<std::size_t> none;
  auto it = by_ticker_.find(ticker);
  return it == by_ticker_.end() ? none : it->second;
}

std::vector<std::string> Corpus::tickers() const {
  std::vector<std::string> out;
  out.reserve(by_ticker_.size());
  for (const auto& [t, _] : by_ticker_) out.push_back(t);
  return out;
}

DocumentFormat format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DocumentFormat::Csv;
  if (ext == ".jsonl" || ext == ".json") return DocumentFormat::Jsonl;
  throw UsageError("cannot infer document format from '" + path.string() + "' (use .csv or .jsonl)");
}

Corpus parse_documents(std::string_view contents, DocumentFormat format) {
  return build(format == DocumentFormat::Csv ? read_csv(contents) : read_jsonl(contents));
}

Corpus load_documents(const std::filesystem::path& path, DocumentFormat format) {
  if (!std::filesystem::exists(path)) throw DataError("document file not found: " + path.string());
  return parse_documents(io::read_file(path), format);
}

std::string serialize_documents(const Corpus& corpus, DocumentFormat format) {
  std::string out;
  if (format == DocumentFormat::Csv) {
    out = "id,ticker,date,source,title,text\n";
    for (const auto& d : corpus.documents()) {
      out += csv::join({d.id, d.ticker, format_date(d.date), std::string(source_name(d.source)), d.title, d.text});
      out += '\n';
    }
  } else {
    for (const auto& d : corpus.documents()) {
      nlohmann::ordered_json j;
      j["id"] = d.id;
      j["ticker"] = d.ticker;
      j["date"] = format_date(d.date);
      j["source"] = source_name(d.source);
      j["title"] = d.title;
      j["text"] = d.text;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<std::string> split_report_paragraphs(std::string_view report_text, std::size_t min_chars) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    if (end > start && end - start >= min_chars) out.emplace_back(report_text.substr(start, end - start));
  };
  while (i < report_text.size()) {
    if (report_text[i] == '\n' && i + 1 < report_text.size() && report_text[i + 1] == '\n') {
      flush(i);
      while (i < report_text.size() && report_text[i] == '\n') ++i;
      start = i;
    } else {
      ++i;
    }
  }
  flush(report_text.size());
  return out;
}

Corpus expand_reports(const Corpus& corpus, std::size_t min_chars) {
  std::vector<Document> out;
  for (const auto& d : corpus.documents()) {
    if (d.source != SourceKind::Report) {
      out.push_back(d);
      continue;
    }
    std::size_t k = 0;
    for (auto& para : split_report_paragraphs(d.text, min_chars)) {
      if (trim(para).empty()) continue;
      Document p = d;
      p.id = d.id + "#p" + std::to_string(k++);
      p.text = std::move(para);
      out.push_back(std::move(p));
    }
  }
  return Corpus(std::move(out));
}

CoverageSelection select_top_covered(const Corpus& corpus, std::size_t n, std::size_t min_items) {
  if (n < 1) throw UsageError("select_top_covered: n must be >= 1");
  CoverageSelection sel;
  for (const auto& d : corpus.documents()) {
    if (d.source != SourceKind::Report) ++sel.coverage[d.ticker];
  }
  if (sel.coverage.size() < n) {
    throw DataError("corpus covers " + std::to_string(sel.coverage.size()) + " tickers, fewer than the " +
                    std::to_string(n) + " requested");
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(sel.coverage.begin(), sel.coverage.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  ranked.resize(n);
  for (const auto& [ticker, count] : ranked) {
    sel.tickers.push_back(ticker);
    if (count < min_items) {
      sel.warnings.push_back(ticker + " has " + std::to_string(count) + " items, below the floor of " +
                             std::to_string(min_items));
    }
  }
  return sel;
}

Corpus filter_years(const Corpus& corpus, int from_year, int to_year) {
  if (from_year > to_year) throw UsageError("filter_years: from_year > to_year");
  return corpus.filter([&](const Document& d) {
    const int y = year_of(d.date);
    return y >= from_year && y <= to_year;
  });
}

Corpus restrict_tickers(const Corpus& corpus, const std::set<std::string>& tickers) {
  return corpus.filter([&](const Document& d) { return tickers.count(d.ticker) > 0; });
}

}  // namespace textalpha
