#include "textalpha/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "textalpha/common.hpp"

namespace textalpha {

namespace {

// Decodes one UTF-8 code point; malformed bytes decode as U+FFFD.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Letters and digits in ASCII, Latin-1, Latin Extended-A/B, Greek, Cyrillic, and
// the CJK/Hangul blocks; everything else separates tokens.
bool is_alnum(char32_t c) {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_digit(c);
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x370 && c <= 0x3FF) return c != 0x37E && c != 0x387;
  if (c >= 0x400 && c <= 0x52F) return c < 0x482 || c > 0x489;
  if (c >= 0x3040 && c <= 0x9FFF) return true;
  if (c >= 0xAC00 && c <= 0xD7A3) return true;
  return false;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    // Latin Extended-A alternates upper/lower, with two parity shifts.
    if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x178) return 0xFF;
    if (c == 0x130 || c == 0x138 || c == 0x149 || c == 0x17F) return c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t length = 0;
  bool all_digits = true;
  auto flush = [&]() {
    if (length == 0) return;
    if (all_digits) {
      tokens.emplace_back(kNumToken);
    } else if (length > 1) {
      tokens.push_back(current);
    }
    current.clear();
    length = 0;
    all_digits = true;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode(text, i);
    if (!is_alnum(cp)) {
      flush();
      continue;
    }
    encode(to_lower(cp), current);
    ++length;
    all_digits = all_digits && is_digit(cp);
  }
  flush();
  return tokens;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [_, v] : entries) s += v * v;
  return std::sqrt(s);
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_freq)
    : terms_(std::move(terms)), doc_freq_(std::move(doc_freq)) {
  if (terms_.size() != doc_freq_.size()) throw DataError("vocabulary: terms/df length mismatch");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], i).second) throw DataError("vocabulary: duplicate term '" + terms_[i] + "'");
  }
}

std::ptrdiff_t Vocabulary::index_of(const std::string& term) const {
  auto it = index_.find(term);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

TfidfModel::TfidfModel(Vocabulary vocab, std::size_t n_docs) : vocab_(std::move(vocab)), n_docs_(n_docs) {
  idf_.reserve(vocab_.size());
  for (auto df : vocab_.doc_freq()) {
    idf_.push_back(std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df))) + 1.0);
  }
}

TfidfModel TfidfModel::fit(const std::vector<std::vector<std::string>>& documents, const TfidfSettings& settings) {
  if (documents.empty()) throw DataError("tf-idf fit: empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string_view> seen(doc.begin(), doc.end());
    for (auto term : seen) ++df[std::string(term)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [term, count] : df) {
    if (count >= settings.min_df) ranked.emplace_back(term, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > settings.max_vocab) ranked.resize(settings.max_vocab);
  std::vector<std::string> terms;
  std::vector<std::size_t> dfs;
  for (auto& [term, count] : ranked) {
    terms.push_back(std::move(term));
    dfs.push_back(count);
  }
  return TfidfModel(Vocabulary(std::move(terms), std::move(dfs)), documents.size());
}

SparseVector TfidfModel::transform(const std::vector<std::string>& tokens) const {
  std::map<std::size_t, double> counts;
  for (const auto& t : tokens) {
    const auto idx = vocab_.index_of(t);
    if (idx >= 0) counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  SparseVector v;
  v.dim = vocab_.size();
  for (const auto& [idx, count] : counts) v.entries.emplace_back(idx, count * idf_[idx]);
  const double n = v.norm();
  if (n > 0.0) {
    for (auto& [_, value] : v.entries) value /= n;
  }
  return v;
}

std::string TfidfModel::to_json() const {
  nlohmann::ordered_json j;
  j["n_docs"] = n_docs_;
  j["terms"] = vocab_.terms();
  j["df"] = vocab_.doc_freq();
  j["idf"] = idf_;
  return j.dump();
}

TfidfModel TfidfModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TfidfModel m(Vocabulary(j.at("terms").get<std::vector<std::string>>(), j.at("df").get<std::vector<std::size_t>>()),
                 j.at("n_docs").get<std::size_t>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tf-idf model: ") + e.what());
  }
}

}  // namespace textalpha
