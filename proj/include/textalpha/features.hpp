#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace textalpha {

/// Lowercase, split on every non-alphanumeric code point, map pure digit runs
/// to "<num>", drop other single-character tokens.
std::vector<std::string> tokenize(std::string_view text);

inline constexpr const char* kNumToken = "<num>";

/// Sorted (index, value) pairs over a dimension; indices strictly increasing.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::size_t, double>> entries;

  double norm() const;
  bool empty() const { return entries.empty(); }
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_freq);

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  /// -1 when unknown.
  std::ptrdiff_t index_of(const std::string& term) const;

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> doc_freq_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TfidfSettings {
  std::size_t max_vocab = 50000;
  std::size_t min_df = 2;
};

class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(Vocabulary vocab, std::size_t n_docs);

  /// Vocabulary = top max_vocab terms by document frequency (ties by term),
  /// restricted to df >= min_df; idf(t) = ln((1+N)/(1+df(t))) + 1.
  /// Throws DataError on an empty corpus.
  static TfidfModel fit(const std::vector<std::vector<std::string>>& documents, const TfidfSettings& settings = {});

  /// Raw counts times idf, L2-normalised; unknown tokens ignored.
  SparseVector transform(const std::vector<std::string>& tokens) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t n_docs() const { return n_docs_; }
  std::size_t dim() const { return vocab_.size(); }

  std::string to_json() const;
  static TfidfModel from_json(const std::string& text);

 private:
  Vocabulary vocab_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
};

}  // namespace textalpha
