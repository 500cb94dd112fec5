#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textalpha/common.hpp"
#include "textalpha/corpus.hpp"
#include "textalpha/market.hpp"
#include "textalpha/rng.hpp"

namespace textalpha::fixture {

/// Class keywords planted into synthetic documents.
const std::vector<std::string>& class_keywords(PerformanceClass c);
/// Deterministic filler vocabulary (pseudo-words, none of them keywords).
const std::vector<std::string>& filler_words();

struct LabeledText {
  std::string text;
  PerformanceClass label = PerformanceClass::Average;
};

struct KeywordCorpusSpec {
  std::size_t n = 600;
  /// Probability a document carries keywords of its own class; otherwise its
  /// keywords come from a uniformly random class.
  double signal = 1.0;
  std::size_t min_words = 18;
  std::size_t max_words = 28;
  std::size_t keywords_per_doc = 2;
  bool shuffle_labels = false;
  std::uint64_t seed = 1;
};

/// Balanced labels (n/3 per class, remainder to the lowest classes), shuffled order.
std::vector<LabeledText> keyword_corpus(const KeywordCorpusSpec& spec);

/// Text with `signal`-probability keywords for `label`, drawn from `rng`.
std::string planted_text(PerformanceClass label, double signal, std::size_t words, std::size_t keywords, Rng& rng);

struct MarketFixtureSpec {
  std::size_t n_firms = 24;
  int first_year = 2012;
  int last_year = 2019;
  int price_first_year = 2011;
  int price_last_year = 2021;
  std::size_t news_per_firm_year = 6;
  std::size_t blogs_per_firm_year = 6;
  std::size_t report_paragraphs = 5;
  double news_signal = 0.85;
  double blog_signal = 0.55;
  double report_signal = 0.25;
  double annual_drift_sd = 0.25;
  double daily_vol = 0.012;
  int horizon_days = 365;
  std::uint64_t seed = 7;
};

struct MarketFixture {
  Corpus corpus;
  PriceTable prices;
};

/// Geometric random-walk prices on weekdays with per-firm, per-year drifts,
/// plus news, blog, and annual-report documents whose planted keywords follow
/// each document's realised one-year abnormal-return tertile.
MarketFixture market_fixture(const MarketFixtureSpec& spec);

/// Prices for `tickers` on weekdays in [first, last] with a seeded random walk.
PriceTable random_walk_prices(const std::vector<std::string>& tickers, Date first, Date last, double daily_vol,
                              std::uint64_t seed);

}  // namespace textalpha::fixture
