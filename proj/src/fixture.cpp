#include "textalpha/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace textalpha::fixture {

namespace {

bool is_weekday(Date d) {
  const auto wd = std::chrono::weekday{d}.c_encoding();
  return wd != 0 && wd != 6;
}

std::vector<Date> weekdays(Date first, Date last) {
  std::vector<Date> out;
  for (Date d = first; d <= last; d += std::chrono::days{1}) {
    if (is_weekday(d)) out.push_back(d);
  }
  return out;
}

std::string ticker_name(std::size_t i) {
  std::string t = "F";
  t.push_back(static_cast<char>('A' + (i / 26) % 26));
  t.push_back(static_cast<char>('A' + i % 26));
  return t;
}

const std::vector<std::string>& all_keywords() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v;
    for (int k = 0; k < kNumClasses; ++k) {
      const auto& kw = class_keywords(class_from_index(k));
      v.insert(v.end(), kw.begin(), kw.end());
    }
    return v;
  }();
  return all;
}

}  // namespace

const std::vector<std::string>& class_keywords(PerformanceClass c) {
  static const std::vector<std::string> under = {"slump", "downgrade", "writedown", "layoffs"};
  static const std::vector<std::string> average = {"steady", "inline", "unchanged", "stable"};
  static const std::vector<std::string> over = {"surge", "upgrade", "breakthrough", "outperform"};
  switch (c) {
    case PerformanceClass::Under: return under;
    case PerformanceClass::Average: return average;
    case PerformanceClass::Over: return over;
  }
  return average;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = [] {
    static const char* syllables[] = {"ba", "ko", "ri", "tu", "me", "sa", "lo", "ven", "dar", "pel", "qui", "zo",
                                      "ne", "fa", "gri", "mon", "tes", "cal", "ro", "di", "vo", "lin", "hep", "ur"};
    constexpr std::size_t n_syl = sizeof(syllables) / sizeof(syllables[0]);
    std::set<std::string> banned(all_keywords().begin(), all_keywords().end());
    std::vector<std::string> out;
    std::set<std::string> seen;
    Rng rng(0xF111E5);
    while (out.size() < 400) {
      const std::size_t parts = 2 + rng.below(2);
      std::string w;
      for (std::size_t p = 0; p < parts; ++p) w += syllables[rng.below(n_syl)];
      if (banned.count(w) || !seen.insert(w).second) continue;
      out.push_back(w);
    }
    return out;
  }();
  return words;
}

std::string planted_text(PerformanceClass label, double signal, std::size_t words, std::size_t keywords, Rng& rng) {
  const auto& filler = filler_words();
  std::vector<std::string> tokens;
  tokens.reserve(words + keywords);
  for (std::size_t i = 0; i < words; ++i) tokens.push_back(filler[rng.below(filler.size())]);
  const PerformanceClass source = rng.uniform() < signal ? label : class_from_index(static_cast<int>(rng.below(3)));
  const auto& kw = class_keywords(source);
  for (std::size_t i = 0; i < keywords; ++i) {
    const auto pos = rng.below(tokens.size() + 1);
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos), kw[rng.below(kw.size())]);
  }
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) text += (i % 11 == 0) ? ". " : " ";
    text += tokens[i];
  }
  text += ".";
  text[0] = static_cast<char>(text[0] - 'a' + 'A');
  return text;
}

std::vector<LabeledText> keyword_corpus(const KeywordCorpusSpec& spec) {
  Rng rng(spec.seed);
  std::vector<PerformanceClass> labels;
  for (std::size_t i = 0; i < spec.n; ++i) labels.push_back(class_from_index(static_cast<int>(i % kNumClasses)));
  rng.shuffle(labels);
  std::vector<LabeledText> out;
  out.reserve(spec.n);
  for (auto label : labels) {
    const std::size_t words = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
    out.push_back({planted_text(label, spec.signal, words, spec.keywords_per_doc, rng), label});
  }
  if (spec.shuffle_labels) {
    auto shuffled = labels;
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].label = shuffled[i];
  }
  return out;
}

PriceTable random_walk_prices(const std::vector<std::string>& tickers, Date first, Date last, double daily_vol,
                              std::uint64_t seed) {
  Rng rng(seed);
  const auto days = weekdays(first, last);
  PriceTable table;
  for (const auto& t : tickers) {
    double logp = std::log(20.0 + 80.0 * rng.uniform());
    std::vector<std::pair<Date, double>> pts;
    for (Date d : days) {
      logp += daily_vol * rng.normal();
      pts.emplace_back(d, std::exp(logp));
    }
    table.emplace(t, PriceSeries(t, std::move(pts)));
  }
  return table;
}

MarketFixture market_fixture(const MarketFixtureSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::string> tickers;
  for (std::size_t i = 0; i < spec.n_firms; ++i) tickers.push_back(ticker_name(i));

  const auto days = weekdays(make_date(spec.price_first_year, 1, 1), make_date(spec.price_last_year, 12, 31));
  MarketFixture fx;
  for (const auto& t : tickers) {
    double logp = std::log(20.0 + 80.0 * rng.uniform());
    int year = 0;
    double drift = 0.0;
    std::vector<std::pair<Date, double>> pts;
    pts.reserve(days.size());
    for (Date d : days) {
      if (year_of(d) != year) {
        year = year_of(d);
        drift = spec.annual_drift_sd * rng.normal() / 252.0;
      }
      logp += drift + spec.daily_vol * rng.normal();
      pts.emplace_back(d, std::exp(logp));
    }
    fx.prices.emplace(t, PriceSeries(t, std::move(pts)));
  }

  struct Pending {
    Document doc;
    std::optional<double> abnormal;
  };
  std::vector<Pending> pending;
  for (const auto& t : tickers) {
    for (int y = spec.first_year; y <= spec.last_year; ++y) {
      const auto year_days = weekdays(make_date(y, 1, 1), make_date(y, 12, 31));
      auto add = [&](SourceKind kind, Date d, std::string title) {
        Pending p;
        p.doc.ticker = t;
        p.doc.date = d;
        p.doc.source = kind;
        p.doc.title = std::move(title);
        if (auto ar = abnormal_return(fx.prices.at(t), fx.prices, d, spec.horizon_days)) p.abnormal = ar->abnormal;
        pending.push_back(std::move(p));
      };
      for (std::size_t i = 0; i < spec.news_per_firm_year; ++i) {
        add(SourceKind::News, year_days[rng.below(year_days.size())], t + " company news");
      }
      for (std::size_t i = 0; i < spec.blogs_per_firm_year; ++i) {
        add(SourceKind::Blog, year_days[rng.below(year_days.size())], t + " market opinion");
      }
      if (spec.report_paragraphs > 0) {
        add(SourceKind::Report, year_days[30 + rng.below(40)], t + " annual report " + std::to_string(y));
      }
    }
  }

  std::vector<double> population;
  for (const auto& p : pending) {
    if (p.abnormal) population.push_back(*p.abnormal);
  }
  const auto bp = fit_tertiles(population, "fixture");

  std::vector<Document> docs;
  for (auto& p : pending) {
    const PerformanceClass label =
        p.abnormal ? assign_label(*p.abnormal, bp) : class_from_index(static_cast<int>(rng.below(3)));
    auto& d = p.doc;
    switch (d.source) {
      case SourceKind::News:
        d.text = planted_text(label, spec.news_signal, 18 + rng.below(11), 2, rng);
        break;
      case SourceKind::Blog:
        d.text = planted_text(label, spec.blog_signal, 18 + rng.below(11), 2, rng);
        break;
      case SourceKind::Report: {
        std::string text;
        for (std::size_t k = 0; k < spec.report_paragraphs; ++k) {
          if (k) text += "\n\n";
          text += "ITEM " + std::to_string(k + 1) + ".\n\n";
          std::string para;
          do {
            para = planted_text(label, spec.report_signal, 36 + rng.below(10), 2, rng);
          } while (para.size() < 220);
          text += para;
        }
        d.text = std::move(text);
        break;
      }
    }
    d.id = d.ticker + "-" + std::string(source_name(d.source)) + "-" + format_date(d.date) + "-" +
           std::to_string(docs.size());
    docs.push_back(std::move(d));
  }
  fx.corpus = Corpus(std::move(docs));
  return fx;
}

}  // namespace textalpha::fixture
