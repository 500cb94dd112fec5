#include <gtest/gtest.h>

#include "textalpha/fixture.hpp"
#include "textalpha/labeling.hpp"

using namespace textalpha;

TEST(Labeling, FixtureLabelsAreBalancedOnFitYears) {
  const auto fx = fixture::market_fixture({});
  const YearRange fit{2012, 2017};
  const auto result = label_documents(fx.corpus, fx.prices, 365, fit);
  EXPECT_EQ(result.examples.size() + result.unlabelable.size(), fx.corpus.size());
  std::array<std::size_t, 3> counts{};
  std::vector<double> fitted;
  for (const auto& ex : result.examples) {
    EXPECT_EQ(ex.returns.abnormal, ex.returns.stock_return - ex.returns.market_return);
    EXPECT_EQ(ex.label, assign_label(ex.returns.abnormal, result.breakpoints));
    if (fit.contains(year_of(ex.date))) {
      ++counts[class_index(ex.label)];
      fitted.push_back(ex.returns.abnormal);
    }
  }
  const auto bp = fit_tertiles(fitted);
  EXPECT_EQ(bp.q33, result.breakpoints.q33);
  EXPECT_EQ(bp.q66, result.breakpoints.q66);
  const auto [lo, hi] = std::minmax({counts[0], counts[1], counts[2]});
  // Tied abnormal returns (same firm, same day) may unbalance by a few.
  EXPECT_LE(hi - lo, fitted.size() / 50);
}

TEST(Labeling, DocumentsWithoutPricesAreUnlabelable) {
  auto fx = fixture::market_fixture({});
  std::vector<Document> docs = fx.corpus.documents();
  Document late = docs.front();
  late.id = "late";
  late.date = parse_date("2021-06-01");
  late.text = "beyond the price history";
  docs.push_back(late);
  const auto result = label_documents(Corpus(docs), fx.prices, 365, {2012, 2017});
  EXPECT_NE(std::find(result.unlabelable.begin(), result.unlabelable.end(), "late"), result.unlabelable.end());
}

TEST(Labeling, CsvRoundTrip) {
  const auto fx = fixture::market_fixture({});
  const auto result = label_documents(fx.corpus, fx.prices, 365, {2012, 2017});
  const auto csv = labels_to_csv(result.examples);
  EXPECT_EQ(csv.rfind("id,ticker,date,stock_return,market_return,abnormal_return,label\n", 0), 0u);
  const auto back = labels_from_csv("# config_hash=abc seed=1\n" + csv);
  ASSERT_EQ(back.size(), result.examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, result.examples[i].id);
    EXPECT_EQ(back[i].returns.abnormal, result.examples[i].returns.abnormal);
    EXPECT_EQ(back[i].label, result.examples[i].label);
  }
  EXPECT_THROW(labels_from_csv("id,ticker\nx,AA\n"), DataError);
}
