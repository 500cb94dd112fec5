#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "oracles.hpp"
#include "textalpha/fixture.hpp"
#include "textalpha/simulation.hpp"

using namespace textalpha;

namespace {

const std::vector<std::string> kFirms{"AA", "BB", "CC", "DD", "EE", "FF", "GG", "HH", "II", "JJ"};

PriceTable ten_firm_prices() {
  return fixture::random_walk_prices(kFirms, parse_date("2016-01-01"), parse_date("2018-03-31"), 0.02, 77);
}

// Window of 30 trading days.
std::pair<Date, Date> thirty_day_window(const PriceTable& prices) {
  const auto& dates = prices.begin()->second.dates();
  const auto it = std::lower_bound(dates.begin(), dates.end(), parse_date("2016-04-01"));
  return {*it, *(it + 29)};
}

std::vector<FirmPrediction> firms_with(const std::vector<ClassProbabilities>& probs) {
  std::vector<FirmPrediction> out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    FirmPrediction f;
    f.ticker = kFirms[i];
    f.probabilities = probs[i];
    f.predicted = argmax_class(probs[i]);
    f.n_docs = 1;
    out.push_back(f);
  }
  return out;
}

std::vector<ClassProbabilities> mixed_probs() {
  return {{0.1, 0.2, 0.7}, {0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.3, 0.3, 0.4}, {0.5, 0.4, 0.1},
          {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}, {0.7, 0.2, 0.1}, {0.3, 0.4, 0.3}, {0.2, 0.2, 0.6}};
}

}  // namespace

TEST(AggregateFirm, MeanAndTieBreak) {
  std::map<std::string, std::vector<PredictionRecord>> by;
  by["AA"] = {make_prediction("a1", {0.8, 0.1, 0.1}), make_prediction("a2", {0.2, 0.5, 0.3})};
  by["BB"] = {make_prediction("b1", {0.2, 0.3, 0.5})};
  const auto f = aggregate_firm(by);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NEAR(f[0].probabilities[0], 0.5, 1e-15);
  EXPECT_NEAR(f[0].probabilities[1], 0.3, 1e-15);
  EXPECT_NEAR(f[0].probabilities[2], 0.2, 1e-15);
  EXPECT_EQ(f[0].predicted, PerformanceClass::Under);
  EXPECT_EQ(f[0].n_docs, 2u);
  EXPECT_EQ(f[1].probabilities, (ClassProbabilities{0.2, 0.3, 0.5}));
  for (const auto& x : f) EXPECT_NEAR(x.probabilities[0] + x.probabilities[1] + x.probabilities[2], 1.0, 1e-9);
}

TEST(Simulate, GroupsMatchBruteForceOracleBitwise) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  SimulationSettings settings;
  settings.k = 3;
  const auto report = simulate(firms_with(mixed_probs()), prices, ws, we, settings);
  ASSERT_EQ(report.groups.size(), 6u);
  for (const auto& g : report.groups) {
    ASSERT_TRUE(g.avg_abnormal_return) << g.name;
    EXPECT_EQ(*g.avg_abnormal_return, textalpha::testing::brute_force_group_average(g.members, prices, ws, we, 365)) << g.name;
    EXPECT_EQ(g.days_used, 30u);
  }
  EXPECT_EQ(report.group("Top-3").members, (std::vector<std::string>{"AA", "JJ", "GG"}));
  EXPECT_EQ(report.group("Flop-3").members, (std::vector<std::string>{"HH", "BB", "EE"}));
}

TEST(Simulate, WholeSampleDecomposes) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  const auto report = simulate(firms_with(mixed_probs()), prices, ws, we);
  double weighted = 0.0;
  std::size_t members = 0;
  for (const char* name : {"Good", "Average", "Bad"}) {
    const auto& g = report.group(name);
    weighted += *g.avg_abnormal_return * static_cast<double>(g.members.size());
    members += g.members.size();
  }
  EXPECT_EQ(members, 10u);
  EXPECT_NEAR(weighted / 10.0, *report.group("Whole Sample").avg_abnormal_return, 1e-9);
  // Abnormal returns of the full sample cancel against the sample market.
  EXPECT_NEAR(*report.group("Whole Sample").avg_abnormal_return, 0.0, 1e-12);
}

TEST(Simulate, AllGoodEqualsWholeSample) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  const auto report = simulate(firms_with(std::vector<ClassProbabilities>(10, {0.1, 0.1, 0.8})), prices, ws, we);
  EXPECT_EQ(*report.group("Good").avg_abnormal_return, *report.group("Whole Sample").avg_abnormal_return);
  EXPECT_FALSE(report.group("Bad").avg_abnormal_return.has_value());
}

TEST(Simulate, TopKInvariantUnderMonotoneScoreTransform) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  auto probs = mixed_probs();
  const auto a = simulate(firms_with(probs), prices, ws, we);
  for (auto& p : probs) {
    for (auto& v : p) v = std::pow(v, 3.0) * 0.5;
  }
  const auto b = simulate(firms_with(probs), prices, ws, we);
  EXPECT_EQ(a.group("Top-10").members, b.group("Top-10").members);
  EXPECT_EQ(a.group("Flop-10").members, b.group("Flop-10").members);
  EXPECT_EQ(*a.group("Top-10").avg_abnormal_return, *b.group("Top-10").avg_abnormal_return);
}

TEST(Simulate, ShiftingAbnormalReturnsShiftsGroups) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  auto panel = build_abnormal_panel(prices, ws, we, 365);
  const std::set<std::string> group{"BB", "DD", "II"};
  const double before = rolling_year_average(group, panel).value;
  for (auto& row : panel.values) {
    for (auto& v : row) {
      if (v) *v += 0.25;
    }
  }
  EXPECT_NEAR(rolling_year_average(group, panel).value, before + 0.25, 1e-12);
}

TEST(Simulate, UnlabelableFirmsExcluded) {
  auto prices = ten_firm_prices();
  // A firm whose history ends before any one-year horizon from the window.
  prices.emplace("ZZ", PriceSeries("ZZ", {{parse_date("2016-03-01"), 10.0}, {parse_date("2016-05-30"), 11.0}}));
  const auto [ws, we] = thirty_day_window(prices);
  auto firms = firms_with(mixed_probs());
  FirmPrediction z;
  z.ticker = "ZZ";
  z.probabilities = {0.0, 0.0, 1.0};
  z.predicted = PerformanceClass::Over;
  z.n_docs = 1;
  firms.push_back(z);
  const auto report = simulate(firms, prices, ws, we);
  EXPECT_EQ(report.excluded, (std::vector<std::string>{"ZZ"}));
  for (const auto& g : report.groups) EXPECT_EQ(std::count(g.members.begin(), g.members.end(), "ZZ"), 0);
}

TEST(Simulate, SeriesAndOutputs) {
  const auto prices = ten_firm_prices();
  const auto [ws, we] = thirty_day_window(prices);
  const auto report = simulate(firms_with(mixed_probs()), prices, ws, we);
  const auto& series = report.group("Whole Sample").series;
  ASSERT_FALSE(series.empty());
  EXPECT_EQ(series.front().first, ws);
  EXPECT_EQ(series.front().second, 1.0);
  EXPECT_LE(series.back().first, ws + std::chrono::days{730});
  EXPECT_GT(series.back().first, ws + std::chrono::days{700});
  EXPECT_EQ(simulation_series_csv(report).rfind("date,group,indexed_value\n", 0), 0u);
  EXPECT_EQ(simulation_groups_csv(report).rfind("group,avg_abnormal_return\n", 0), 0u);
  const auto j = nlohmann::json::parse(simulation_to_json(report));
  EXPECT_EQ(j.at("window_start").get<std::string>(), format_date(ws));
  EXPECT_NE(simulation_table(report).find("Top-10"), std::string::npos);
}
