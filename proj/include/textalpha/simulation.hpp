#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "textalpha/baselines.hpp"
#include "textalpha/market.hpp"

namespace textalpha {

struct FirmPrediction {
  std::string ticker;
  ClassProbabilities probabilities{};  // mean over the firm's documents
  PerformanceClass predicted = PerformanceClass::Under;
  std::size_t n_docs = 0;
};

/// Mean probability vector per ticker, argmax with ties to the lower class.
/// Tickers with no predictions are skipped.
std::vector<FirmPrediction> aggregate_firm(const std::map<std::string, std::vector<PredictionRecord>>& by_ticker);

struct GroupResult {
  std::string name;
  std::vector<std::string> members;
  std::optional<double> avg_abnormal_return;  // empty group -> nullopt
  std::size_t days_used = 0;
  std::vector<std::pair<Date, double>> series;  // equal-weighted price path, 1.0 at window start
};

struct SimulationReport {
  Date window_start;
  Date window_end;
  std::size_t k = 10;
  std::vector<GroupResult> groups;  // Whole Sample, Good, Average, Bad, Top-K, Flop-K
  std::vector<std::string> excluded;  // firms with no labelable day or no price series

  const GroupResult& group(const std::string& name) const;
};

struct SimulationSettings {
  std::size_t k = 10;
  int horizon_days = kDefaultHorizonDays;
  int series_days = 730;
};

/// Group values are rolling one-year abnormal-return averages over the window;
/// Top-K ranks by mean p_over, Flop-K by mean p_under (ties by ticker).
SimulationReport simulate(const std::vector<FirmPrediction>& firms, const PriceTable& prices, Date window_start,
                          Date window_end, const SimulationSettings& settings = {});

std::string simulation_to_json(const SimulationReport& report);
/// `date,group,indexed_value`
std::string simulation_series_csv(const SimulationReport& report);
/// `group,avg_abnormal_return`
std::string simulation_groups_csv(const SimulationReport& report);
/// Plain-text table of group averages in percent.
std::string simulation_table(const SimulationReport& report);

}  // namespace textalpha
