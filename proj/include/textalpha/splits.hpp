#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "textalpha/corpus.hpp"

namespace textalpha {

struct YearRange {
  int from = 0;
  int to = 0;

  bool contains(int year) const { return year >= from && year <= to; }
  bool operator==(const YearRange&) const = default;
};

struct SplitConfig {
  YearRange train_years{2012, 2017};
  YearRange test_years{2019, 2019};
  double dev_firm_fraction = 0.10;
  int horizon_days = 365;
  std::uint64_t seed = 42;

  /// Throws ValidationError when the ranges overlap, UsageError when a range is
  /// inverted or the fraction lies outside (0, 1).
  void validate() const;
};

struct Split {
  std::set<std::string> train;
  std::set<std::string> dev;
  std::set<std::string> test;
  std::set<std::string> dev_firms;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

/// Dev firms: a seeded sample of ceil(fraction * firms) tickers. Train = other
/// firms' documents in train_years, dev = dev firms' documents in train_years,
/// test = other firms' documents in test_years. Throws ValidationError when
/// train or test ends up empty.
Split make_temporal_split(const Corpus& corpus, const SplitConfig& config);

struct LeakageReport {
  bool pass = true;
  std::vector<std::string> violations;  // train/dev ids whose label window reaches the test window
};

/// Passes iff every train/dev document satisfies date + horizon < earliest test date.
LeakageReport validate_no_leakage(const Split& split, const Corpus& corpus, const SplitConfig& config);

std::string split_to_json(const Split& split);
Split split_from_json(const std::string& text);

}  // namespace textalpha
