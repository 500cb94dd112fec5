#include "textalpha/splits.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "textalpha/rng.hpp"

namespace textalpha {

void SplitConfig::validate() const {
  if (train_years.from > train_years.to || test_years.from > test_years.to) {
    throw UsageError("split: inverted year range");
  }
  if (train_years.to >= test_years.from && test_years.to >= train_years.from) {
    throw ValidationError("split: train and test year ranges overlap");
  }
  if (!(dev_firm_fraction > 0.0 && dev_firm_fraction < 1.0)) {
    throw UsageError("split: dev_firm_fraction must lie in (0, 1)");
  }
  if (horizon_days < 0) throw UsageError("split: negative horizon");
}

Split make_temporal_split(const Corpus& corpus, const SplitConfig& config) {
  config.validate();
  Split split;
  split.seed = config.seed;

  auto firms = corpus.tickers();  // sorted
  const auto n_dev = static_cast<std::size_t>(
      std::ceil(config.dev_firm_fraction * static_cast<double>(firms.size()) - 1e-9));
  Rng rng(config.seed);
  auto order = firms;
  rng.shuffle(order);
  split.dev_firms.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_dev, order.size())));

  for (const auto& d : corpus.documents()) {
    const int y = year_of(d.date);
    const bool dev_firm = split.dev_firms.count(d.ticker) > 0;
    if (config.train_years.contains(y)) {
      (dev_firm ? split.dev : split.train).insert(d.id);
    } else if (config.test_years.contains(y) && !dev_firm) {
      split.test.insert(d.id);
    }
  }
  if (split.train.empty()) throw ValidationError("split: empty training set");
  if (split.test.empty()) throw ValidationError("split: empty test set");
  return split;
}

LeakageReport validate_no_leakage(const Split& split, const Corpus& corpus, const SplitConfig& config) {
  LeakageReport report;
  std::optional<Date> earliest_test;
  for (const auto& id : split.test) {
    const auto* d = corpus.find(id);
    if (!d) throw UsageError("split references unknown document '" + id + "'");
    if (!earliest_test || d->date < *earliest_test) earliest_test = d->date;
  }
  if (!earliest_test) return report;
  const auto check = [&](const std::set<std::string>& ids) {
    for (const auto& id : ids) {
      const auto* d = corpus.find(id);
      if (!d) throw UsageError("split references unknown document '" + id + "'");
      if (!(d->date + std::chrono::days{config.horizon_days} < *earliest_test)) report.violations.push_back(id);
    }
  };
  check(split.train);
  check(split.dev);
  report.pass = report.violations.empty();
  return report;
}

std::string split_to_json(const Split& split) {
  nlohmann::ordered_json j;
  j["train"] = split.train;
  j["dev"] = split.dev;
  j["test"] = split.test;
  j["dev_firms"] = split.dev_firms;
  j["seed"] = split.seed;
  return j.dump(1);
}

Split split_from_json(const std::string& text) {
  Split s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.train = j.at("train").get<std::set<std::string>>();
    s.dev = j.at("dev").get<std::set<std::string>>();
    s.test = j.at("test").get<std::set<std::string>>();
    s.dev_firms = j.at("dev_firms").get<std::set<std::string>>();
    s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split JSON: ") + e.what());
  }
  return s;
}

}  // namespace textalpha
