#include "textalpha/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "textalpha/io.hpp"

namespace textalpha {

std::vector<FirmPrediction> aggregate_firm(const std::map<std::string, std::vector<PredictionRecord>>& by_ticker) {
  std::vector<FirmPrediction> out;
  for (const auto& [ticker, records] : by_ticker) {
    if (records.empty()) continue;
    FirmPrediction f;
    f.ticker = ticker;
    f.n_docs = records.size();
    for (const auto& r : records) {
      for (int k = 0; k < kNumClasses; ++k) f.probabilities[k] += r.probabilities[k];
    }
    for (auto& p : f.probabilities) p /= static_cast<double>(records.size());
    f.predicted = argmax_class(f.probabilities);
    out.push_back(std::move(f));
  }
  return out;
}

const GroupResult& SimulationReport::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw UsageError("no simulation group '" + name + "'");
}

namespace {

std::vector<std::pair<Date, double>> indexed_path(const std::vector<std::string>& members, const PriceTable& prices,
                                                  Date start, Date end) {
  std::vector<const PriceSeries*> series;
  std::vector<double> base;
  std::vector<Date> first_day;
  for (const auto& t : members) {
    const auto& s = prices.at(t);
    if (auto idx = s.snap_forward(start, kSnapToleranceDays)) {
      series.push_back(&s);
      base.push_back(s.closes()[*idx]);
      first_day.push_back(s.dates()[*idx]);
    }
  }
  std::set<Date> calendar;
  for (const auto& [_, s] : prices) {
    auto lo = std::lower_bound(s.dates().begin(), s.dates().end(), start);
    auto hi = std::upper_bound(s.dates().begin(), s.dates().end(), end);
    calendar.insert(lo, hi);
  }
  std::vector<std::pair<Date, double>> path;
  if (series.empty()) return path;
  for (Date d : calendar) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      // Held at 1.0 until the member's first trading day in the window.
      sum += d < first_day[i] ? 1.0 : *series[i]->close_on_or_before(d) / base[i];
      ++n;
    }
    path.emplace_back(d, sum / static_cast<double>(n));
  }
  return path;
}

}  // namespace

SimulationReport simulate(const std::vector<FirmPrediction>& firms, const PriceTable& prices, Date window_start,
                          Date window_end, const SimulationSettings& settings) {
  if (window_start > window_end) throw UsageError("simulate: empty test window");
  SimulationReport report;
  report.window_start = window_start;
  report.window_end = window_end;
  report.k = settings.k;

  const auto panel = build_abnormal_panel(prices, window_start, window_end, settings.horizon_days);
  std::vector<const FirmPrediction*> usable;
  for (const auto& f : firms) {
    const auto idx = panel.ticker_index(f.ticker);
    bool labelable = false;
    if (idx >= 0) {
      for (const auto& v : panel.values[static_cast<std::size_t>(idx)]) {
        if (v) {
          labelable = true;
          break;
        }
      }
    }
    if (labelable) {
      usable.push_back(&f);
    } else {
      report.excluded.push_back(f.ticker);
    }
  }
  std::sort(usable.begin(), usable.end(), [](auto* a, auto* b) { return a->ticker < b->ticker; });

  auto ranked = [&](int cls) {
    auto order = usable;
    std::stable_sort(order.begin(), order.end(),
                     [&](auto* a, auto* b) { return a->probabilities[cls] > b->probabilities[cls]; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(settings.k, order.size()); ++i) out.push_back(order[i]->ticker);
    return out;
  };
  auto by_class = [&](PerformanceClass c) {
    std::vector<std::string> out;
    for (auto* f : usable) {
      if (f->predicted == c) out.push_back(f->ticker);
    }
    return out;
  };
  std::vector<std::string> all;
  for (auto* f : usable) all.push_back(f->ticker);

  const std::string k = std::to_string(settings.k);
  std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"Whole Sample", all},
      {"Good", by_class(PerformanceClass::Over)},
      {"Average", by_class(PerformanceClass::Average)},
      {"Bad", by_class(PerformanceClass::Under)},
      {"Top-" + k, ranked(class_index(PerformanceClass::Over))},
      {"Flop-" + k, ranked(class_index(PerformanceClass::Under))},
  };
  const Date series_end = window_start + std::chrono::days{settings.series_days};
  for (auto& [name, members] : groups) {
    GroupResult g;
    g.name = name;
    g.members = members;
    if (!members.empty()) {
      const auto avg = rolling_year_average(std::set<std::string>(members.begin(), members.end()), panel);
      g.avg_abnormal_return = avg.value;
      g.days_used = avg.days_used;
      g.series = indexed_path(members, prices, window_start, series_end);
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

std::string simulation_to_json(const SimulationReport& report) {
  nlohmann::ordered_json j;
  j["window_start"] = format_date(report.window_start);
  j["window_end"] = format_date(report.window_end);
  j["k"] = report.k;
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : report.groups) {
    nlohmann::ordered_json jg;
    jg["name"] = g.name;
    jg["members"] = g.members;
    jg["avg_abnormal_return"] = g.avg_abnormal_return ? nlohmann::ordered_json(*g.avg_abnormal_return) : nullptr;
    jg["days_used"] = g.days_used;
    groups.push_back(std::move(jg));
  }
  j["excluded"] = report.excluded;
  j["excluded_count"] = report.excluded.size();
  return j.dump(2);
}

std::string simulation_series_csv(const SimulationReport& report) {
  std::string out = "date,group,indexed_value\n";
  for (const auto& g : report.groups) {
    for (const auto& [d, v] : g.series) out += format_date(d) + "," + g.name + "," + io::fmt_double(v, 8) + "\n";
  }
  return out;
}

std::string simulation_groups_csv(const SimulationReport& report) {
  std::string out = "group,avg_abnormal_return\n";
  for (const auto& g : report.groups) {
    out += g.name + "," + (g.avg_abnormal_return ? io::fmt_double(*g.avg_abnormal_return, 10) : std::string("")) + "\n";
  }
  return out;
}

std::string simulation_table(const SimulationReport& report) {
  std::string out = "Grouping              " + format_date(report.window_start) + ".." + format_date(report.window_end) +
                    "\n";
  for (const auto& g : report.groups) {
    std::string name = g.name == "Whole Sample" ? g.name : "Prediction: " + g.name;
    name.resize(std::max<std::size_t>(name.size(), 22), ' ');
    char buf[32];
    if (g.avg_abnormal_return) {
      std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *g.avg_abnormal_return);
    } else {
      std::snprintf(buf, sizeof buf, "n/a");
    }
    out += name + buf + "\n";
  }
  return out;
}

}  // namespace textalpha
