#include "textalpha/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "textalpha/csv.hpp"
#include "textalpha/io.hpp"

namespace textalpha {

PriceSeries::PriceSeries(std::string ticker, std::vector<std::pair<Date, double>> points) : ticker_(std::move(ticker)) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  dates_.reserve(points.size());
  closes_.reserve(points.size());
  for (const auto& [d, p] : points) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw DataError(ticker_ + " " + format_date(d) + ": price must be positive");
    }
    if (!dates_.empty() && dates_.back() == d) throw DataError(ticker_ + " " + format_date(d) + ": duplicate date");
    dates_.push_back(d);
    closes_.push_back(p);
  }
}

std::optional<std::size_t> PriceSeries::snap_forward(Date day, int tolerance_days) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), day);
  if (it == dates_.end() || (*it - day).count() > tolerance_days) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

std::optional<double> PriceSeries::close_on_or_before(Date day) const {
  auto it = std::upper_bound(dates_.begin(), dates_.end(), day);
  if (it == dates_.begin()) return std::nullopt;
  return closes_[static_cast<std::size_t>(it - dates_.begin()) - 1];
}

PriceSeries PriceSeries::scaled(double factor) const {
  PriceSeries out = *this;
  for (auto& c : out.closes_) c *= factor;
  return out;
}

PriceTable parse_prices(std::string_view csv_contents) {
  std::istringstream in{std::string(csv_contents)};
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw DataError("empty price file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[(*header)[i]] = i;
  for (const char* required : {"ticker", "date", "adj_close"}) {
    if (!col.count(required)) throw DataError(std::string("price file: missing column '") + required + "'");
  }
  std::map<std::string, std::vector<std::pair<Date, double>>> points;
  while (auto rec = reader.next()) {
    const auto where = "price file line " + std::to_string(reader.line()) + ": ";
    if (rec->size() != header->size()) throw DataError(where + "wrong field count");
    try {
      const auto& ticker = (*rec)[col["ticker"]];
      const Date d = parse_date((*rec)[col["date"]]);
      std::size_t used = 0;
      const auto& raw = (*rec)[col["adj_close"]];
      const double p = std::stod(raw, &used);
      if (used != raw.size()) throw DataError("bad price '" + raw + "'");
      points[ticker].emplace_back(d, p);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    } catch (const std::exception&) {
      throw DataError(where + "bad price");
    }
  }
  PriceTable table;
  for (auto& [ticker, pts] : points) table.emplace(ticker, PriceSeries(ticker, std::move(pts)));
  return table;
}

PriceTable CsvPriceReader::read() const {
  if (!std::filesystem::exists(path_)) throw DataError("price file not found: " + path_.string());
  return parse_prices(io::read_file(path_));
}

std::string serialize_prices(const PriceTable& prices) {
  std::string out = "ticker,date,adj_close\n";
  for (const auto& [ticker, s] : prices) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += ticker + "," + format_date(s.dates()[i]) + "," + io::fmt_exact(s.closes()[i]) + "\n";
    }
  }
  return out;
}

std::optional<double> forward_return(const PriceSeries& series, Date anchor, int horizon_days) {
  const auto start = series.snap_forward(anchor, kSnapToleranceDays);
  if (!start) return std::nullopt;
  const auto end = series.snap_forward(anchor + std::chrono::days{horizon_days}, kSnapToleranceDays);
  if (!end) return std::nullopt;
  return series.closes()[*end] / series.closes()[*start] - 1.0;
}

std::optional<double> try_market_return(const PriceTable& all, Date anchor, int horizon_days) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [_, s] : all) {
    if (auto r = forward_return(s, anchor, horizon_days)) {
      sum += *r;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double market_return(const PriceTable& all, Date anchor, int horizon_days) {
  auto m = try_market_return(all, anchor, horizon_days);
  if (!m) throw DataError("no labelable firm at " + format_date(anchor));
  return *m;
}

std::optional<AbnormalReturn> abnormal_return(const PriceSeries& series, const PriceTable& all, Date anchor,
                                              int horizon_days) {
  auto stock = forward_return(series, anchor, horizon_days);
  if (!stock) return std::nullopt;
  AbnormalReturn out;
  out.ticker = series.ticker();
  out.anchor_date = anchor;
  out.stock_return = *stock;
  out.market_return = market_return(all, anchor, horizon_days);
  out.abnormal = out.stock_return - out.market_return;
  return out;
}

TertileBreakpoints fit_tertiles(std::vector<double> returns, std::string fitted_on) {
  const std::size_t n = returns.size();
  if (n < 3) throw DataError("fit_tertiles needs at least 3 values, got " + std::to_string(n));
  std::sort(returns.begin(), returns.end());
  const std::size_t rank33 = (n + 2) / 3;
  const std::size_t rank66 = (2 * n + 2) / 3;
  return {returns[rank33 - 1], returns[rank66 - 1], std::move(fitted_on)};
}

PerformanceClass assign_label(double r, const TertileBreakpoints& bp) {
  if (r <= bp.q33) return PerformanceClass::Under;
  if (r > bp.q66) return PerformanceClass::Over;
  return PerformanceClass::Average;
}

std::ptrdiff_t AbnormalPanel::ticker_index(const std::string& ticker) const {
  auto it = std::lower_bound(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end() || *it != ticker) return -1;
  return it - tickers.begin();
}

AbnormalPanel build_abnormal_panel(const PriceTable& all, Date window_start, Date window_end, int horizon_days) {
  AbnormalPanel panel;
  std::set<Date> calendar;
  for (const auto& [ticker, s] : all) {
    panel.tickers.push_back(ticker);
    auto lo = std::lower_bound(s.dates().begin(), s.dates().end(), window_start);
    auto hi = std::upper_bound(s.dates().begin(), s.dates().end(), window_end);
    calendar.insert(lo, hi);
  }
  panel.days.assign(calendar.begin(), calendar.end());
  panel.values.assign(panel.tickers.size(), std::vector<std::optional<double>>(panel.days.size()));

  std::vector<std::optional<double>> stock(panel.tickers.size());
  for (std::size_t d = 0; d < panel.days.size(); ++d) {
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t i = 0;
    for (const auto& [_, s] : all) {
      stock[i] = forward_return(s, panel.days[d], horizon_days);
      if (stock[i]) {
        sum += *stock[i];
        ++n;
      }
      ++i;
    }
    if (n == 0) continue;
    const double market = sum / static_cast<double>(n);
    for (i = 0; i < stock.size(); ++i) {
      if (stock[i]) panel.values[i][d] = *stock[i] - market;
    }
  }
  return panel;
}

RollingAverage rolling_year_average(const std::set<std::string>& tickers, const AbnormalPanel& panel) {
  std::vector<std::size_t> members;
  for (const auto& t : tickers) {
    const auto idx = panel.ticker_index(t);
    if (idx < 0) throw DataError("no price series for " + t);
    members.push_back(static_cast<std::size_t>(idx));
  }
  double total = 0.0;
  std::size_t days = 0;
  for (std::size_t d = 0; d < panel.days.size(); ++d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (auto m : members) {
      if (const auto& v = panel.values[m][d]) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) continue;
    total += sum / static_cast<double>(n);
    ++days;
  }
  if (days == 0) throw DataError("rolling_year_average: no labelable trading day in window");
  return {total / static_cast<double>(days), days};
}

double rolling_year_average(const std::set<std::string>& tickers, Date window_start, Date window_end,
                            const PriceTable& all, int horizon_days) {
  if (window_start > window_end) throw UsageError("rolling_year_average: empty window");
  return rolling_year_average(tickers, build_abnormal_panel(all, window_start, window_end, horizon_days)).value;
}

}  // namespace textalpha
