#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "textalpha/common.hpp"

namespace textalpha {

/// Daily adjusted closes for one ticker; dates strictly increasing, prices > 0.
class PriceSeries {
 public:
  PriceSeries() = default;
  /// Sorts by date. Throws DataError on duplicate dates or non-positive prices.
  PriceSeries(std::string ticker, std::vector<std::pair<Date, double>> points);

  const std::string& ticker() const { return ticker_; }
  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<double>& closes() const { return closes_; }
  std::size_t size() const { return dates_.size(); }

  /// Index of the first trading day >= `day` if it lies within `tolerance_days`.
  std::optional<std::size_t> snap_forward(Date day, int tolerance_days = 7) const;
  /// Last close on or before `day`.
  std::optional<double> close_on_or_before(Date day) const;

  PriceSeries scaled(double factor) const;

 private:
  std::string ticker_;
  std::vector<Date> dates_;
  std::vector<double> closes_;
};

/// All sample series keyed by ticker (iteration in ticker order).
using PriceTable = std::map<std::string, PriceSeries>;

/// Source of price data; only the local CSV adapter ships.
class PriceReader {
 public:
  virtual ~PriceReader() = default;
  virtual PriceTable read() const = 0;
};

/// CSV with header `ticker,date,adj_close`.
class CsvPriceReader final : public PriceReader {
 public:
  explicit CsvPriceReader(std::filesystem::path path) : path_(std::move(path)) {}
  PriceTable read() const override;

 private:
  std::filesystem::path path_;
};

PriceTable parse_prices(std::string_view csv_contents);
std::string serialize_prices(const PriceTable& prices);

inline constexpr int kDefaultHorizonDays = 365;
inline constexpr int kSnapToleranceDays = 7;

/// P(end)/P(start) - 1 with both endpoints snapped forward to trading days;
/// nullopt when either endpoint has no trading day within tolerance (unlabelable).
std::optional<double> forward_return(const PriceSeries& series, Date anchor, int horizon_days = kDefaultHorizonDays);

/// Equal-weighted mean forward return over all labelable series, or nullopt if none.
std::optional<double> try_market_return(const PriceTable& all, Date anchor, int horizon_days = kDefaultHorizonDays);
/// As above; throws DataError when no series is labelable at `anchor`.
double market_return(const PriceTable& all, Date anchor, int horizon_days = kDefaultHorizonDays);

struct AbnormalReturn {
  std::string ticker;
  Date anchor_date;
  double stock_return = 0.0;
  double market_return = 0.0;
  double abnormal = 0.0;  // stock_return - market_return
};

/// nullopt when the stock is unlabelable at `anchor`. Throws DataError when the
/// market has no labelable series.
std::optional<AbnormalReturn> abnormal_return(const PriceSeries& series, const PriceTable& all, Date anchor,
                                              int horizon_days = kDefaultHorizonDays);

struct TertileBreakpoints {
  double q33 = 0.0;
  double q66 = 0.0;
  std::string fitted_on;
};

/// Nearest-rank percentiles at exactly one and two thirds: the values at
/// 1-based sorted ranks ceil(n/3) and ceil(2n/3). Throws DataError for n < 3.
TertileBreakpoints fit_tertiles(std::vector<double> returns, std::string fitted_on = {});

/// Under if r <= q33, Over if r > q66, else Average.
PerformanceClass assign_label(double r, const TertileBreakpoints& bp);

/// Forward abnormal returns for every trading day in a window and every ticker in
/// the table. The calendar is the union of all series' dates inside the window.
struct AbnormalPanel {
  std::vector<Date> days;
  std::vector<std::string> tickers;                       // ticker order of the table
  std::vector<std::vector<std::optional<double>>> values;  // [ticker][day]

  std::ptrdiff_t ticker_index(const std::string& ticker) const;
};

AbnormalPanel build_abnormal_panel(const PriceTable& all, Date window_start, Date window_end,
                                   int horizon_days = kDefaultHorizonDays);

struct RollingAverage {
  double value = 0.0;
  std::size_t days_used = 0;
};

/// Mean over trading days of the equal-weighted mean abnormal return of the
/// labelable members of `tickers`; days with no labelable member are skipped.
/// Throws DataError when no day is labelable.
RollingAverage rolling_year_average(const std::set<std::string>& tickers, const AbnormalPanel& panel);
double rolling_year_average(const std::set<std::string>& tickers, Date window_start, Date window_end,
                            const PriceTable& all, int horizon_days = kDefaultHorizonDays);

}  // namespace textalpha
