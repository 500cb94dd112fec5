#include "textalpha/labeling.hpp"

#include <sstream>

#include "textalpha/csv.hpp"
#include "textalpha/io.hpp"

namespace textalpha {

LabelingResult label_documents(const Corpus& corpus, const PriceTable& prices, int horizon_days, YearRange fit_years) {
  LabelingResult result;
  std::map<Date, std::optional<double>> market;
  for (const auto& d : corpus.documents()) {
    auto series = prices.find(d.ticker);
    if (series == prices.end()) {
      result.unlabelable.push_back(d.id);
      continue;
    }
    const auto stock = forward_return(series->second, d.date, horizon_days);
    if (!stock) {
      result.unlabelable.push_back(d.id);
      continue;
    }
    auto it = market.find(d.date);
    if (it == market.end()) it = market.emplace(d.date, try_market_return(prices, d.date, horizon_days)).first;
    LabeledExample ex;
    ex.id = d.id;
    ex.ticker = d.ticker;
    ex.date = d.date;
    ex.returns.ticker = d.ticker;
    ex.returns.anchor_date = d.date;
    ex.returns.stock_return = *stock;
    ex.returns.market_return = *it->second;  // the stock itself is labelable
    ex.returns.abnormal = ex.returns.stock_return - ex.returns.market_return;
    result.examples.push_back(std::move(ex));
  }
  std::vector<double> population;
  for (const auto& ex : result.examples) {
    if (fit_years.contains(year_of(ex.date))) population.push_back(ex.returns.abnormal);
  }
  result.breakpoints = fit_tertiles(std::move(population), "years " + std::to_string(fit_years.from) + "-" +
                                                               std::to_string(fit_years.to));
  for (auto& ex : result.examples) ex.label = assign_label(ex.returns.abnormal, result.breakpoints);
  return result;
}

std::string labels_to_csv(const std::vector<LabeledExample>& examples) {
  std::string out = "id,ticker,date,stock_return,market_return,abnormal_return,label\n";
  for (const auto& ex : examples) {
    out += csv::join({ex.id, ex.ticker, format_date(ex.date), io::fmt_exact(ex.returns.stock_return),
                      io::fmt_exact(ex.returns.market_return), io::fmt_exact(ex.returns.abnormal),
                      std::string(class_name(ex.label))});
    out += "\n";
  }
  return out;
}

std::vector<LabeledExample> labels_from_csv(const std::string& text) {
  std::istringstream in(text);
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() != 7 || (*header)[0] != "id") throw DataError("labels file: bad header");
  std::vector<LabeledExample> out;
  while (auto rec = reader.next()) {
    if (rec->size() != 7) throw DataError("labels file line " + std::to_string(reader.line()) + ": wrong field count");
    LabeledExample ex;
    ex.id = (*rec)[0];
    ex.ticker = (*rec)[1];
    ex.date = parse_date((*rec)[2]);
    ex.returns.ticker = ex.ticker;
    ex.returns.anchor_date = ex.date;
    try {
      ex.returns.stock_return = std::stod((*rec)[3]);
      ex.returns.market_return = std::stod((*rec)[4]);
      ex.returns.abnormal = std::stod((*rec)[5]);
    } catch (const std::exception&) {
      throw DataError("labels file line " + std::to_string(reader.line()) + ": bad number");
    }
    const auto& l = (*rec)[6];
    if (l == "under") ex.label = PerformanceClass::Under;
    else if (l == "average") ex.label = PerformanceClass::Average;
    else if (l == "over") ex.label = PerformanceClass::Over;
    else throw DataError("labels file line " + std::to_string(reader.line()) + ": unknown label '" + l + "'");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace textalpha
