#pragma once

#include <map>
#include <string>
#include <vector>

#include "textalpha/corpus.hpp"
#include "textalpha/market.hpp"
#include "textalpha/splits.hpp"

namespace textalpha {

/// A document's one-year abnormal return anchored at its date, and its tertile class.
struct LabeledExample {
  std::string id;
  std::string ticker;
  Date date;
  AbnormalReturn returns;
  PerformanceClass label = PerformanceClass::Average;
};

struct LabelingResult {
  std::vector<LabeledExample> examples;  // corpus order, labelable documents only
  TertileBreakpoints breakpoints;
  std::vector<std::string> unlabelable;
};

/// Abnormal returns for every document; tertile breakpoints are fitted on the
/// documents dated inside `fit_years` and applied to all.
LabelingResult label_documents(const Corpus& corpus, const PriceTable& prices, int horizon_days, YearRange fit_years);

std::string labels_to_csv(const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> labels_from_csv(const std::string& text);

}  // namespace textalpha
