#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "textalpha/baselines.hpp"

namespace textalpha {

/// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  void add(PerformanceClass truth, PerformanceClass predicted) {
    ++counts[class_index(truth)][class_index(predicted)];
  }
  std::size_t total() const;
  std::size_t trace() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  std::size_t n = 0;
  ConfusionMatrix confusion;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion);

/// Labels keyed by document id. Throws UsageError when a prediction has no
/// label, or when there are no predictions.
MetricsReport evaluate(const std::vector<PredictionRecord>& predictions,
                       const std::map<std::string, PerformanceClass>& labels);

std::string metrics_to_json(const MetricsReport& report);

/// One row per (model, source) cell, printed as "Acc.: 0.43 F1: 0.43".
struct TableCell {
  std::string model;
  std::string source;
  MetricsReport metrics;
};
std::string classification_table(const std::vector<TableCell>& cells);

}  // namespace textalpha
