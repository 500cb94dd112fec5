#include "textalpha/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace textalpha {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (auto c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (int k = 0; k < kNumClasses; ++k) n += counts[k][k];
  return n;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  r.n = confusion.total();
  if (r.n == 0) throw UsageError("evaluate: no examples");
  r.accuracy = static_cast<double>(confusion.trace()) / static_cast<double>(r.n);
  double f1_sum = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    std::size_t predicted = 0, actual = 0;
    for (int j = 0; j < kNumClasses; ++j) {
      predicted += confusion.counts[j][k];
      actual += confusion.counts[k][j];
    }
    const auto tp = static_cast<double>(confusion.counts[k][k]);
    auto& m = r.per_class[k];
    m.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    m.recall = actual ? tp / static_cast<double>(actual) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    f1_sum += m.f1;
  }
  r.macro_f1 = f1_sum / kNumClasses;
  return r;
}

MetricsReport evaluate(const std::vector<PredictionRecord>& predictions,
                       const std::map<std::string, PerformanceClass>& labels) {
  if (predictions.empty()) throw UsageError("evaluate: no predictions");
  ConfusionMatrix cm;
  for (const auto& p : predictions) {
    auto it = labels.find(p.id);
    if (it == labels.end()) throw UsageError("evaluate: no label for prediction '" + p.id + "'");
    cm.add(it->second, p.predicted);
  }
  return metrics_from_confusion(cm);
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  auto& per = j["per_class"] = nlohmann::ordered_json::object();
  for (int k = 0; k < kNumClasses; ++k) {
    const auto& m = report.per_class[k];
    per[std::string(class_name(class_from_index(k)))] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  j["confusion"] = report.confusion.counts;
  return j.dump(2);
}

std::string classification_table(const std::vector<TableCell>& cells) {
  std::vector<std::string> models, sources;
  for (const auto& c : cells) {
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    if (std::find(sources.begin(), sources.end(), c.source) == sources.end()) sources.push_back(c.source);
  }
  auto cell_text = [&](const std::string& model, const std::string& source) -> std::string {
    for (const auto& c : cells) {
      if (c.model == model && c.source == source) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "Acc.: %.2f F1: %.2f", c.metrics.accuracy, c.metrics.macro_f1);
        return buf;
      }
    }
    return "-";
  };
  std::size_t first = std::string("Model/ Data").size();
  for (const auto& m : models) first = std::max(first, m.size());
  std::size_t width = std::string("Acc.: 0.00 F1: 0.00").size();
  for (const auto& s : sources) width = std::max(width, s.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::string out = pad("Model/ Data", first);
  for (const auto& s : sources) out += "  " + pad(s, width);
  out += "\n";
  for (const auto& m : models) {
    out += pad(m, first);
    for (const auto& s : sources) out += "  " + pad(cell_text(m, s), width);
    out += "\n";
  }
  return out;
}

}  // namespace textalpha
