#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "textalpha/baselines.hpp"
#include "textalpha/encoder.hpp"
#include "textalpha/features.hpp"

namespace textalpha {

enum class ModelKind { TfidfLogreg, TfidfGbt, Transformer };

/// "tfidf-logreg" | "tfidf-gbt" | "transformer"; UsageError otherwise.
ModelKind parse_model_kind(std::string_view name);
std::string_view model_kind_name(ModelKind kind);

struct ClassifierSettings {
  TfidfSettings tfidf;
  LogisticHyperparams logreg;
  BoostHyperparams gbt;
  encoder::EncoderConfig encoder = encoder::EncoderConfig::desk(0);  // vocab_size set at fit time
  std::size_t encoder_vocab_cap = 30000;
};

using TokenLists = std::vector<std::vector<std::string>>;

/// A trained text -> class-probability model behind one of the three model kinds.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;

  virtual ModelKind kind() const = 0;
  virtual void fit(const TokenLists& documents, const std::vector<PerformanceClass>& labels) = 0;
  virtual ClassProbabilities predict(const std::vector<std::string>& tokens) const = 0;
  /// Serialised model; `metadata_json` is embedded verbatim.
  virtual std::string save(const std::string& metadata_json = "{}") const = 0;
  /// Training curve as CSV (`epoch,step,loss`), empty when not applicable.
  virtual std::string training_log_csv() const { return {}; }
};

std::unique_ptr<TextClassifier> make_classifier(ModelKind kind, const ClassifierSettings& settings);
std::unique_ptr<TextClassifier> load_classifier(ModelKind kind, const std::string& bytes);

/// Fraction of `labels` matched by the argmax of `classifier` on `documents`.
double accuracy_of(const TextClassifier& classifier, const TokenLists& documents,
                   const std::vector<PerformanceClass>& labels);

}  // namespace textalpha
