#include "textalpha/classifiers.hpp"

#include <json.hpp>

namespace textalpha {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "tfidf-logreg") return ModelKind::TfidfLogreg;
  if (name == "tfidf-gbt") return ModelKind::TfidfGbt;
  if (name == "transformer") return ModelKind::Transformer;
  throw UsageError("unknown model '" + std::string(name) + "' (expected tfidf-logreg, tfidf-gbt, or transformer)");
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::TfidfLogreg: return "tfidf-logreg";
    case ModelKind::TfidfGbt: return "tfidf-gbt";
    case ModelKind::Transformer: return "transformer";
  }
  return "?";
}

namespace {

std::vector<TrainingExample> vectorize(const TfidfModel& tfidf, const TokenLists& documents,
                                       const std::vector<PerformanceClass>& labels) {
  if (documents.size() != labels.size()) throw UsageError("documents and labels differ in length");
  std::vector<TrainingExample> out;
  out.reserve(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) out.push_back({tfidf.transform(documents[i]), labels[i]});
  return out;
}

std::string wrap(ModelKind kind, const std::string& tfidf_json, const std::string& model_json,
                 const std::string& metadata_json) {
  nlohmann::ordered_json j;
  j["kind"] = model_kind_name(kind);
  j["metadata"] = nlohmann::ordered_json::parse(metadata_json);
  j["tfidf"] = nlohmann::ordered_json::parse(tfidf_json);
  j["model"] = nlohmann::ordered_json::parse(model_json);
  return j.dump();
}

std::pair<std::string, std::string> unwrap(ModelKind kind, const std::string& bytes) {
  try {
    const auto j = nlohmann::json::parse(bytes);
    if (j.at("kind").get<std::string>() != model_kind_name(kind)) {
      throw DataError("model file holds '" + j.at("kind").get<std::string>() + "', expected '" +
                      std::string(model_kind_name(kind)) + "'");
    }
    return {j.at("tfidf").dump(), j.at("model").dump()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

class LogregClassifier final : public TextClassifier {
 public:
  explicit LogregClassifier(const ClassifierSettings& s) : settings_(s) {}
  LogregClassifier(TfidfModel tfidf, LogisticModel model) : tfidf_(std::move(tfidf)), model_(std::move(model)) {}

  ModelKind kind() const override { return ModelKind::TfidfLogreg; }

  void fit(const TokenLists& documents, const std::vector<PerformanceClass>& labels) override {
    tfidf_ = TfidfModel::fit(documents, settings_.tfidf);
    model_ = train_logistic(vectorize(tfidf_, documents, labels), tfidf_.dim(), settings_.logreg);
  }

  ClassProbabilities predict(const std::vector<std::string>& tokens) const override {
    return predict_logistic(model_, tfidf_.transform(tokens)).probabilities;
  }

  std::string save(const std::string& metadata_json) const override {
    return wrap(kind(), tfidf_.to_json(), model_.to_json(), metadata_json);
  }

 private:
  ClassifierSettings settings_;
  TfidfModel tfidf_;
  LogisticModel model_;
};

class GbtClassifier final : public TextClassifier {
 public:
  explicit GbtClassifier(const ClassifierSettings& s) : settings_(s) {}
  GbtClassifier(TfidfModel tfidf, BoostedModel model) : tfidf_(std::move(tfidf)), model_(std::move(model)) {}

  ModelKind kind() const override { return ModelKind::TfidfGbt; }

  void fit(const TokenLists& documents, const std::vector<PerformanceClass>& labels) override {
    tfidf_ = TfidfModel::fit(documents, settings_.tfidf);
    model_ = train_boosted(vectorize(tfidf_, documents, labels), tfidf_.dim(), settings_.gbt);
  }

  ClassProbabilities predict(const std::vector<std::string>& tokens) const override {
    return predict_boosted(model_, tfidf_.transform(tokens)).probabilities;
  }

  std::string save(const std::string& metadata_json) const override {
    return wrap(kind(), tfidf_.to_json(), model_.to_json(), metadata_json);
  }

  std::string training_log_csv() const override {
    std::string out = "round,loss\n";
    for (std::size_t r = 0; r < model_.round_loss.size(); ++r) {
      out += std::to_string(r) + "," + nlohmann::json(model_.round_loss[r]).dump() + "\n";
    }
    return out;
  }

  const BoostedModel& model() const { return model_; }

 private:
  ClassifierSettings settings_;
  TfidfModel tfidf_;
  BoostedModel model_;
};

class TransformerClassifier final : public TextClassifier {
 public:
  explicit TransformerClassifier(const ClassifierSettings& s) : settings_(s) {}
  TransformerClassifier(encoder::EncoderModel model, encoder::WordVocab vocab)
      : vocab_(std::move(vocab)), model_(std::move(model)) {}

  ModelKind kind() const override { return ModelKind::Transformer; }

  void fit(const TokenLists& documents, const std::vector<PerformanceClass>& labels) override {
    if (documents.size() != labels.size()) throw UsageError("documents and labels differ in length");
    vocab_ = encoder::WordVocab::build(documents, settings_.encoder_vocab_cap);
    auto config = settings_.encoder;
    config.vocab_size = vocab_.size();
    std::vector<encoder::LabeledSequence> data;
    data.reserve(documents.size());
    for (std::size_t i = 0; i < documents.size(); ++i) {
      data.push_back({encoder::encode(vocab_, documents[i], config.max_seq_len), labels[i]});
    }
    auto result = encoder::train_encoder(encoder::EncoderModel::initialize(config), data, config);
    model_ = std::move(result.model);
    log_ = std::move(result.log);
  }

  ClassProbabilities predict(const std::vector<std::string>& tokens) const override {
    return encoder::predict_proba(model_, encoder::encode(vocab_, tokens, model_.config.max_seq_len));
  }

  std::string save(const std::string& metadata_json) const override {
    return encoder::save_checkpoint(model_, vocab_, metadata_json);
  }

  std::string training_log_csv() const override { return encoder::loss_log_csv(log_); }

 private:
  ClassifierSettings settings_;
  encoder::WordVocab vocab_;
  encoder::EncoderModel model_;
  std::vector<encoder::LossLogRow> log_;
};

}  // namespace

std::unique_ptr<TextClassifier> make_classifier(ModelKind kind, const ClassifierSettings& settings) {
  switch (kind) {
    case ModelKind::TfidfLogreg: return std::make_unique<LogregClassifier>(settings);
    case ModelKind::TfidfGbt: return std::make_unique<GbtClassifier>(settings);
    case ModelKind::Transformer: return std::make_unique<TransformerClassifier>(settings);
  }
  throw UsageError("unknown model kind");
}

std::unique_ptr<TextClassifier> load_classifier(ModelKind kind, const std::string& bytes) {
  switch (kind) {
    case ModelKind::TfidfLogreg: {
      auto [t, m] = unwrap(kind, bytes);
      return std::make_unique<LogregClassifier>(TfidfModel::from_json(t), LogisticModel::from_json(m));
    }
    case ModelKind::TfidfGbt: {
      auto [t, m] = unwrap(kind, bytes);
      return std::make_unique<GbtClassifier>(TfidfModel::from_json(t), BoostedModel::from_json(m));
    }
    case ModelKind::Transformer: {
      encoder::EncoderModel model;
      encoder::WordVocab vocab;
      encoder::load_checkpoint(bytes, model, vocab);
      return std::make_unique<TransformerClassifier>(std::move(model), std::move(vocab));
    }
  }
  throw UsageError("unknown model kind");
}

double accuracy_of(const TextClassifier& classifier, const TokenLists& documents,
                   const std::vector<PerformanceClass>& labels) {
  if (documents.empty() || documents.size() != labels.size()) throw UsageError("accuracy_of: bad inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (argmax_class(classifier.predict(documents[i])) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(documents.size());
}

}  // namespace textalpha
