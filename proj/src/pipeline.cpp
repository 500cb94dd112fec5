#include "textalpha/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "textalpha/corpus.hpp"
#include "textalpha/csv.hpp"
#include "textalpha/evaluation.hpp"
#include "textalpha/fixture.hpp"
#include "textalpha/io.hpp"
#include "textalpha/labeling.hpp"
#include "textalpha/market.hpp"
#include "textalpha/simulation.hpp"

namespace textalpha {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

std::vector<EncoderSize> default_sweep_sizes() {
  return {{"small", 64, 1, 2, 256}, {"base", 128, 2, 4, 512}, {"large", 192, 3, 6, 768}};
}

YearRange year_range(const nlohmann::json& j, const char* key, YearRange fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_integer()) return {v.get<int>(), v.get<int>()};
  if (!v.is_array() || v.size() != 2) throw UsageError(std::string("config: '") + key + "' must be [from, to]");
  return {v[0].get<int>(), v[1].get<int>()};
}

void apply_encoder_preset(ExperimentConfig& cfg) {
  if (cfg.encoder_preset == "paper") {
    cfg.classifier.encoder = encoder::EncoderConfig::paper(0);
  } else if (cfg.encoder_preset == "desk") {
    cfg.classifier.encoder = encoder::EncoderConfig::desk(0);
  } else {
    throw UsageError("config: encoder preset must be 'paper' or 'desk'");
  }
}

void propagate_seed(ExperimentConfig& cfg) {
  cfg.split.seed = cfg.seed;
  cfg.classifier.logreg.seed = cfg.seed;
  cfg.classifier.gbt.seed = cfg.seed;
  cfg.classifier.encoder.seed = cfg.seed;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (documents.empty()) throw UsageError("config: 'documents' path is required");
  if (prices.empty()) throw UsageError("config: 'prices' path is required");
  if (source != "news" && source != "blogs" && source != "report" && source != "any") {
    throw UsageError("config: source must be news, blogs, report, or any");
  }
  if (from_year > to_year) throw UsageError("config: corpus from_year > to_year");
  if (top_n == 0) throw UsageError("config: top_n must be positive");
  if (k == 0) throw UsageError("config: simulation k must be positive");
  split.validate();
  auto enc = classifier.encoder;
  enc.vocab_size = 3;
  enc.validate();
  for (int e : sweep_epochs) {
    if (e < 1) throw UsageError("config: sweep epochs must be >= 1");
  }
  for (const auto& s : sweep_sizes) {
    if (s.n_heads == 0 || s.d_model % s.n_heads != 0) {
      throw UsageError("config: sweep size '" + s.name + "' needs d_model divisible by n_heads");
    }
  }
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["documents"] = documents.string();
  j["prices"] = prices.string();
  j["source"] = source;
  j["corpus"] = {{"from_year", from_year},
                 {"to_year", to_year},
                 {"top_n", top_n},
                 {"min_items", min_items},
                 {"paragraph_min_chars", paragraph_min_chars}};
  j["split"] = {{"train_years", {split.train_years.from, split.train_years.to}},
                {"test_years", {split.test_years.from, split.test_years.to}},
                {"dev_firm_fraction", split.dev_firm_fraction},
                {"horizon_days", split.horizon_days}};
  j["features"] = {{"max_vocab", classifier.tfidf.max_vocab}, {"min_df", classifier.tfidf.min_df}};
  j["model"] = model_kind_name(model);
  const auto& lr = classifier.logreg;
  j["logreg"] = {{"learning_rate", lr.learning_rate}, {"epochs", lr.epochs}, {"l2", lr.l2}, {"batch_size", lr.batch_size}};
  const auto& gb = classifier.gbt;
  j["gbt"] = {{"rounds", gb.rounds},   {"max_depth", gb.max_depth}, {"eta", gb.eta},
              {"lambda", gb.lambda}, {"feature_cap", gb.feature_cap}};
  j["encoder"] = json::parse(encoder::config_to_json(classifier.encoder));
  j["encoder"]["preset"] = encoder_preset;
  j["encoder"]["vocab_cap"] = classifier.encoder_vocab_cap;
  auto sizes = json::array();
  for (const auto& s : sweep_sizes) {
    sizes.push_back({{"name", s.name}, {"d_model", s.d_model}, {"n_layers", s.n_layers}, {"n_heads", s.n_heads},
                     {"d_ff", s.d_ff}});
  }
  j["sweep"] = {{"epochs", sweep_epochs}, {"encoder_sizes", sizes}};
  j["simulation"] = {{"k", k}};
  j["seed"] = seed;
  return j.dump();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical_json())); }

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.sweep_sizes = default_sweep_sizes();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    if (j.contains("documents")) cfg.documents = resolve(j.at("documents").get<std::string>());
    if (j.contains("prices")) cfg.prices = resolve(j.at("prices").get<std::string>());
    if (j.contains("output_dir")) cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    cfg.source = j.value("source", cfg.source);
    if (j.contains("corpus")) {
      const auto& c = j.at("corpus");
      cfg.from_year = c.value("from_year", cfg.from_year);
      cfg.to_year = c.value("to_year", cfg.to_year);
      cfg.top_n = c.value("top_n", cfg.top_n);
      cfg.min_items = c.value("min_items", cfg.min_items);
      cfg.paragraph_min_chars = c.value("paragraph_min_chars", cfg.paragraph_min_chars);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      cfg.split.train_years = year_range(s, "train_years", cfg.split.train_years);
      cfg.split.test_years = year_range(s, "test_years", cfg.split.test_years);
      cfg.split.dev_firm_fraction = s.value("dev_firm_fraction", cfg.split.dev_firm_fraction);
      cfg.split.horizon_days = s.value("horizon_days", cfg.split.horizon_days);
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      cfg.classifier.tfidf.max_vocab = f.value("max_vocab", cfg.classifier.tfidf.max_vocab);
      cfg.classifier.tfidf.min_df = f.value("min_df", cfg.classifier.tfidf.min_df);
    }
    if (j.contains("model")) cfg.model = parse_model_kind(j.at("model").get<std::string>());
    if (j.contains("logreg")) {
      const auto& l = j.at("logreg");
      auto& h = cfg.classifier.logreg;
      h.learning_rate = l.value("learning_rate", h.learning_rate);
      h.epochs = l.value("epochs", h.epochs);
      h.l2 = l.value("l2", h.l2);
      h.batch_size = l.value("batch_size", h.batch_size);
    }
    if (j.contains("gbt")) {
      const auto& g = j.at("gbt");
      auto& h = cfg.classifier.gbt;
      h.rounds = g.value("rounds", h.rounds);
      h.max_depth = g.value("max_depth", h.max_depth);
      h.eta = g.value("eta", h.eta);
      h.lambda = g.value("lambda", h.lambda);
      h.feature_cap = g.value("feature_cap", h.feature_cap);
    }
    const nlohmann::json enc = j.contains("encoder") ? j.at("encoder") : nlohmann::json::object();
    cfg.encoder_preset = enc.value("preset", cfg.encoder_preset);
    apply_encoder_preset(cfg);
    auto& e = cfg.classifier.encoder;
    e.d_model = enc.value("d_model", e.d_model);
    e.n_heads = enc.value("n_heads", e.n_heads);
    e.n_layers = enc.value("n_layers", e.n_layers);
    e.d_ff = enc.value("d_ff", e.d_ff);
    e.max_seq_len = enc.value("max_seq_len", e.max_seq_len);
    e.dropout = enc.value("dropout", e.dropout);
    e.learning_rate = enc.value("learning_rate", e.learning_rate);
    e.batch_size = enc.value("batch_size", e.batch_size);
    e.epochs = enc.value("epochs", e.epochs);
    e.weight_decay = enc.value("weight_decay", e.weight_decay);
    e.clip_norm = enc.value("clip_norm", e.clip_norm);
    e.warmup_fraction = enc.value("warmup_fraction", e.warmup_fraction);
    e.linear_decay = enc.value("linear_decay", e.linear_decay);
    cfg.classifier.encoder_vocab_cap = enc.value("vocab_cap", cfg.classifier.encoder_vocab_cap);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      if (s.contains("epochs")) cfg.sweep_epochs = s.at("epochs").get<std::vector<int>>();
      if (s.contains("encoder_sizes")) {
        cfg.sweep_sizes.clear();
        for (const auto& z : s.at("encoder_sizes")) {
          EncoderSize size;
          size.name = z.at("name").get<std::string>();
          size.d_model = z.at("d_model").get<std::size_t>();
          size.n_layers = z.at("n_layers").get<std::size_t>();
          size.n_heads = z.at("n_heads").get<std::size_t>();
          size.d_ff = z.at("d_ff").get<std::size_t>();
          cfg.sweep_sizes.push_back(size);
        }
      }
    }
    if (j.contains("simulation")) cfg.k = j.at("simulation").value("k", cfg.k);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  propagate_seed(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  return parse_config(io::read_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

struct Context {
  ExperimentConfig cfg;
  std::string hash;
  std::ostream& out;

  fs::path path(const std::string& name) const { return cfg.output_dir / name; }
  std::string model_name() const { return std::string(model_kind_name(cfg.model)); }
  std::string provenance() const { return "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\n"; }

  json stamp() const { return {{"config_hash", hash}, {"seed", cfg.seed}}; }

  void write(const std::string& name, const std::string& contents) const {
    io::write_file_atomic(path(name), contents);
    out << "  wrote " << path(name).string() << "\n";
  }
  void write_json(const std::string& name, json j) const {
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    write(name, j.dump(2) + "\n");
  }
  void write_csv(const std::string& name, const std::string& body) const { write(name, provenance() + body); }

  std::string read(const std::string& name) const {
    if (!fs::exists(path(name))) {
      throw DataError("missing artifact " + path(name).string() + " (run the earlier stage first)");
    }
    return io::read_file(path(name));
  }
};

Corpus read_corpus(const Context& ctx) { return parse_documents(ctx.read("corpus.jsonl"), DocumentFormat::Jsonl); }

std::vector<LabeledExample> read_labels(const Context& ctx) { return labels_from_csv(ctx.read("labels.csv")); }

Split read_split(const Context& ctx) { return split_from_json(ctx.read("split.json")); }

std::set<std::string> sample_tickers(const Context& ctx) {
  const auto j = nlohmann::json::parse(ctx.read("ingest.json"));
  return j.at("selected_tickers").get<std::set<std::string>>();
}

PriceTable sample_prices(const Context& ctx) {
  auto all = CsvPriceReader(ctx.cfg.prices).read();
  const auto tickers = sample_tickers(ctx);
  PriceTable sample;
  for (auto& [t, s] : all) {
    if (tickers.count(t)) sample.emplace(t, std::move(s));
  }
  if (sample.empty()) throw DataError("no price series for any selected ticker");
  return sample;
}

int stage_ingest(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto raw = load_documents(cfg.documents, format_for(cfg.documents));
  const auto in_years = filter_years(raw, cfg.from_year, cfg.to_year);
  const auto selection = select_top_covered(in_years, cfg.top_n, cfg.min_items);
  const std::set<std::string> chosen(selection.tickers.begin(), selection.tickers.end());
  auto corpus = restrict_tickers(in_years, chosen);
  if (cfg.source != "any") {
    const auto kind = parse_source(cfg.source);
    corpus = corpus.filter([&](const Document& d) { return d.source == kind; });
  }
  corpus = expand_reports(corpus, cfg.paragraph_min_chars);
  if (corpus.empty()) throw DataError("no documents left after ingest filters");

  std::map<std::string, std::size_t> per_source;
  for (const auto& d : corpus.documents()) ++per_source[std::string(source_name(d.source))];
  json stats;
  stats["raw_documents"] = raw.size();
  stats["documents_in_years"] = in_years.size();
  stats["documents"] = corpus.size();
  stats["per_source"] = per_source;
  stats["selected_tickers"] = selection.tickers;
  stats["coverage"] = selection.coverage;
  stats["warnings"] = selection.warnings;
  ctx.write("corpus.jsonl", ctx.provenance() + serialize_documents(corpus, DocumentFormat::Jsonl));
  ctx.write_json("ingest.json", stats);
  ctx.out << "ingest: " << corpus.size() << " documents from " << selection.tickers.size() << " firms\n";
  for (const auto& w : selection.warnings) ctx.out << "  warning: " << w << "\n";
  return 0;
}

int stage_label(const Context& ctx) {
  const auto corpus = read_corpus(ctx);
  const auto prices = sample_prices(ctx);
  const auto result = label_documents(corpus, prices, ctx.cfg.split.horizon_days, ctx.cfg.split.train_years);
  ctx.write_csv("labels.csv", labels_to_csv(result.examples));
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& ex : result.examples) ++counts[class_index(ex.label)];
  json j;
  j["q33"] = result.breakpoints.q33;
  j["q66"] = result.breakpoints.q66;
  j["fitted_on"] = result.breakpoints.fitted_on;
  j["labeled"] = result.examples.size();
  j["unlabelable"] = result.unlabelable.size();
  j["class_counts"] = {{"under", counts[0]}, {"average", counts[1]}, {"over", counts[2]}};
  ctx.write_json("tertiles.json", j);
  ctx.out << "label: " << result.examples.size() << " labeled, " << result.unlabelable.size()
          << " unlabelable; q33=" << io::fmt_double(result.breakpoints.q33, 4)
          << " q66=" << io::fmt_double(result.breakpoints.q66, 4) << "\n";
  return 0;
}

int stage_split(const Context& ctx) {
  const auto corpus = read_corpus(ctx);
  const auto split = make_temporal_split(corpus, ctx.cfg.split);
  const auto leakage = validate_no_leakage(split, corpus, ctx.cfg.split);
  auto j = json::parse(split_to_json(split));
  j["config_hash"] = ctx.hash;
  ctx.write("split.json", j.dump(1) + "\n");
  json lj;
  lj["pass"] = leakage.pass;
  lj["violations"] = leakage.violations;
  ctx.write_json("leakage.json", lj);
  ctx.out << "split: train " << split.train.size() << ", dev " << split.dev.size() << ", test " << split.test.size()
          << " documents; " << split.dev_firms.size() << " dev firms\n";
  if (!leakage.pass) {
    ctx.out << "leakage check FAILED: " << leakage.violations.size()
            << " train/dev documents have label windows reaching the test period:\n";
    for (const auto& id : leakage.violations) ctx.out << "  " << id << "\n";
    throw ValidationError("leakage validation failed");
  }
  ctx.out << "leakage check passed\n";
  return 0;
}

struct Dataset {
  TokenLists documents;
  std::vector<PerformanceClass> labels;
  std::vector<std::string> ids;
  std::vector<std::string> tickers;
};

Dataset collect(const Corpus& corpus, const std::map<std::string, const LabeledExample*>& labels,
                const std::set<std::string>& ids) {
  Dataset ds;
  for (const auto& d : corpus.documents()) {
    if (!ids.count(d.id)) continue;
    auto it = labels.find(d.id);
    if (it == labels.end()) continue;
    ds.documents.push_back(tokenize(d.title.empty() ? d.text : d.title + "\n" + d.text));
    ds.labels.push_back(it->second->label);
    ds.ids.push_back(d.id);
    ds.tickers.push_back(d.ticker);
  }
  return ds;
}

struct Data {
  Corpus corpus;
  std::vector<LabeledExample> labels;
  std::map<std::string, const LabeledExample*> by_id;
  Split split;
  Dataset train, dev, test;
};

std::unique_ptr<Data> load_data(const Context& ctx) {
  auto data = std::make_unique<Data>();
  data->corpus = read_corpus(ctx);
  data->labels = read_labels(ctx);
  for (const auto& ex : data->labels) data->by_id[ex.id] = &ex;
  data->split = read_split(ctx);
  data->train = collect(data->corpus, data->by_id, data->split.train);
  data->dev = collect(data->corpus, data->by_id, data->split.dev);
  data->test = collect(data->corpus, data->by_id, data->split.test);
  if (data->train.ids.empty()) throw DataError("no labeled training documents");
  if (data->test.ids.empty()) throw DataError("no labeled test documents");
  return data;
}

std::string model_file(ModelKind kind) {
  return "model_" + std::string(model_kind_name(kind)) + (kind == ModelKind::Transformer ? ".bin" : ".json");
}

int stage_train(const Context& ctx) {
  const auto data = load_data(ctx);
  auto classifier = make_classifier(ctx.cfg.model, ctx.cfg.classifier);
  classifier->fit(data->train.documents, data->train.labels);
  json meta = ctx.stamp();
  meta["train_documents"] = data->train.ids.size();
  ctx.write(model_file(ctx.cfg.model), classifier->save(meta.dump()));
  if (const auto log = classifier->training_log_csv(); !log.empty()) {
    ctx.write_csv("training_log_" + ctx.model_name() + ".csv", log);
  }
  ctx.out << "train: " << ctx.model_name() << " on " << data->train.ids.size() << " documents\n";
  return 0;
}

std::vector<PredictionRecord> predict_all(const TextClassifier& classifier, const Dataset& ds) {
  std::vector<PredictionRecord> out;
  out.reserve(ds.ids.size());
  for (std::size_t i = 0; i < ds.ids.size(); ++i) out.push_back(make_prediction(ds.ids[i], classifier.predict(ds.documents[i])));
  return out;
}

std::map<std::string, PerformanceClass> label_map(const Dataset& ds) {
  std::map<std::string, PerformanceClass> m;
  for (std::size_t i = 0; i < ds.ids.size(); ++i) m[ds.ids[i]] = ds.labels[i];
  return m;
}

std::string predictions_csv(const std::vector<PredictionRecord>& preds, const Dataset& ds) {
  std::string out = "id,ticker,p_under,p_average,p_over,predicted\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    out += csv::join({p.id, ds.tickers[i], io::fmt_exact(p.probabilities[0]), io::fmt_exact(p.probabilities[1]),
                      io::fmt_exact(p.probabilities[2]), std::string(class_name(p.predicted))});
    out += "\n";
  }
  return out;
}

int stage_evaluate(const Context& ctx) {
  const auto data = load_data(ctx);
  const auto classifier = load_classifier(ctx.cfg.model, ctx.read(model_file(ctx.cfg.model)));
  const auto test_preds = predict_all(*classifier, data->test);
  const auto test_metrics = evaluate(test_preds, label_map(data->test));
  json j;
  j["model"] = ctx.model_name();
  j["source"] = ctx.cfg.source;
  j["test"] = json::parse(metrics_to_json(test_metrics));
  if (!data->dev.ids.empty()) {
    const auto dev_preds = predict_all(*classifier, data->dev);
    j["dev"] = json::parse(metrics_to_json(evaluate(dev_preds, label_map(data->dev))));
  }
  // Reference row: expected accuracy of a uniform random draw.
  MetricsReport random_row;
  random_row.accuracy = 1.0 / kNumClasses;
  random_row.macro_f1 = 1.0 / kNumClasses;
  const auto table = classification_table({{"Random", ctx.cfg.source, random_row}, {ctx.model_name(), ctx.cfg.source, test_metrics}});
  ctx.write_csv("predictions_" + ctx.model_name() + ".csv", predictions_csv(test_preds, data->test));
  ctx.write_json("metrics_" + ctx.model_name() + ".json", j);
  ctx.write("metrics_" + ctx.model_name() + ".txt", ctx.provenance() + table);
  ctx.out << table;
  return 0;
}

std::map<std::string, std::vector<PredictionRecord>> read_predictions(const std::string& text) {
  std::istringstream in(text);
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() != 6) throw DataError("predictions file: bad header");
  std::map<std::string, std::vector<PredictionRecord>> by_ticker;
  while (auto rec = reader.next()) {
    if (rec->size() != 6) throw DataError("predictions file line " + std::to_string(reader.line()) + ": bad row");
    ClassProbabilities p{};
    try {
      for (int k = 0; k < kNumClasses; ++k) p[k] = std::stod((*rec)[2 + static_cast<std::size_t>(k)]);
    } catch (const std::exception&) {
      throw DataError("predictions file line " + std::to_string(reader.line()) + ": bad probability");
    }
    by_ticker[(*rec)[1]].push_back(make_prediction((*rec)[0], p));
  }
  return by_ticker;
}

int stage_simulate(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto prices = sample_prices(ctx);
  const auto firms = aggregate_firm(read_predictions(ctx.read("predictions_" + ctx.model_name() + ".csv")));
  SimulationSettings settings;
  settings.k = cfg.k;
  settings.horizon_days = cfg.split.horizon_days;
  const auto report = simulate(firms, prices, make_date(cfg.split.test_years.from, 1, 1),
                               make_date(cfg.split.test_years.to, 12, 31), settings);
  auto j = json::parse(simulation_to_json(report));
  j["model"] = ctx.model_name();
  ctx.write_json("simulation_" + ctx.model_name() + ".json", j);
  ctx.write("simulation_" + ctx.model_name() + ".txt", ctx.provenance() + simulation_table(report));
  ctx.write_csv("simulation_series_" + ctx.model_name() + ".csv", simulation_series_csv(report));
  ctx.write_csv("simulation_groups_" + ctx.model_name() + ".csv", simulation_groups_csv(report));
  ctx.out << simulation_table(report);
  if (!report.excluded.empty()) ctx.out << "  " << report.excluded.size() << " firms excluded as unlabelable\n";
  return 0;
}

struct SweepRow {
  std::string label;
  MetricsReport metrics;
};

MetricsReport fit_and_score(const Data& data, const ClassifierSettings& settings) {
  auto classifier = make_classifier(ModelKind::Transformer, settings);
  classifier->fit(data.train.documents, data.train.labels);
  return evaluate(predict_all(*classifier, data.test), label_map(data.test));
}

int stage_sweep_epochs(const Context& ctx) {
  const auto data = load_data(ctx);
  std::string csv_body = "epochs,accuracy,f1\n";
  std::string table = "Number of Epochs  Accuracy  F1\n";
  for (int epochs : ctx.cfg.sweep_epochs) {
    auto settings = ctx.cfg.classifier;
    settings.encoder.epochs = epochs;
    const auto m = fit_and_score(*data, settings);
    csv_body += std::to_string(epochs) + "," + io::fmt_double(m.accuracy, 6) + "," + io::fmt_double(m.macro_f1, 6) + "\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-16d  %.2f      %.2f\n", epochs, m.accuracy, m.macro_f1);
    table += buf;
  }
  ctx.write_csv("sweep_epochs.csv", csv_body);
  ctx.write("sweep_epochs.txt", ctx.provenance() + table);
  ctx.out << table;
  return 0;
}

int stage_sweep_encoder(const Context& ctx) {
  const auto data = load_data(ctx);
  std::string csv_body = "size,d_model,n_layers,n_heads,d_ff,accuracy,f1\n";
  std::string table = "Model           d_model  layers  heads  Accuracy  F1\n";
  for (const auto& size : ctx.cfg.sweep_sizes) {
    auto settings = ctx.cfg.classifier;
    settings.encoder.d_model = size.d_model;
    settings.encoder.n_layers = size.n_layers;
    settings.encoder.n_heads = size.n_heads;
    settings.encoder.d_ff = size.d_ff;
    const auto m = fit_and_score(*data, settings);
    csv_body += csv::join({size.name, std::to_string(size.d_model), std::to_string(size.n_layers),
                           std::to_string(size.n_heads), std::to_string(size.d_ff), io::fmt_double(m.accuracy, 6),
                           io::fmt_double(m.macro_f1, 6)}) +
                "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-15s %-8zu %-7zu %-6zu %.2f      %.2f\n", size.name.c_str(), size.d_model,
                  size.n_layers, size.n_heads, m.accuracy, m.macro_f1);
    table += buf;
  }
  ctx.write_csv("sweep_encoder.csv", csv_body);
  ctx.write("sweep_encoder.txt", ctx.provenance() + table);
  ctx.out << table;
  return 0;
}

int stage_all(const Context& ctx) {
  for (auto* stage : {stage_ingest, stage_label, stage_split, stage_train, stage_evaluate, stage_simulate}) {
    if (int rc = stage(ctx); rc != 0) return rc;
  }
  return 0;
}

int generate_fixture(const fs::path& dir, std::size_t firms, std::uint64_t seed, std::ostream& out) {
  fixture::MarketFixtureSpec spec;
  spec.n_firms = firms;
  spec.seed = seed;
  const auto fx = fixture::market_fixture(spec);
  io::write_file_atomic(dir / "documents.csv", serialize_documents(fx.corpus, DocumentFormat::Csv));
  io::write_file_atomic(dir / "prices.csv", serialize_prices(fx.prices));
  json cfg;
  cfg["documents"] = "documents.csv";
  cfg["prices"] = "prices.csv";
  cfg["output_dir"] = "out";
  cfg["source"] = "news";
  cfg["corpus"] = {{"from_year", 2012}, {"to_year", 2019}, {"top_n", firms}, {"min_items", 40}, {"paragraph_min_chars", 200}};
  cfg["split"] = {{"train_years", {2012, 2017}}, {"test_years", {2019, 2019}}, {"dev_firm_fraction", 0.1}, {"horizon_days", 365}};
  cfg["features"] = {{"max_vocab", 50000}, {"min_df", 2}};
  cfg["model"] = "tfidf-logreg";
  cfg["encoder"] = {{"preset", "desk"}};
  cfg["sweep"] = {{"epochs", {1, 2, 3, 4}},
                  {"encoder_sizes",
                   {{{"name", "small"}, {"d_model", 32}, {"n_layers", 1}, {"n_heads", 2}, {"d_ff", 128}},
                    {{"name", "base"}, {"d_model", 64}, {"n_layers", 2}, {"n_heads", 4}, {"d_ff", 256}},
                    {{"name", "large"}, {"d_model", 96}, {"n_layers", 3}, {"n_heads", 6}, {"d_ff", 384}}}}};
  cfg["simulation"] = {{"k", 5}};
  cfg["seed"] = seed;
  io::write_file_atomic(dir / "config.json", cfg.dump(2) + "\n");
  out << "fixture: " << fx.corpus.size() << " documents, " << fx.prices.size() << " price series in " << dir.string()
      << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-based one-year stock performance classification and backtesting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string model, source, out_dir;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--seed", seed, "Override the global seed");
  app.add_option("--model", model, "tfidf-logreg | tfidf-gbt | transformer");
  app.add_option("--source", source, "news | blogs | report | any");
  app.add_option("--out", out_dir, "Output directory");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Load documents, select the most-covered firms, split reports into paragraphs"},
      {"label", "Compute one-year abnormal returns and tertile labels"},
      {"split", "Build the gapped train/dev/test split and check for leakage"},
      {"train", "Train the configured model"},
      {"evaluate", "Score the test split (accuracy, macro-F1)"},
      {"simulate", "Firm-level group returns and plot data"},
      {"sweep-epochs", "Encoder accuracy for each epoch count in the sweep"},
      {"sweep-encoder", "Encoder accuracy for each configured size"},
      {"all", "ingest, label, split, train, evaluate, simulate"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);
  auto* gen = app.add_subcommand("generate-fixture", "Write a synthetic corpus, prices, and config");
  std::size_t firms = 24;
  gen->add_option("--firms", firms, "Number of synthetic firms");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      if (out_dir.empty()) throw UsageError("generate-fixture needs --out <dir>");
      return generate_fixture(out_dir, firms, seed.value_or(7), out);
    }
    if (config_path.empty()) throw UsageError("--config <path> is required");
    auto cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      propagate_seed(cfg);
    }
    if (!model.empty()) cfg.model = parse_model_kind(model);
    if (!source.empty()) cfg.source = source;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    Context ctx{cfg, cfg.hash(), out};
    const std::map<std::string, std::function<int(const Context&)>> dispatch = {
        {"ingest", stage_ingest},     {"label", stage_label},         {"split", stage_split},
        {"train", stage_train},       {"evaluate", stage_evaluate},   {"simulate", stage_simulate},
        {"sweep-epochs", stage_sweep_epochs}, {"sweep-encoder", stage_sweep_encoder}, {"all", stage_all},
    };
    for (auto* sub : app.get_subcommands()) return dispatch.at(sub->get_name())(ctx);
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace textalpha
