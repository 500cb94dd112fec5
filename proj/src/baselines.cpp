#include "textalpha/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <json.hpp>

#include "textalpha/rng.hpp"

namespace textalpha {

PredictionRecord make_prediction(std::string id, const ClassProbabilities& probabilities) {
  return {std::move(id), probabilities, argmax_class(probabilities)};
}

void require_all_classes(const std::vector<TrainingExample>& examples) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& e : examples) ++counts[class_index(e.label)];
  for (int k = 0; k < kNumClasses; ++k) {
    if (counts[k] == 0) {
      throw DataError("training data has no example of class '" + std::string(class_name(class_from_index(k))) + "'");
    }
  }
}

namespace {

void check_dim(const SparseVector& x, std::size_t dim) {
  if (x.dim != dim) {
    throw UsageError("dimension mismatch: model expects " + std::to_string(dim) + ", input has " +
                     std::to_string(x.dim));
  }
}

double cross_entropy(const ClassProbabilities& p, PerformanceClass y) {
  return -std::log(std::max(p[class_index(y)], std::numeric_limits<double>::min()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

LogisticModel LogisticModel::zeros(std::size_t dim, LogisticHyperparams hp) {
  LogisticModel m;
  m.dim = dim;
  m.weights.assign(static_cast<std::size_t>(kNumClasses) * dim, 0.0);
  m.hyperparams = hp;
  return m;
}

double LogisticModel::weight_norm() const {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return std::sqrt(s);
}

std::array<double, kNumClasses> LogisticModel::logits(const SparseVector& x) const {
  std::array<double, kNumClasses> z = bias;
  for (const auto& [j, v] : x.entries) {
    for (int k = 0; k < kNumClasses; ++k) z[k] += weight(k, j) * v;
  }
  return z;
}

LogisticObjective logistic_objective(const LogisticModel& model, const std::vector<TrainingExample>& examples,
                                     double l2) {
  LogisticObjective out;
  out.grad_w.assign(model.weights.size(), 0.0);
  if (examples.empty()) throw UsageError("logistic_objective: no examples");
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const auto& e : examples) {
    check_dim(e.features, model.dim);
    const auto p = softmax3(model.logits(e.features));
    out.loss += cross_entropy(p, e.label) * inv_n;
    for (int k = 0; k < kNumClasses; ++k) {
      const double r = (p[k] - (class_index(e.label) == k ? 1.0 : 0.0)) * inv_n;
      out.grad_b[k] += r;
      for (const auto& [j, v] : e.features.entries) out.grad_w[static_cast<std::size_t>(k) * model.dim + j] += r * v;
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    sq += model.weights[i] * model.weights[i];
    out.grad_w[i] += l2 * model.weights[i];
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

LogisticModel train_logistic(const std::vector<TrainingExample>& examples, std::size_t dim,
                             const LogisticHyperparams& hp) {
  require_all_classes(examples);
  if (hp.batch_size == 0) throw UsageError("train_logistic: batch size must be positive");
  for (const auto& e : examples) check_dim(e.features, dim);
  auto model = LogisticModel::zeros(dim, hp);
  Rng rng(hp.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> grad_w;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      // Residuals first: every example in the batch sees the same parameters.
      std::vector<std::array<double, kNumClasses>> residual(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = examples[order[b]];
        const auto p = softmax3(model.logits(e.features));
        for (int k = 0; k < kNumClasses; ++k) {
          residual[b - start][k] = (p[k] - (class_index(e.label) == k ? 1.0 : 0.0)) * inv_b;
        }
      }
      // Decay: W <- W - lr * l2 * W.
      if (hp.l2 != 0.0) {
        const double shrink = 1.0 - hp.learning_rate * hp.l2;
        for (auto& w : model.weights) w *= shrink;
      }
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = examples[order[b]];
        for (int k = 0; k < kNumClasses; ++k) {
          const double step = hp.learning_rate * residual[b - start][k];
          model.bias[k] -= step;
          for (const auto& [j, v] : e.features.entries) model.weight(k, j) -= step * v;
        }
      }
    }
    model.epoch_loss.push_back(logistic_objective(model, examples, hp.l2).loss);
  }
  return model;
}

PredictionRecord predict_logistic(const LogisticModel& model, const SparseVector& x, std::string id) {
  check_dim(x, model.dim);
  return make_prediction(std::move(id), softmax3(model.logits(x)));
}

std::string LogisticModel::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = "tfidf-logreg";
  j["dim"] = dim;
  j["hyperparams"] = {{"learning_rate", hyperparams.learning_rate},
                      {"epochs", hyperparams.epochs},
                      {"l2", hyperparams.l2},
                      {"batch_size", hyperparams.batch_size},
                      {"seed", hyperparams.seed}};
  j["bias"] = bias;
  j["weights"] = weights;
  j["epoch_loss"] = epoch_loss;
  return j.dump();
}

LogisticModel LogisticModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LogisticModel m;
    m.dim = j.at("dim").get<std::size_t>();
    const auto& h = j.at("hyperparams");
    m.hyperparams.learning_rate = h.at("learning_rate").get<double>();
    m.hyperparams.epochs = h.at("epochs").get<int>();
    m.hyperparams.l2 = h.at("l2").get<double>();
    m.hyperparams.batch_size = h.at("batch_size").get<std::size_t>();
    m.hyperparams.seed = h.at("seed").get<std::uint64_t>();
    m.bias = j.at("bias").get<std::array<double, kNumClasses>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    if (m.weights.size() != static_cast<std::size_t>(kNumClasses) * m.dim) throw DataError("weight shape mismatch");
    for (double w : m.weights) {
      if (!std::isfinite(w)) throw DataError("non-finite weight");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed logistic model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Boosted trees
// ---------------------------------------------------------------------------

double RegressionTree::evaluate(const std::vector<double>& dense_row) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = dense_row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

std::vector<double> BoostedModel::densify(const SparseVector& x) const {
  check_dim(x, dim);
  std::vector<double> row(features.size(), 0.0);
  for (std::size_t c = 0; c < features.size(); ++c) {
    auto it = std::lower_bound(x.entries.begin(), x.entries.end(), features[c],
                               [](const auto& e, std::size_t idx) { return e.first < idx; });
    if (it != x.entries.end() && it->first == features[c]) row[c] = it->second;
  }
  return row;
}

std::array<double, kNumClasses> BoostedModel::scores(const SparseVector& x) const {
  const auto row = densify(x);
  std::array<double, kNumClasses> s{};
  for (const auto& round : rounds) {
    for (int k = 0; k < kNumClasses; ++k) s[k] += round[k].evaluate(row);
  }
  return s;
}

double mean_log_loss(const std::vector<std::array<double, kNumClasses>>& scores,
                     const std::vector<PerformanceClass>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += cross_entropy(softmax3(scores[i]), labels[i]);
  return total / static_cast<double>(scores.size());
}

namespace {

struct ColumnEntry {
  double value;
  std::size_t row;
};

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows, std::size_t n_features,
             const BoostHyperparams& hp)
      : rows_(rows), n_features_(n_features), hp_(hp) {}

  RegressionTree grow(const std::vector<double>& g, const std::vector<double>& h) {
    g_ = &g;
    h_ = &h;
    tree_ = {};
    std::vector<std::size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), 0);
    build(all, 0);
    root_split_ = tree_.nodes.size() > 1;
    return std::move(tree_);
  }

  bool root_split() const { return root_split_; }

 private:
  double score(double G, double H) const { return H + hp_.lambda > 0.0 ? G * G / (H + hp_.lambda) : 0.0; }

  SplitChoice best_split(const std::vector<std::size_t>& members, double G, double H) {
    // Bucket the node's nonzero entries per column.
    buckets_.resize(n_features_);
    touched_.clear();
    for (auto r : members) {
      for (const auto& [c, v] : rows_[r]) {
        if (buckets_[c].empty()) touched_.push_back(c);
        buckets_[c].push_back({v, r});
      }
    }
    std::sort(touched_.begin(), touched_.end());
    SplitChoice best;
    const double parent = score(G, H);
    const double n_members = static_cast<double>(members.size());
    for (auto c : touched_) {
      auto& entries = buckets_[c];
      std::sort(entries.begin(), entries.end(), [](const ColumnEntry& a, const ColumnEntry& b) {
        return a.value != b.value ? a.value < b.value : a.row < b.row;
      });
      double g_nz = 0.0, h_nz = 0.0;
      for (const auto& e : entries) {
        g_nz += (*g_)[e.row];
        h_nz += (*h_)[e.row];
      }
      const bool has_zero = static_cast<double>(entries.size()) < n_members;
      // Sorted value groups, with the implicit zero block at its ordered position.
      double gl = 0.0, hl = 0.0;
      bool zero_done = !has_zero;
      std::size_t i = 0;
      std::optional<double> prev;
      auto consider = [&](double next_value) {
        if (!prev) return;
        const double gain = 0.5 * (score(gl, hl) + score(G - gl, H - hl) - parent);
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<int>(c);
          best.threshold = 0.5 * (*prev + next_value);
        }
      };
      while (i < entries.size() || !zero_done) {
        double value;
        if (!zero_done && (i == entries.size() || entries[i].value > 0.0)) {
          value = 0.0;
          consider(value);
          gl += G - g_nz;
          hl += H - h_nz;
          zero_done = true;
        } else {
          value = entries[i].value;
          consider(value);
          while (i < entries.size() && entries[i].value == value) {
            gl += (*g_)[entries[i].row];
            hl += (*h_)[entries[i].row];
            ++i;
          }
        }
        prev = value;
      }
      entries.clear();
    }
    return best;
  }

  int build(const std::vector<std::size_t>& members, int depth) {
    double G = 0.0, H = 0.0;
    for (auto r : members) {
      G += (*g_)[r];
      H += (*h_)[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    SplitChoice split;
    if (depth < hp_.max_depth && members.size() >= 2) split = best_split(members, G, H);
    if (split.feature < 0) {
      const bool root = id == 0;
      // A root without a positive-gain split yields a constant-zero tree.
      tree_.nodes[static_cast<std::size_t>(id)].value =
          root ? 0.0 : (H + hp_.lambda > 0.0 ? -G / (H + hp_.lambda) * hp_.eta : 0.0);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto r : members) {
      double v = 0.0;
      for (const auto& [c, x] : rows_[r]) {
        if (c == static_cast<std::size_t>(split.feature)) {
          v = x;
          break;
        }
      }
      (v < split.threshold ? left : right).push_back(r);
    }
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const std::vector<std::vector<std::pair<std::size_t, double>>>& rows_;
  std::size_t n_features_;
  BoostHyperparams hp_;
  const std::vector<double>* g_ = nullptr;
  const std::vector<double>* h_ = nullptr;
  RegressionTree tree_;
  bool root_split_ = false;
  std::vector<std::vector<ColumnEntry>> buckets_;
  std::vector<std::size_t> touched_;
};

}  // namespace

BoostedModel train_boosted(const std::vector<TrainingExample>& examples, std::size_t dim, const BoostHyperparams& hp) {
  require_all_classes(examples);
  if (hp.max_depth < 1) throw UsageError("train_boosted: max_depth must be >= 1");
  if (!(hp.eta > 0.0 && hp.eta <= 1.0)) throw UsageError("train_boosted: eta must lie in (0, 1]");
  for (const auto& e : examples) check_dim(e.features, dim);

  BoostedModel model;
  model.dim = dim;
  model.hyperparams = hp;

  // Column selection by nonzero count.
  std::vector<std::size_t> nnz(dim, 0);
  for (const auto& e : examples) {
    for (const auto& [j, v] : e.features.entries) {
      if (v != 0.0) ++nnz[j];
    }
  }
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < dim; ++j) {
    if (nnz[j] > 0) candidates.push_back(j);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](auto a, auto b) { return nnz[a] > nnz[b]; });
  if (candidates.size() > hp.feature_cap) candidates.resize(hp.feature_cap);
  std::sort(candidates.begin(), candidates.end());
  model.features = candidates;

  std::vector<std::ptrdiff_t> column_of(dim, -1);
  for (std::size_t c = 0; c < model.features.size(); ++c) column_of[model.features[c]] = static_cast<std::ptrdiff_t>(c);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(examples.size());
  std::vector<PerformanceClass> labels(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    labels[i] = examples[i].label;
    for (const auto& [j, v] : examples[i].features.entries) {
      if (column_of[j] >= 0 && v != 0.0) rows[i].emplace_back(static_cast<std::size_t>(column_of[j]), v);
    }
  }

  const std::size_t n = examples.size();
  std::vector<std::array<double, kNumClasses>> scores(n, std::array<double, kNumClasses>{});
  model.round_loss.push_back(mean_log_loss(scores, labels));
  TreeGrower grower(rows, model.features.size(), hp);
  std::vector<double> g(n), h(n);
  std::vector<std::vector<double>> dense(n);
  for (std::size_t i = 0; i < n; ++i) {
    dense[i].assign(model.features.size(), 0.0);
    for (const auto& [c, v] : rows[i]) dense[i][c] = v;
  }

  for (int round = 0; round < hp.rounds; ++round) {
    std::vector<ClassProbabilities> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = softmax3(scores[i]);
    std::array<RegressionTree, kNumClasses> trees;
    bool any_split = false;
    for (int k = 0; k < kNumClasses; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = p[i][k] - (class_index(labels[i]) == k ? 1.0 : 0.0);
        h[i] = p[i][k] * (1.0 - p[i][k]);
      }
      trees[k] = grower.grow(g, h);
      any_split = any_split || grower.root_split();
    }
    if (!any_split) break;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < kNumClasses; ++k) scores[i][k] += trees[k].evaluate(dense[i]);
    }
    model.rounds.push_back(std::move(trees));
    model.round_loss.push_back(mean_log_loss(scores, labels));
  }
  return model;
}

PredictionRecord predict_boosted(const BoostedModel& model, const SparseVector& x, std::string id) {
  return make_prediction(std::move(id), softmax3(model.scores(x)));
}

std::string BoostedModel::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = "tfidf-gbt";
  j["dim"] = dim;
  j["hyperparams"] = {{"rounds", hyperparams.rounds},       {"max_depth", hyperparams.max_depth},
                      {"eta", hyperparams.eta},             {"lambda", hyperparams.lambda},
                      {"feature_cap", hyperparams.feature_cap}, {"seed", hyperparams.seed}};
  j["features"] = features;
  auto& jr = j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& round : rounds) {
    auto jround = nlohmann::ordered_json::array();
    for (const auto& tree : round) {
      auto jt = nlohmann::ordered_json::array();
      for (const auto& node : tree.nodes) {
        if (node.feature < 0) {
          jt.push_back({{"leaf", node.value}});
        } else {
          jt.push_back({{"feature", node.feature}, {"threshold", node.threshold}, {"left", node.left}, {"right", node.right}});
        }
      }
      jround.push_back(std::move(jt));
    }
    jr.push_back(std::move(jround));
  }
  j["round_loss"] = round_loss;
  return j.dump();
}

BoostedModel BoostedModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BoostedModel m;
    m.dim = j.at("dim").get<std::size_t>();
    const auto& h = j.at("hyperparams");
    m.hyperparams.rounds = h.at("rounds").get<int>();
    m.hyperparams.max_depth = h.at("max_depth").get<int>();
    m.hyperparams.eta = h.at("eta").get<double>();
    m.hyperparams.lambda = h.at("lambda").get<double>();
    m.hyperparams.feature_cap = h.at("feature_cap").get<std::size_t>();
    m.hyperparams.seed = h.at("seed").get<std::uint64_t>();
    m.features = j.at("features").get<std::vector<std::size_t>>();
    for (auto f : m.features) {
      if (f >= m.dim) throw DataError("boosted model: feature index out of range");
    }
    for (const auto& jround : j.at("rounds")) {
      std::array<RegressionTree, kNumClasses> round;
      if (jround.size() != kNumClasses) throw DataError("boosted model: round must hold one tree per class");
      for (int k = 0; k < kNumClasses; ++k) {
        for (const auto& jn : jround[static_cast<std::size_t>(k)]) {
          TreeNode node;
          if (jn.contains("leaf")) {
            node.value = jn.at("leaf").get<double>();
            if (!std::isfinite(node.value)) throw DataError("boosted model: non-finite leaf");
          } else {
            node.feature = jn.at("feature").get<int>();
            node.threshold = jn.at("threshold").get<double>();
            node.left = jn.at("left").get<int>();
            node.right = jn.at("right").get<int>();
            if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= m.features.size()) {
              throw DataError("boosted model: split feature out of range");
            }
          }
          round[k].nodes.push_back(node);
        }
        const auto count = static_cast<int>(round[k].nodes.size());
        for (const auto& node : round[k].nodes) {
          if (node.feature >= 0 && (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count)) {
            throw DataError("boosted model: child index out of range");
          }
        }
      }
      m.rounds.push_back(std::move(round));
    }
    m.round_loss = j.at("round_loss").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed boosted model: ") + e.what());
  }
}

}  // namespace textalpha
