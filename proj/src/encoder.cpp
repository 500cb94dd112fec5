#include "textalpha/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "textalpha/io.hpp"

namespace textalpha::encoder {

namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInitStd = 0.02;

// ---------------------------------------------------------------------------
// Small kernels
// ---------------------------------------------------------------------------

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * std::exp(-0.5 * x * x) * (0.5 * M_2_SQRTPI * M_SQRT1_2);
}

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const auto rows = x.rows();
  const auto cols = static_cast<double>(x.cols());
  cache.xhat.resize(rows, x.cols());
  cache.inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).sum() / cols;
    const auto centered = (x.row(r).array() - mean).matrix();
    const double var = centered.squaredNorm() / cols;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = centered * inv;
  }
  Matrix y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

// Returns dL/dx; accumulates gain/bias gradients.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache, Matrix& dgain,
                           Matrix& dbias) {
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const double inv_cols = 1.0 / static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() * inv_cols;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) * inv_cols;
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

// Inverted dropout mask (entries 0 or 1/(1-p)); empty when inactive.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Mode mode, Rng* rng) {
  if (mode != Mode::Train || rng == nullptr || p <= 0.0) return {};
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform() < p ? 0.0 : keep;
  return m;
}

Matrix apply_mask(const Matrix& x, const Matrix& mask) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask);
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = kInitStd * rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// Forward caches
// ---------------------------------------------------------------------------

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head
  Matrix concat;
  Matrix attn_drop;
  LayerNormCache ln1;
  Matrix x1;
  Matrix pre_act;
  Matrix act;
  Matrix ffn_drop;
  LayerNormCache ln2;
};

struct ForwardCache {
  Matrix embed_drop;
  std::vector<LayerCache> layers;
  Matrix cls;     // 1 x d
  Matrix pooled;  // 1 x d, after tanh
  Matrix pool_drop;
  Matrix pooled_dropped;
  Logits logits{};
};

void check_sequence(const EncoderModel& model, const TokenSequence& seq) {
  seq.validate();
  if (seq.size() > model.config.max_seq_len) {
    throw UsageError("sequence of length " + std::to_string(seq.size()) + " exceeds max_seq_len " +
                     std::to_string(model.config.max_seq_len));
  }
  for (int id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.config.vocab_size) {
      throw UsageError("token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

Matrix masked_attention_probs(const Matrix& q, const Matrix& k, const std::vector<int>& key_mask) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix s = (q * k.transpose()) * scale;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_mask[static_cast<std::size_t>(c)] == 0) {
        s(r, c) = -std::numeric_limits<double>::infinity();
      } else {
        mx = std::max(mx, s(r, c));
      }
    }
    double z = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double e = key_mask[static_cast<std::size_t>(c)] == 0 ? 0.0 : std::exp(s(r, c) - mx);
      s(r, c) = e;
      z += e;
    }
    s.row(r) /= z;
  }
  return s;
}

Logits run_forward(const EncoderModel& model, const TokenSequence& seq, Mode mode, Rng* rng, ForwardCache& cache) {
  check_sequence(model, seq);
  const auto& cfg = model.config;
  const auto& P = model.params;
  const auto len = static_cast<Eigen::Index>(seq.size());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto dk = static_cast<Eigen::Index>(cfg.head_dim());

  Matrix x(len, d);
  for (Eigen::Index i = 0; i < len; ++i) {
    x.row(i) = P.token_embedding.row(seq.ids[static_cast<std::size_t>(i)]) + P.position_embedding.row(i);
  }
  cache.embed_drop = dropout_mask(len, d, cfg.dropout, mode, rng);
  x = apply_mask(x, cache.embed_drop);

  cache.layers.assign(P.layers.size(), {});
  for (std::size_t l = 0; l < P.layers.size(); ++l) {
    const auto& W = P.layers[l];
    auto& c = cache.layers[l];
    c.input = x;
    c.q = x * W.wq;
    c.q.rowwise() += W.bq.row(0);
    c.k = x * W.wk;
    c.k.rowwise() += W.bk.row(0);
    c.v = x * W.wv;
    c.v.rowwise() += W.bv.row(0);
    c.concat.resize(len, d);
    c.probs.resize(cfg.n_heads);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dk;
      c.probs[h] = masked_attention_probs(c.q.middleCols(off, dk), c.k.middleCols(off, dk), seq.mask);
      c.concat.middleCols(off, dk).noalias() = c.probs[h] * c.v.middleCols(off, dk);
    }
    Matrix attn = c.concat * W.wo;
    attn.rowwise() += W.bo.row(0);
    c.attn_drop = dropout_mask(len, d, cfg.dropout, mode, rng);
    c.x1 = layer_norm(x + apply_mask(attn, c.attn_drop), W.ln1_gain, W.ln1_bias, c.ln1);

    c.pre_act = c.x1 * W.w1;
    c.pre_act.rowwise() += W.b1.row(0);
    c.act = c.pre_act.unaryExpr([](double v) { return gelu(v); });
    Matrix ffn = c.act * W.w2;
    ffn.rowwise() += W.b2.row(0);
    c.ffn_drop = dropout_mask(len, d, cfg.dropout, mode, rng);
    x = layer_norm(c.x1 + apply_mask(ffn, c.ffn_drop), W.ln2_gain, W.ln2_bias, c.ln2);
  }

  cache.cls = x.row(0);
  Matrix z = cache.cls * P.pooler_w + P.pooler_b;
  cache.pooled = z.array().tanh();
  cache.pool_drop = dropout_mask(1, d, cfg.dropout, mode, rng);
  cache.pooled_dropped = apply_mask(cache.pooled, cache.pool_drop);
  const Matrix logits = cache.pooled_dropped * P.classifier_w + P.classifier_b;
  for (int k = 0; k < kNumClasses; ++k) cache.logits[k] = logits(0, k);
  return cache.logits;
}

// dlogits: gradient of the loss w.r.t. the logits of this example.
void run_backward(const EncoderModel& model, const TokenSequence& seq, const ForwardCache& cache,
                  const Logits& dlogits, EncoderParams& G) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  const auto len = static_cast<Eigen::Index>(seq.size());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto dk = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Matrix dl(1, kNumClasses);
  for (int k = 0; k < kNumClasses; ++k) dl(0, k) = dlogits[k];
  G.classifier_w.noalias() += cache.pooled_dropped.transpose() * dl;
  G.classifier_b += dl;
  Matrix dpooled = apply_mask(dl * P.classifier_w.transpose(), cache.pool_drop);
  const Matrix dz = dpooled.array() * (1.0 - cache.pooled.array().square());
  G.pooler_w.noalias() += cache.cls.transpose() * dz;
  G.pooler_b += dz;

  Matrix dx = Matrix::Zero(len, d);
  dx.row(0) = dz * P.pooler_w.transpose();

  for (std::size_t li = P.layers.size(); li-- > 0;) {
    const auto& W = P.layers[li];
    auto& GW = G.layers[li];
    const auto& c = cache.layers[li];

    Matrix ds2 = layer_norm_backward(dx, W.ln2_gain, c.ln2, GW.ln2_gain, GW.ln2_bias);
    Matrix dffn = apply_mask(ds2, c.ffn_drop);
    GW.w2.noalias() += c.act.transpose() * dffn;
    GW.b2.row(0) += dffn.colwise().sum();
    Matrix dact = dffn * W.w2.transpose();
    Matrix dpre = dact.array() * c.pre_act.unaryExpr([](double v) { return gelu_grad(v); }).array();
    GW.w1.noalias() += c.x1.transpose() * dpre;
    GW.b1.row(0) += dpre.colwise().sum();
    Matrix dx1 = ds2;
    dx1.noalias() += dpre * W.w1.transpose();

    Matrix ds1 = layer_norm_backward(dx1, W.ln1_gain, c.ln1, GW.ln1_gain, GW.ln1_bias);
    Matrix dattn = apply_mask(ds1, c.attn_drop);
    GW.wo.noalias() += c.concat.transpose() * dattn;
    GW.bo.row(0) += dattn.colwise().sum();
    const Matrix dconcat = dattn * W.wo.transpose();

    Matrix dq(len, d), dkm(len, d), dv(len, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dk;
      const Matrix& p = c.probs[h];
      const auto dout = dconcat.middleCols(off, dk);
      const Matrix dp = dout * c.v.middleCols(off, dk).transpose();
      dv.middleCols(off, dk).noalias() = p.transpose() * dout;
      Matrix dscore = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
      dscore *= scale;
      dq.middleCols(off, dk).noalias() = dscore * c.k.middleCols(off, dk);
      dkm.middleCols(off, dk).noalias() = dscore.transpose() * c.q.middleCols(off, dk);
    }
    GW.wq.noalias() += c.input.transpose() * dq;
    GW.bq.row(0) += dq.colwise().sum();
    GW.wk.noalias() += c.input.transpose() * dkm;
    GW.bk.row(0) += dkm.colwise().sum();
    GW.wv.noalias() += c.input.transpose() * dv;
    GW.bv.row(0) += dv.colwise().sum();
    dx = ds1;
    dx.noalias() += dq * W.wq.transpose();
    dx.noalias() += dkm * W.wk.transpose();
    dx.noalias() += dv * W.wv.transpose();
  }

  dx = apply_mask(dx, cache.embed_drop);
  for (Eigen::Index i = 0; i < len; ++i) {
    G.token_embedding.row(seq.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    G.position_embedding.row(i) += dx.row(i);
  }
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

EncoderConfig EncoderConfig::paper(std::size_t vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.d_model = 768;
  c.n_heads = 12;
  c.n_layers = 12;
  c.d_ff = 3072;
  c.max_seq_len = 200;
  c.dropout = 0.1;
  c.learning_rate = 1e-5;
  c.batch_size = 16;
  c.epochs = 1;
  return c;
}

EncoderConfig EncoderConfig::desk(std::size_t vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.d_model = 128;
  c.n_heads = 4;
  c.n_layers = 2;
  c.d_ff = 512;
  c.max_seq_len = 200;
  c.dropout = 0.1;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.epochs = 3;
  c.warmup_fraction = 0.1;
  c.linear_decay = true;
  return c;
}

void EncoderConfig::validate() const {
  if (vocab_size < 3) throw UsageError("encoder: vocab_size must cover the special tokens");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw UsageError("encoder: d_model must be a positive multiple of n_heads");
  }
  if (d_ff == 0) throw UsageError("encoder: d_ff must be positive");
  if (max_seq_len < 2) throw UsageError("encoder: max_seq_len must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("encoder: dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw UsageError("encoder: learning rate must be positive");
  if (batch_size == 0) throw UsageError("encoder: batch size must be positive");
  if (epochs < 0) throw UsageError("encoder: negative epochs");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw UsageError("encoder: warmup_fraction must lie in [0, 1)");
}

// ---------------------------------------------------------------------------
// Vocabulary and sequences
// ---------------------------------------------------------------------------

WordVocab::WordVocab() : terms_{"[PAD]", "[UNK]", "[CLS]"} {
  for (std::size_t i = 0; i < terms_.size(); ++i) ids_.emplace(terms_[i], static_cast<int>(i));
}

WordVocab WordVocab::build(const std::vector<std::vector<std::string>>& documents, std::size_t cap) {
  if (documents.empty()) throw DataError("encoder vocabulary: empty corpus");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& doc : documents) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cap) ranked.resize(cap);
  std::vector<std::string> words;
  for (auto& [w, _] : ranked) words.push_back(w);
  return from_terms(words);
}

WordVocab WordVocab::from_terms(const std::vector<std::string>& words) {
  WordVocab v;
  for (const auto& w : words) {
    if (v.ids_.count(w)) throw DataError("encoder vocabulary: duplicate word '" + w + "'");
    v.ids_.emplace(w, static_cast<int>(v.terms_.size()));
    v.terms_.push_back(w);
  }
  return v;
}

int WordVocab::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

void TokenSequence::validate() const {
  if (ids.empty() || ids[0] != kClsId) throw UsageError("token sequence must start with [CLS]");
  if (mask.size() != ids.size()) throw UsageError("token sequence: mask length differs from ids");
  if (mask[0] != 1) throw UsageError("token sequence: [CLS] must be unmasked");
  for (std::size_t i = 1; i < mask.size(); ++i) {
    if (mask[i] != 0 && mask[i] != 1) throw UsageError("token sequence: mask entries must be 0 or 1");
    if (mask[i] > mask[i - 1]) throw UsageError("token sequence: padding must be trailing");
  }
}

TokenSequence encode(const WordVocab& vocab, const std::vector<std::string>& tokens, std::size_t max_seq_len) {
  TokenSequence seq;
  seq.ids.push_back(kClsId);
  for (const auto& t : tokens) {
    if (seq.ids.size() >= max_seq_len) break;
    seq.ids.push_back(vocab.id_of(t));
  }
  seq.mask.assign(seq.ids.size(), 1);
  return seq;
}

TokenSequence pad_to(TokenSequence seq, std::size_t length) {
  while (seq.ids.size() < length) {
    seq.ids.push_back(kPadId);
    seq.mask.push_back(0);
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

void EncoderParams::for_each(const std::function<void(const std::string&, Matrix&, bool)>& f) {
  f("token_embedding", token_embedding, true);
  f("position_embedding", position_embedding, true);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& L = layers[l];
    const auto p = "layer" + std::to_string(l) + ".";
    f(p + "wq", L.wq, true);
    f(p + "bq", L.bq, false);
    f(p + "wk", L.wk, true);
    f(p + "bk", L.bk, false);
    f(p + "wv", L.wv, true);
    f(p + "bv", L.bv, false);
    f(p + "wo", L.wo, true);
    f(p + "bo", L.bo, false);
    f(p + "ln1_gain", L.ln1_gain, false);
    f(p + "ln1_bias", L.ln1_bias, false);
    f(p + "w1", L.w1, true);
    f(p + "b1", L.b1, false);
    f(p + "w2", L.w2, true);
    f(p + "b2", L.b2, false);
    f(p + "ln2_gain", L.ln2_gain, false);
    f(p + "ln2_bias", L.ln2_bias, false);
  }
  f("pooler_w", pooler_w, true);
  f("pooler_b", pooler_b, false);
  f("classifier_w", classifier_w, true);
  f("classifier_b", classifier_b, false);
}

void EncoderParams::for_each(const std::function<void(const std::string&, const Matrix&, bool)>& f) const {
  const_cast<EncoderParams*>(this)->for_each(
      [&](const std::string& name, Matrix& m, bool decays) { f(name, m, decays); });
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  z.set_zero();
  return z;
}

void EncoderParams::set_zero() {
  for_each([](const std::string&, Matrix& m, bool) { m.setZero(); });
}

std::size_t EncoderParams::count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m, bool) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

EncoderModel EncoderModel::initialize(const EncoderConfig& config) {
  config.validate();
  EncoderModel model;
  model.config = config;
  Rng rng(config.seed);
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto ff = static_cast<Eigen::Index>(config.d_ff);
  auto& P = model.params;
  P.token_embedding = normal_matrix(static_cast<Eigen::Index>(config.vocab_size), d, rng);
  P.position_embedding = normal_matrix(static_cast<Eigen::Index>(config.max_seq_len), d, rng);
  P.layers.resize(config.n_layers);
  for (auto& L : P.layers) {
    L.wq = normal_matrix(d, d, rng);
    L.wk = normal_matrix(d, d, rng);
    L.wv = normal_matrix(d, d, rng);
    L.wo = normal_matrix(d, d, rng);
    L.bq = L.bk = L.bv = L.bo = Matrix::Zero(1, d);
    L.ln1_gain = L.ln2_gain = Matrix::Ones(1, d);
    L.ln1_bias = L.ln2_bias = Matrix::Zero(1, d);
    L.w1 = normal_matrix(d, ff, rng);
    L.b1 = Matrix::Zero(1, ff);
    L.w2 = normal_matrix(ff, d, rng);
    L.b2 = Matrix::Zero(1, d);
  }
  P.pooler_w = normal_matrix(d, d, rng);
  P.pooler_b = Matrix::Zero(1, d);
  P.classifier_w = normal_matrix(d, kNumClasses, rng);
  P.classifier_b = Matrix::Zero(1, kNumClasses);
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v, const std::vector<int>& key_mask) {
  if (q.cols() != k.cols()) throw UsageError("attention: query and key widths differ");
  if (k.rows() != v.rows()) throw UsageError("attention: key and value lengths differ");
  if (static_cast<std::size_t>(k.rows()) != key_mask.size()) throw UsageError("attention: mask length mismatch");
  if (std::none_of(key_mask.begin(), key_mask.end(), [](int m) { return m != 0; })) {
    throw UsageError("attention: every key is masked");
  }
  AttentionResult out;
  out.weights = masked_attention_probs(q, k, key_mask);
  out.output = out.weights * v;
  return out;
}

Matrix layer_norm_normalized(const Matrix& x) {
  LayerNormCache cache;
  layer_norm(x, Matrix::Ones(1, x.cols()), Matrix::Zero(1, x.cols()), cache);
  return cache.xhat;
}

Logits forward(const EncoderModel& model, const TokenSequence& seq, Mode mode, Rng* rng) {
  ForwardCache cache;
  return run_forward(model, seq, mode, rng, cache);
}

double loss_and_gradient(const EncoderModel& model, const std::vector<const LabeledSequence*>& batch, Mode mode,
                         Rng* rng, EncoderParams& grad) {
  if (batch.empty()) throw UsageError("loss_and_gradient: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache cache;
  for (const auto* ex : batch) {
    const auto logits = run_forward(model, ex->sequence, mode, rng, cache);
    const auto p = softmax3(logits);
    const int y = class_index(ex->label);
    loss += -std::log(std::max(p[y], std::numeric_limits<double>::min())) * inv_b;
    Logits dl{};
    for (int k = 0; k < kNumClasses; ++k) dl[k] = (p[k] - (k == y ? 1.0 : 0.0)) * inv_b;
    run_backward(model, ex->sequence, cache, dl, grad);
  }
  return loss;
}

double scheduled_rate(const EncoderConfig& config, std::size_t step, std::size_t total_steps) {
  const double t = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  double warmup = 0.0;
  if (config.warmup_fraction > 0.0) {
    warmup = std::max(1.0, config.warmup_fraction * total);
    if (t < warmup) return config.learning_rate * t / warmup;
  }
  if (!config.linear_decay || total <= warmup) return config.learning_rate;
  return config.learning_rate * std::max(0.0, (total - t) / (total - warmup));
}

TrainResult train_encoder(EncoderModel model, const std::vector<LabeledSequence>& data, const EncoderConfig& config) {
  config.validate();
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& ex : data) ++counts[class_index(ex.label)];
  for (int k = 0; k < kNumClasses; ++k) {
    if (counts[k] == 0) {
      throw DataError("encoder training data has no example of class '" +
                      std::string(class_name(class_from_index(k))) + "'");
    }
  }
  // Truncate to the model's window.
  std::vector<LabeledSequence> examples = data;
  for (auto& ex : examples) {
    if (ex.sequence.size() > model.config.max_seq_len) {
      ex.sequence.ids.resize(model.config.max_seq_len);
      ex.sequence.mask.resize(model.config.max_seq_len);
    }
  }

  TrainResult result;
  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  EncoderParams grad = model.params.zeros_like();
  EncoderParams m1 = grad;
  EncoderParams m2 = grad;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  const std::size_t batches = (order.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * static_cast<std::size_t>(config.epochs);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const LabeledSequence*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&examples[order[i]]);
      grad.set_zero();
      const double loss = loss_and_gradient(model, batch, Mode::Train, &dropout_rng, grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at batch " + std::to_string(step) + " (epoch " + std::to_string(epoch) +
                            ")");
      }
      ++step;

      double sq = 0.0;
      grad.for_each([&](const std::string&, const Matrix& g, bool) { sq += g.squaredNorm(); });
      const double norm = std::sqrt(sq);
      const double clip = norm > config.clip_norm ? config.clip_norm / norm : 1.0;

      const double lr = scheduled_rate(config, step, total_steps);
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      std::vector<Matrix*> gs, a, b;
      grad.for_each([&](const std::string&, Matrix& g, bool) { gs.push_back(&g); });
      m1.for_each([&](const std::string&, Matrix& g, bool) { a.push_back(&g); });
      m2.for_each([&](const std::string&, Matrix& g, bool) { b.push_back(&g); });
      std::size_t t = 0;
      model.params.for_each([&](const std::string&, Matrix& w, bool decays) {
        Matrix& g = *gs[t];
        Matrix& m = *a[t];
        Matrix& v = *b[t];
        ++t;
        if (clip != 1.0) g *= clip;
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
        if (decays && config.weight_decay != 0.0) w *= 1.0 - lr * config.weight_decay;
        w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.adam_epsilon);
      });
      result.log.push_back({epoch, step, loss});
    }
  }
  result.model = std::move(model);
  return result;
}

ClassProbabilities predict_proba(const EncoderModel& model, const TokenSequence& seq) {
  TokenSequence s = seq;
  if (s.size() > model.config.max_seq_len) {
    s.ids.resize(model.config.max_seq_len);
    s.mask.resize(model.config.max_seq_len);
  }
  return softmax3(forward(model, s, Mode::Eval));
}

std::string loss_log_csv(const std::vector<LossLogRow>& log) {
  std::string out = "epoch,step,loss\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + io::fmt_double(r.loss, 12) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

std::string config_to_json(const EncoderConfig& c) {
  nlohmann::ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_layers"] = c.n_layers;
  j["d_ff"] = c.d_ff;
  j["max_seq_len"] = c.max_seq_len;
  j["dropout"] = c.dropout;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["weight_decay"] = c.weight_decay;
  j["clip_norm"] = c.clip_norm;
  j["warmup_fraction"] = c.warmup_fraction;
  j["linear_decay"] = c.linear_decay;
  return j.dump();
}

EncoderConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EncoderConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.linear_decay = j.value("linear_decay", c.linear_decay);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed encoder config: ") + e.what());
  }
}

std::string save_checkpoint(const EncoderModel& model, const WordVocab& vocab, const std::string& extra_json) {
  nlohmann::ordered_json header;
  header["format"] = "textalpha-encoder";
  header["version"] = 1;
  header["config"] = nlohmann::ordered_json::parse(config_to_json(model.config));
  auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
  model.params.for_each([&](const std::string& name, const Matrix& m, bool) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["vocab"] = std::vector<std::string>(vocab.terms().begin() + 3, vocab.terms().end());
  header["extra"] = nlohmann::ordered_json::parse(extra_json);
  const auto head = header.dump();

  std::string out = "TXAENC01";
  put_u64(out, head.size());
  out += head;
  model.params.for_each([&](const std::string&, const Matrix& m, bool) {
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
  });
  return out;
}

void load_checkpoint(const std::string& bytes, EncoderModel& model, WordVocab& vocab) {
  if (bytes.size() < 16 || bytes.compare(0, 8, "TXAENC01") != 0) throw DataError("not an encoder checkpoint");
  const auto head_len = get_u64(bytes, 8);
  if (16 + head_len > bytes.size()) throw DataError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  EncoderConfig config = config_from_json(header.at("config").dump());
  model = EncoderModel::initialize(config);
  vocab = WordVocab::from_terms(header.at("vocab").get<std::vector<std::string>>());
  if (vocab.size() != config.vocab_size) throw DataError("checkpoint vocabulary size disagrees with config");
  std::size_t pos = 16 + head_len;
  std::size_t t = 0;
  const auto& tensors = header.at("tensors");
  model.params.for_each([&](const std::string& name, Matrix& m, bool) {
    if (t >= tensors.size() || tensors[t].at("name") != name || tensors[t].at("rows") != m.rows() ||
        tensors[t].at("cols") != m.cols()) {
      throw DataError("checkpoint tensor table does not match config at '" + name + "'");
    }
    ++t;
    if (pos + 8 * static_cast<std::size_t>(m.size()) > bytes.size()) throw DataError("truncated checkpoint data");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = std::bit_cast<double>(get_u64(bytes, pos));
      if (!std::isfinite(v)) throw DataError("non-finite parameter in checkpoint");
      m.data()[i] = v;
      pos += 8;
    }
  });
  if (pos != bytes.size()) throw DataError("trailing bytes in checkpoint");
}

}  // namespace textalpha::encoder
