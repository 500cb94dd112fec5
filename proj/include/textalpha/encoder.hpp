#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "textalpha/common.hpp"
#include "textalpha/rng.hpp"

namespace textalpha::encoder {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 128;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 512;
  std::size_t max_seq_len = 200;
  double dropout = 0.1;
  double learning_rate = 1e-5;
  std::size_t batch_size = 16;
  int epochs = 1;
  std::uint64_t seed = 42;

  // Optimiser constants.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  // Learning-rate schedule: linear warmup over this fraction of steps, then
  // optional linear decay to zero. 0 / false gives a constant rate.
  double warmup_fraction = 0.0;
  bool linear_decay = false;

  /// Fine-tuning reference values: lr 1e-5, batch 16, 200 tokens, 1 epoch,
  /// dropout 0.1, with base-size dimensions (768 wide, 12 layers, 12 heads).
  static EncoderConfig paper(std::size_t vocab_size);
  /// Desk-scale preset trained from scratch: 128 wide, 2 layers, 4 heads, lr 1e-3 with 10% warmup and linear decay,
  /// batch 8, 3 epochs.
  static EncoderConfig desk(std::size_t vocab_size);

  /// Throws UsageError on inconsistent dimensions or rates.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
};

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;

/// Word-level vocabulary with [PAD]=0, [UNK]=1, [CLS]=2 and words from id 3.
class WordVocab {
 public:
  WordVocab();
  /// Top `cap` tokens by frequency (ties lexicographic). Throws DataError on empty input.
  static WordVocab build(const std::vector<std::vector<std::string>>& documents, std::size_t cap);
  static WordVocab from_terms(const std::vector<std::string>& words);

  std::size_t size() const { return terms_.size(); }
  int id_of(const std::string& token) const;
  const std::vector<std::string>& terms() const { return terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> ids_;
};

/// Token ids beginning with [CLS]; mask 1 for real tokens, 0 for trailing [PAD].
struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> mask;

  std::size_t size() const { return ids.size(); }
  /// Throws UsageError when position 0 is not [CLS], lengths differ, or padding is not trailing.
  void validate() const;
};

/// [CLS] followed by the first max_seq_len - 1 tokens.
TokenSequence encode(const WordVocab& vocab, const std::vector<std::string>& tokens, std::size_t max_seq_len);
TokenSequence pad_to(TokenSequence seq, std::size_t length);

/// Every trainable tensor. Vectors are stored as 1 x n matrices.
struct LayerParams {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln1_gain, ln1_bias;
  Matrix w1, b1, w2, b2;
  Matrix ln2_gain, ln2_bias;
};

struct EncoderParams {
  Matrix token_embedding;     // vocab x d_model
  Matrix position_embedding;  // max_seq_len x d_model
  std::vector<LayerParams> layers;
  Matrix pooler_w, pooler_b;          // d_model x d_model, 1 x d_model
  Matrix classifier_w, classifier_b;  // d_model x 3, 1 x 3

  /// Visits (name, tensor, decays) in a fixed order.
  void for_each(const std::function<void(const std::string&, Matrix&, bool)>& f);
  void for_each(const std::function<void(const std::string&, const Matrix&, bool)>& f) const;

  EncoderParams zeros_like() const;
  void set_zero();
  std::size_t count() const;
};

struct EncoderModel {
  EncoderConfig config;
  EncoderParams params;

  /// Weights ~ N(0, 0.02^2), biases 0, layer-norm gains 1; seeded by config.seed.
  static EncoderModel initialize(const EncoderConfig& config);
};

enum class Mode { Train, Eval };

struct AttentionResult {
  Matrix output;   // n_queries x d_v
  Matrix weights;  // n_queries x n_keys; each row sums to 1
};

/// softmax(Q K^T / sqrt(d_k) + bias) V, with bias = -inf where key_mask is 0.
/// Throws UsageError on shape mismatch or when every key is masked.
AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v, const std::vector<int>& key_mask);

/// Per-row (x - mean) / sqrt(var + eps) with eps = 1e-12.
Matrix layer_norm_normalized(const Matrix& x);

using Logits = std::array<double, kNumClasses>;

/// Embeddings, post-norm encoder blocks, tanh pooler on [CLS], classifier.
/// Dropout only in Train mode and only when `rng` is given. Throws UsageError
/// if the sequence is longer than max_seq_len or invalid.
Logits forward(const EncoderModel& model, const TokenSequence& seq, Mode mode, Rng* rng = nullptr);

struct LabeledSequence {
  TokenSequence sequence;
  PerformanceClass label = PerformanceClass::Average;
};

/// Mean cross-entropy over `batch`; accumulates its gradient into `grad`
/// (which must be shaped like model.params).
double loss_and_gradient(const EncoderModel& model, const std::vector<const LabeledSequence*>& batch, Mode mode,
                         Rng* rng, EncoderParams& grad);

struct LossLogRow {
  int epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  EncoderModel model;
  std::vector<LossLogRow> log;
};

/// AdamW with global-norm clipping and seeded batch shuffling. Throws
/// TrainingError naming the batch index on a non-finite loss.
/// Rate used at 1-based `step` of `total_steps`: linear warmup, then constant or linear decay to zero.
double scheduled_rate(const EncoderConfig& config, std::size_t step, std::size_t total_steps);

TrainResult train_encoder(EncoderModel model, const std::vector<LabeledSequence>& data, const EncoderConfig& config);

ClassProbabilities predict_proba(const EncoderModel& model, const TokenSequence& seq);

std::string loss_log_csv(const std::vector<LossLogRow>& log);

/// Binary checkpoint: "TXAENC01", u64 LE header length, JSON header (config,
/// tensor names and shapes, vocabulary, extra metadata), then every tensor as
/// little-endian IEEE-754 doubles in row-major order.
std::string save_checkpoint(const EncoderModel& model, const WordVocab& vocab, const std::string& extra_json = "{}");
void load_checkpoint(const std::string& bytes, EncoderModel& model, WordVocab& vocab);

std::string config_to_json(const EncoderConfig& config);
EncoderConfig config_from_json(const std::string& text);

}  // namespace textalpha::encoder
