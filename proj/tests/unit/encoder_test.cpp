#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "textalpha/encoder.hpp"
#include "textalpha/features.hpp"
#include "textalpha/rng.hpp"

using namespace textalpha;
using namespace textalpha::encoder;

namespace {

EncoderConfig tiny(std::uint64_t seed = 1) {
  EncoderConfig c;
  c.vocab_size = 20;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 16;
  c.max_seq_len = 6;
  c.dropout = 0.1;
  c.seed = seed;
  return c;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TokenSequence seq(std::vector<int> ids, std::size_t real) {
  TokenSequence s;
  s.ids = std::move(ids);
  for (std::size_t i = 0; i < s.ids.size(); ++i) s.mask.push_back(i < real ? 1 : 0);
  return s;
}

}  // namespace

TEST(EncoderConfig, PresetsAndValidation) {
  const auto p = EncoderConfig::paper(100);
  EXPECT_EQ(p.d_model, 768u);
  EXPECT_EQ(p.n_layers, 12u);
  EXPECT_EQ(p.max_seq_len, 200u);
  EXPECT_EQ(p.learning_rate, 1e-5);
  EXPECT_EQ(p.batch_size, 16u);
  EXPECT_EQ(p.epochs, 1);
  EXPECT_EQ(p.dropout, 0.1);
  const auto d = EncoderConfig::desk(100);
  EXPECT_EQ(d.d_model, 128u);
  EXPECT_EQ(d.learning_rate, 1e-3);
  EXPECT_EQ(d.epochs, 3);
  auto bad = tiny();
  bad.n_heads = 3;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = tiny();
  bad.max_seq_len = 1;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = tiny();
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = tiny();
  bad.warmup_fraction = 1.0;
  EXPECT_THROW(bad.validate(), UsageError);
  EXPECT_EQ(p.warmup_fraction, 0.0);
  EXPECT_FALSE(p.linear_decay);
}

TEST(WordVocab, FrequencyOrderAndUnknown) {
  const auto v = WordVocab::build({{"a", "a", "b"}}, 10);
  EXPECT_EQ(v.id_of("a"), 3);
  EXPECT_EQ(v.id_of("b"), 4);
  EXPECT_EQ(v.id_of("zzz"), kUnkId);
  EXPECT_THROW(WordVocab::build({}, 10), DataError);
}

TEST(WordVocab, TopKMatchesCounting) {
  fixture::KeywordCorpusSpec spec;
  spec.n = 1000;
  std::vector<std::vector<std::string>> docs;
  std::map<std::string, std::size_t> counts;
  for (const auto& d : fixture::keyword_corpus(spec)) {
    docs.push_back(tokenize(d.text));
    for (const auto& t : docs.back()) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t cap = 50;
  const auto v = WordVocab::build(docs, cap);
  ASSERT_EQ(v.size(), cap + 3);
  for (std::size_t i = 0; i < cap; ++i) EXPECT_EQ(v.id_of(ranked[i].first), static_cast<int>(i + 3));
}

TEST(TokenSequence, EncodeTruncatesAndValidates) {
  const auto v = WordVocab::from_terms({"x", "y"});
  const auto s = encode(v, {"x", "y", "q", "x", "y"}, 4);
  EXPECT_EQ(s.ids, (std::vector<int>{kClsId, 3, 4, kUnkId}));
  const auto p = pad_to(s, 6);
  EXPECT_EQ(p.mask, (std::vector<int>{1, 1, 1, 1, 0, 0}));
  EXPECT_NO_THROW(p.validate());
  EXPECT_THROW(seq({3, 4}, 2).validate(), UsageError);
  TokenSequence gap{{kClsId, 3, 4}, {1, 0, 1}};
  EXPECT_THROW(gap.validate(), UsageError);
}

TEST(Attention, RowsSumToOneAndMaskedWeightsVanish) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(8));
    const auto real = 1 + rng.below(static_cast<std::uint64_t>(n));
    std::vector<int> mask(static_cast<std::size_t>(n), 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(real), 1);
    const auto r = attention(random_matrix(n, 4, rng) * 3.0, random_matrix(n, 4, rng) * 3.0, random_matrix(n, 5, rng), mask);
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_NEAR(r.weights.row(i).sum(), 1.0, 1e-9);
      for (Eigen::Index j = static_cast<Eigen::Index>(real); j < n; ++j) EXPECT_LT(r.weights(i, j), 1e-12);
    }
  }
}

TEST(Attention, IdenticalKeysGiveUniformWeights) {
  Rng rng(2);
  const Matrix q = random_matrix(4, 3, rng);
  Matrix k(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i) k.row(i) << 0.3, -1.2, 0.7;
  const Matrix v = random_matrix(4, 2, rng);
  const auto r = attention(q, k, v, {1, 1, 1, 0});
  const Eigen::RowVectorXd mean = v.topRows(3).colwise().mean();
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(r.weights(i, j), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR((r.output.row(i) - mean).norm(), 0.0, 1e-14);
  }
}

TEST(Attention, ThreeTokenHandExample) {
  Matrix q(3, 1), k(3, 1), v(3, 1);
  q << 1, 0, 2;
  k << 1, 2, -1;
  v << 10, 20, 30;
  const auto r = attention(q, k, v, {1, 1, 1});
  // Row 0: scores 1, 2, -1.
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(-1.0);
  EXPECT_NEAR(r.weights(0, 1), std::exp(2.0) / z, 1e-15);
  EXPECT_NEAR(r.output(0, 0), (10 * std::exp(1.0) + 20 * std::exp(2.0) + 30 * std::exp(-1.0)) / z, 1e-12);
  // Row 1: all scores zero.
  EXPECT_NEAR(r.output(1, 0), 20.0, 1e-12);
}

TEST(Attention, ShapeErrors) {
  const Matrix a = Matrix::Zero(3, 2), b = Matrix::Zero(3, 3);
  EXPECT_THROW(attention(a, b, a, {1, 1, 1}), UsageError);
  EXPECT_THROW(attention(a, a, a, {1, 1}), UsageError);
  EXPECT_THROW(attention(a, a, a, {0, 0, 0}), UsageError);
}

TEST(LayerNorm, ZeroMeanUnitVariance) {
  Rng rng(5);
  const Matrix x = random_matrix(7, 16, rng) * 5.0;
  const Matrix y = layer_norm_normalized((x.array() + 3.0).matrix());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    EXPECT_NEAR(y.row(i).mean(), 0.0, 1e-6);
    EXPECT_NEAR(y.row(i).array().square().mean(), 1.0, 1e-4);
  }
}

TEST(Forward, EvalIsDeterministicAndDropoutZeroMatchesEval) {
  auto cfg = tiny();
  const auto m = EncoderModel::initialize(cfg);
  const auto s = seq({kClsId, 5, 6, 7, 0, 0}, 4);
  EXPECT_EQ(forward(m, s, Mode::Eval), forward(m, s, Mode::Eval));
  cfg.dropout = 0.0;
  auto m0 = m;
  m0.config = cfg;
  Rng rng(3);
  EXPECT_EQ(forward(m0, s, Mode::Train, &rng), forward(m0, s, Mode::Eval));
  Rng rng2(3);
  EXPECT_NE(forward(m, s, Mode::Train, &rng2), forward(m, s, Mode::Eval));
}

TEST(Forward, TooLongSequenceIsUsageError) {
  const auto m = EncoderModel::initialize(tiny());
  EXPECT_THROW(forward(m, seq({kClsId, 3, 3, 3, 3, 3, 3}, 7), Mode::Eval), UsageError);
}

TEST(Forward, PaddingContentIsIgnored) {
  const auto m = EncoderModel::initialize(tiny());
  const auto a = forward(m, seq({kClsId, 5, 6, 0, 0, 0}, 3), Mode::Eval);
  const auto b = forward(m, seq({kClsId, 5, 6, 9, 11, 4}, 3), Mode::Eval);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Forward, PermutationInvariantWithoutPositions) {
  Rng rng(12);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = EncoderModel::initialize(tiny(seed));
    m.params.for_each([&](const std::string&, Matrix& t, bool) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.2 * rng.normal();
    });
    m.params.position_embedding.setZero();
    std::vector<int> body{4, 9, 13, 17};
    const auto base = forward(m, seq({kClsId, body[0], body[1], body[2], body[3], 0}, 5), Mode::Eval);
    for (int p = 0; p < 6; ++p) {
      rng.shuffle(body);
      const auto perm = forward(m, seq({kClsId, body[0], body[1], body[2], body[3], 0}, 5), Mode::Eval);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(base[k], perm[k], 1e-9);
    }
  }
}

TEST(Gradient, EveryTensorMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gc = textalpha::testing::check_encoder_gradient(seed);
    EXPECT_LT(gc.max_rel_error, 1e-4) << "seed " << seed << " worst " << gc.worst;
    const auto m = EncoderModel::initialize(tiny());
    EXPECT_EQ(gc.checked, m.params.count());
    EXPECT_EQ(gc.tensors, 2u + 16u + 4u);
  }
}

TEST(Training, ProbabilitiesSumToOneAndReproducible) {
  const auto data = textalpha::testing::keyword_split(90, 30, 1.0, false, 3);
  const auto vocab = WordVocab::build(data.train_docs, 200);
  auto cfg = EncoderConfig::desk(vocab.size());
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.n_layers = 1;
  cfg.max_seq_len = 32;
  cfg.epochs = 1;
  std::vector<LabeledSequence> train;
  for (std::size_t i = 0; i < data.train_docs.size(); ++i) train.push_back({encode(vocab, data.train_docs[i], 32), data.train_labels[i]});
  const auto a = train_encoder(EncoderModel::initialize(cfg), train, cfg);
  const auto b = train_encoder(EncoderModel::initialize(cfg), train, cfg);
  EXPECT_EQ(loss_log_csv(a.log), loss_log_csv(b.log));
  EXPECT_EQ(loss_log_csv(a.log).rfind("epoch,step,loss\n", 0), 0u);
  EXPECT_EQ(a.log.size(), (90u + cfg.batch_size - 1) / cfg.batch_size);
  for (const auto& d : data.test_docs) {
    const auto p = predict_proba(a.model, encode(vocab, d, 32));
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-9);
  }
}

TEST(Training, LearningRateSchedule) {
  auto c = tiny();
  c.learning_rate = 1e-2;
  for (std::size_t step : {1u, 5u, 10u}) EXPECT_EQ(scheduled_rate(c, step, 10), 1e-2);
  c.warmup_fraction = 0.2;
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 1, 10), 0.5e-2);
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 2, 10), 1e-2);
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 10, 10), 1e-2);
  c.linear_decay = true;
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 2, 10), 1e-2);
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 6, 10), 0.5e-2);
  EXPECT_DOUBLE_EQ(scheduled_rate(c, 10, 10), 0.0);
  double prev = 1.0;
  for (std::size_t step = 2; step <= 10; ++step) {
    const double r = scheduled_rate(c, step, 10);
    EXPECT_LE(r, prev);
    prev = r;
  }
  // Fewer steps than one warmup step: the first step still trains.
  EXPECT_GT(scheduled_rate(c, 1, 1), 0.0);
}

TEST(Training, MissingClassAndNonFiniteLoss) {
  auto cfg = tiny();
  const auto m = EncoderModel::initialize(cfg);
  std::vector<LabeledSequence> one_class{{seq({kClsId, 3}, 2), PerformanceClass::Over}};
  EXPECT_THROW(train_encoder(m, one_class, cfg), DataError);
  std::vector<LabeledSequence> data{{seq({kClsId, 3}, 2), PerformanceClass::Under},
                                    {seq({kClsId, 4}, 2), PerformanceClass::Average},
                                    {seq({kClsId, 5}, 2), PerformanceClass::Over}};
  auto broken = m;
  broken.params.classifier_w(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    train_encoder(broken, data, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("batch 0"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, BinaryRoundTrip) {
  const auto vocab = WordVocab::from_terms({"alpha", "beta", "gamma"});
  auto cfg = tiny();
  cfg.vocab_size = vocab.size();
  const auto m = EncoderModel::initialize(cfg);
  const auto bytes = save_checkpoint(m, vocab, R"({"note":"x"})");
  EXPECT_EQ(bytes.substr(0, 8), "TXAENC01");
  EncoderModel back;
  WordVocab vocab_back;
  load_checkpoint(bytes, back, vocab_back);
  EXPECT_EQ(vocab_back.terms(), vocab.terms());
  EXPECT_EQ(config_to_json(back.config), config_to_json(m.config));
  const auto s = seq({kClsId, 3, 4, 5}, 4);
  EXPECT_EQ(forward(back, s, Mode::Eval), forward(m, s, Mode::Eval));
  EXPECT_THROW(load_checkpoint(bytes.substr(0, bytes.size() - 3), back, vocab_back), DataError);
  EXPECT_THROW(load_checkpoint("garbage", back, vocab_back), DataError);
}
